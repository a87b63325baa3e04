use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::txn::TxnIndex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// One document per cardholder, restaurants as words.
    CustomerDocs,
    /// One document per restaurant, cardholders as words.
    RestaurantDocs,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::CustomerDocs => "customer-docs",
            Direction::RestaurantDocs => "restaurant-docs",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub direction: Direction,
    /// Sorted by document id; tokens in chronological order.
    pub docs: Vec<(String, Vec<String>)>,
    pub vocab: BTreeMap<String, u64>,
}

impl Corpus {
    pub fn from_docs(direction: Direction, docs: Vec<(String, Vec<String>)>) -> Self {
        let mut vocab: BTreeMap<String, u64> = BTreeMap::new();
        for (_, toks) in &docs {
            for t in toks {
                *vocab.entry(t.clone()).or_default() += 1;
            }
        }
        Corpus { direction, docs, vocab }
    }

    pub fn n_tokens(&self) -> usize {
        self.docs.iter().map(|(_, t)| t.len()).sum()
    }
}

pub fn build_customer_corpus(index: &TxnIndex) -> Corpus {
    let txns = index.transactions();
    let docs = index
        .cardholders()
        .map(|(c, idx)| (c.to_string(), idx.iter().map(|&i| txns[i].merchant_id.clone()).collect()))
        .collect();
    Corpus::from_docs(Direction::CustomerDocs, docs)
}

pub fn build_restaurant_corpus(index: &TxnIndex) -> Corpus {
    let docs = index
        .restaurants()
        .map(|r| {
            let toks = index.restaurant_txns(r).map(|t| t.cardholder_id.clone()).collect();
            (r.id.clone(), toks)
        })
        .collect();
    Corpus::from_docs(Direction::RestaurantDocs, docs)
}

/// Positions within `window` of `i` in a document of length `n`, clipped at
/// the document edges, excluding `i` itself.
pub fn context_range(i: usize, n: usize, window: usize) -> impl Iterator<Item = usize> {
    let lo = i.saturating_sub(window);
    let hi = (i + window + 1).min(n);
    (lo..hi).filter(move |&j| j != i)
}

/// Number of (center, context) pairs a skip-gram pass visits.
pub fn skipgram_pair_count(docs: &[Vec<u32>], window: usize) -> usize {
    docs.iter()
        .map(|d| (0..d.len()).map(|i| context_range(i, d.len(), window).count()).sum::<usize>())
        .sum()
}
