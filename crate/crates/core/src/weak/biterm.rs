use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cuisine::CuisineClass;

/// Unordered word pair, stored with the smaller vocabulary id first.
pub type Biterm = (u32, u32);

/// Biterms pooled over a whole corpus of short documents.
#[derive(Debug, Clone, PartialEq)]
pub struct BitermCorpus {
    /// Sorted vocabulary; ids index into it.
    pub vocab: Vec<String>,
    /// Token occurrences per word across the documents.
    pub word_freq: Vec<u64>,
    pub biterms: Vec<Biterm>,
    index: HashMap<String, u32>,
}

impl BitermCorpus {
    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.biterms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.biterms.is_empty()
    }

    /// Biterms as sorted string pairs, for inspection.
    pub fn pairs(&self) -> Vec<(String, String)> {
        let mut out: Vec<_> = self
            .biterms
            .iter()
            .map(|&(a, b)| (self.vocab[a as usize].clone(), self.vocab[b as usize].clone()))
            .collect();
        out.sort();
        out
    }

    fn with_biterms(&self, biterms: Vec<Biterm>) -> Self {
        BitermCorpus {
            vocab: self.vocab.clone(),
            word_freq: self.word_freq.clone(),
            biterms,
            index: self.index.clone(),
        }
    }
}

/// Append the sprinkle token of each labeled document, if any.
pub(crate) fn sprinkled_docs(docs: &[Vec<String>], sprinkle: Option<&[Option<CuisineClass>]>) -> Vec<Vec<String>> {
    docs.iter()
        .enumerate()
        .map(|(i, d)| {
            let mut d = d.clone();
            if let Some(Some(c)) = sprinkle.and_then(|s| s.get(i)) {
                d.push(c.sprinkle_token());
            }
            d
        })
        .collect()
}

/// Every unordered pair of token positions in every document. With
/// sprinkling, labeled documents get their class token appended first, so a
/// single-word labeled name still yields one biterm.
pub fn extract_biterms(docs: &[Vec<String>], sprinkle: Option<&[Option<CuisineClass>]>) -> BitermCorpus {
    let docs = sprinkled_docs(docs, sprinkle);
    let vocab: Vec<String> = docs
        .iter()
        .flatten()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: HashMap<String, u32> = vocab.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
    let mut word_freq = vec![0u64; vocab.len()];
    let mut biterms = Vec::new();
    for d in &docs {
        let ids: Vec<u32> = d.iter().map(|w| index[w]).collect();
        for &id in &ids {
            word_freq[id as usize] += 1;
        }
        for i in 0..ids.len() {
            for j in i + 1..ids.len() {
                biterms.push((ids[i].min(ids[j]), ids[i].max(ids[j])));
            }
        }
    }
    BitermCorpus {
        vocab,
        word_freq,
        biterms,
        index,
    }
}

/// Downsample frequent-word biterms.
///
/// Each biterm is keyed by the corpus frequency of its rarer word. Strata
/// boundaries are the `strata`-quantiles of the per-word frequency
/// distribution, so words of equal frequency always share a stratum. Every
/// stratum is then cut, without replacement, to at most `cap_ratio` times
/// the smallest nonempty stratum. Kept biterms retain their input order.
/// A `cap_ratio` below 1 is treated as 1.
pub fn stratified_sample_biterms(corpus: &BitermCorpus, strata: usize, cap_ratio: f64, seed: u64) -> BitermCorpus {
    let strata = strata.max(1);
    if strata == 1 || corpus.biterms.is_empty() {
        return corpus.clone();
    }
    let mut freqs: Vec<u64> = corpus.word_freq.iter().copied().filter(|&f| f > 0).collect();
    freqs.sort_unstable();
    let cuts: Vec<u64> = (1..strata).map(|s| freqs[(s * freqs.len() / strata).min(freqs.len() - 1)]).collect();

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); strata];
    for (i, &(a, b)) in corpus.biterms.iter().enumerate() {
        let key = corpus.word_freq[a as usize].min(corpus.word_freq[b as usize]);
        let stratum = cuts.iter().filter(|&&c| key > c).count();
        members[stratum].push(i);
    }
    let smallest = members.iter().map(Vec::len).filter(|&n| n > 0).min().unwrap_or(0);
    let cap = (cap_ratio.max(1.0) * smallest as f64).floor() as usize;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![false; corpus.biterms.len()];
    for m in &mut members {
        if m.len() > cap {
            m.shuffle(&mut rng);
            m.truncate(cap);
        }
        for &i in m.iter() {
            keep[i] = true;
        }
    }
    let biterms = corpus
        .biterms
        .iter()
        .zip(&keep)
        .filter(|(_, k)| **k)
        .map(|(b, _)| *b)
        .collect();
    corpus.with_biterms(biterms)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    fn pair(a: &str, b: &str) -> (String, String) {
        (a.to_string(), b.to_string())
    }

    #[test]
    fn all_pairs_of_a_document() {
        let c = extract_biterms(&[doc(&["A", "B", "C"])], None);
        assert_eq!(c.pairs(), vec![pair("A", "B"), pair("A", "C"), pair("B", "C")]);
    }

    #[test]
    fn single_word_documents() {
        let docs = [doc(&["PEKING"])];
        assert!(extract_biterms(&docs, None).is_empty());
        let c = extract_biterms(&docs, Some(&[Some(CuisineClass::EastAsian)]));
        assert_eq!(c.pairs(), vec![pair("#EASTASIAN", "PEKING")]);
        assert!(extract_biterms(&[doc(&[])], Some(&[None])).is_empty());
    }

    #[test]
    fn word_frequencies_count_tokens() {
        let c = extract_biterms(&[doc(&["A", "B"]), doc(&["A"])], None);
        assert_eq!(c.word_freq[c.id("A").unwrap() as usize], 2);
        assert_eq!(c.word_freq[c.id("B").unwrap() as usize], 1);
    }

    #[test]
    fn one_stratum_is_a_no_op() {
        let c = extract_biterms(&[doc(&["A", "B", "C"]), doc(&["A", "D"])], None);
        assert_eq!(stratified_sample_biterms(&c, 1, 1.0, 3), c);
    }

    #[test]
    fn uniform_frequencies_are_untouched() {
        let docs: Vec<_> = (0..20).map(|i| doc(&[&format!("W{i}"), &format!("V{i}")])).collect();
        let c = extract_biterms(&docs, None);
        for cap in [1.0, 2.0, 10.0] {
            assert_eq!(stratified_sample_biterms(&c, 4, cap, 9), c);
        }
    }

    #[test]
    fn zipfian_head_is_capped() {
        // word i appears in ~ 200/(i+1) documents, each document has 3 words
        let mut docs = Vec::new();
        let mut slots: Vec<String> = Vec::new();
        for i in 0..60 {
            for _ in 0..(200 / (i + 1)).max(1) {
                slots.push(format!("W{i}"));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        slots.shuffle(&mut rng);
        for chunk in slots.chunks(3) {
            docs.push(chunk.to_vec());
        }
        let c = extract_biterms(&docs, None);
        let sampled = stratified_sample_biterms(&c, 4, 2.0, 5);
        assert!(sampled.len() < c.len());

        // recount strata after sampling, independently of the sampler
        let mut freqs: Vec<u64> = c.word_freq.clone();
        freqs.sort_unstable();
        let cuts: Vec<u64> = (1..4).map(|s| freqs[s * freqs.len() / 4]).collect();
        let mut sizes = [0usize; 4];
        for &(a, b) in &sampled.biterms {
            let key = c.word_freq[a as usize].min(c.word_freq[b as usize]);
            sizes[cuts.iter().filter(|&&x| key > x).count()] += 1;
        }
        let nonempty: Vec<usize> = sizes.iter().copied().filter(|&n| n > 0).collect();
        let (head, tail) = (*nonempty.last().unwrap(), nonempty[0]);
        assert!(nonempty.len() >= 2);
        assert!(head <= 2 * tail, "head {head} tail {tail}");
        assert_eq!(sampled, stratified_sample_biterms(&c, 4, 2.0, 5));
    }
}
