use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::weak::{btm_fit, BitermCorpus, BtmConfig, BtmModel};

pub const DEFAULT_K_VALUES: [usize; 7] = [5, 10, 15, 20, 30, 40, 50];

/// Per-topic UMass scores of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct Coherence {
    pub k: usize,
    pub scores: Vec<f64>,
    /// Top words that occur in no document; scored with `D(w) = 1`.
    pub missing: Vec<String>,
}

impl Coherence {
    pub fn mean(&self) -> f64 {
        if self.scores.is_empty() {
            return 0.0;
        }
        self.scores.iter().sum::<f64>() / self.scores.len() as f64
    }
}

/// Document occurrence lists, one sorted id list per word.
struct DocIndex {
    postings: HashMap<String, Vec<u32>>,
}

impl DocIndex {
    fn new(docs: &[Vec<String>]) -> Self {
        let mut postings: HashMap<String, Vec<u32>> = HashMap::new();
        for (d, doc) in docs.iter().enumerate() {
            for w in doc.iter().collect::<BTreeSet<_>>() {
                postings.entry(w.clone()).or_default().push(d as u32);
            }
        }
        DocIndex { postings }
    }

    fn count(&self, w: &str) -> usize {
        self.postings.get(w).map_or(0, Vec::len)
    }

    fn co_count(&self, a: &str, b: &str) -> usize {
        let (Some(pa), Some(pb)) = (self.postings.get(a), self.postings.get(b)) else {
            return 0;
        };
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < pa.len() && j < pb.len() {
            match pa[i].cmp(&pb[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }
}

fn score_with(index: &DocIndex, model: &BtmModel, top_n: usize) -> Coherence {
    let mut missing = BTreeSet::new();
    let scores = (0..model.k)
        .map(|t| {
            let words: Vec<&str> = model
                .top_words(t, top_n)
                .into_iter()
                .map(|w| model.vocab[w].as_str())
                .collect();
            let mut s = 0.0;
            for w in &words {
                if index.count(w) == 0 {
                    missing.insert(w.to_string());
                }
            }
            for i in 1..words.len() {
                for j in 0..i {
                    let dj = index.count(words[j]);
                    let dij = index.co_count(words[i], words[j]);
                    s += ((dij as f64 + 1.0) / dj.max(1) as f64).ln();
                }
            }
            s
        })
        .collect();
    Coherence {
        k: model.k,
        scores,
        missing: missing.into_iter().collect(),
    }
}

/// UMass coherence of every topic over its `top_n` most probable words,
/// `sum_{i>j} ln((D(w_i, w_j) + 1) / D(w_j))` with words ranked by topic
/// probability and `D` counting documents.
pub fn umass_coherence(model: &BtmModel, docs: &[Vec<String>], top_n: usize) -> Result<Coherence> {
    if top_n < 2 {
        return Err(Error::config("coherence top_n must be >= 2"));
    }
    Ok(score_with(&DocIndex::new(docs), model, top_n))
}

/// Fit one model per `k` (in parallel) and score it. Rows come back sorted
/// by `k`.
pub fn coherence_sweep(
    corpus: &BitermCorpus,
    docs: &[Vec<String>],
    k_values: &[usize],
    base: &BtmConfig,
) -> Result<Vec<Coherence>> {
    if base.top_n < 2 {
        return Err(Error::config("coherence top_n must be >= 2"));
    }
    let index = DocIndex::new(docs);
    let mut ks: Vec<usize> = k_values.to_vec();
    ks.sort_unstable();
    ks.dedup();
    ks.par_iter()
        .map(|&k| {
            let model = btm_fit(corpus, &base.with_k(k))?;
            Ok(score_with(&index, &model, base.top_n))
        })
        .collect()
}

/// `k<TAB>mean_umass` rows.
pub fn write_coherence_report(rows: &[Coherence]) -> String {
    let mut out = String::from("k\tmean_umass\n");
    for r in rows {
        out.push_str(&format!("{}\t{}\n", r.k, r.mean()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weak::{extract_biterms, BtmSampler};

    fn docs(list: &[&[&str]]) -> Vec<Vec<String>> {
        list.iter().map(|d| d.iter().map(|w| w.to_string()).collect()).collect()
    }

    /// A model whose single topic ranks words by the given probabilities.
    fn fixed_model(words: &[(&str, f64)]) -> BtmModel {
        let d: Vec<Vec<String>> = vec![words.iter().map(|(w, _)| w.to_string()).collect()];
        let corpus = extract_biterms(&d, None);
        let cfg = BtmConfig {
            k: 1,
            gibbs_iters: 0,
            ..BtmConfig::default()
        };
        let mut m = BtmSampler::new(&corpus, &cfg).unwrap().model();
        for (w, p) in words {
            let id = m.word_id(w).unwrap();
            m.phi[0][id] = *p;
        }
        m
    }

    #[test]
    fn always_co_occurring_words() {
        let m = fixed_model(&[("A", 0.5), ("B", 0.3), ("C", 0.2)]);
        let d = docs(&[&["A", "B", "C"], &["A", "B", "C"]]);
        let c = umass_coherence(&m, &d, 3).unwrap();
        // three pairs, each ln(3/2)
        assert!((c.scores[0] - 3.0 * (1.5f64).ln()).abs() < 1e-15);
    }

    #[test]
    fn never_co_occurring_words() {
        let m = fixed_model(&[("A", 0.6), ("B", 0.4)]);
        let d = docs(&[&["A"], &["A"], &["B"]]);
        let c = umass_coherence(&m, &d, 2).unwrap();
        assert_eq!(c.scores[0], (0.5f64).ln());
    }

    #[test]
    fn three_document_hand_count() {
        // D(A)=3, D(B)=2, D(C)=1, D(A,B)=2, D(A,C)=1, D(B,C)=0
        let m = fixed_model(&[("A", 0.5), ("B", 0.3), ("C", 0.2)]);
        let d = docs(&[&["A", "B"], &["A", "B", "X"], &["A", "C"]]);
        let expected = (3.0f64 / 3.0).ln() + (2.0f64 / 3.0).ln() + (1.0f64 / 2.0).ln();
        assert_eq!(umass_coherence(&m, &d, 3).unwrap().scores[0], expected);
    }

    #[test]
    fn absent_words_are_reported() {
        let m = fixed_model(&[("A", 0.6), ("Z", 0.4)]);
        let c = umass_coherence(&m, &docs(&[&["A"]]), 2).unwrap();
        assert_eq!(c.missing, vec!["Z".to_string()]);
        assert_eq!(c.scores[0], 0.0);
        let c = umass_coherence(&fixed_model(&[("Z", 0.6), ("A", 0.4)]), &docs(&[&["A"]]), 2).unwrap();
        assert_eq!(c.scores[0], (1.0f64).ln());
        assert!(umass_coherence(&m, &docs(&[&["A"]]), 1).is_err());
    }

    #[test]
    fn sweep_rows_are_sorted() {
        let d = docs(&[&["A", "B"], &["B", "C"], &["C", "D"], &["A", "D"]]);
        let corpus = extract_biterms(&d, None);
        let base = BtmConfig {
            gibbs_iters: 5,
            top_n: 2,
            ..BtmConfig::default()
        };
        let rows = coherence_sweep(&corpus, &d, &[5, 2, 3], &base).unwrap();
        assert_eq!(rows.iter().map(|r| r.k).collect::<Vec<_>>(), vec![2, 3, 5]);
        assert_eq!(coherence_sweep(&corpus, &d, &[4], &base).unwrap().len(), 1);
        assert!(write_coherence_report(&rows).starts_with("k\tmean_umass\n2\t"));
    }
}
