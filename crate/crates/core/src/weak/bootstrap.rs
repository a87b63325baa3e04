use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::cuisine::CuisineClass;
use crate::error::{Error, Result};
use crate::weak::{tokenize_name, LabelSet, NamedRestaurant, Taxonomy};

/// Minimum frequency, precision and significance a candidate word needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapThresholds {
    /// Fraction of all names containing the word, in (0, 1].
    pub theta_f: f64,
    /// Fraction of labeled names with the word that carry its majority label, in (0, 1].
    pub theta_p: f64,
    /// Labeled-to-unlabeled ratio among names with the word, > 0.
    pub theta_s: f64,
}

impl Default for BootstrapThresholds {
    fn default() -> Self {
        BootstrapThresholds {
            theta_f: 5e-4,
            theta_p: 0.9,
            theta_s: 0.5,
        }
    }
}

impl BootstrapThresholds {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v <= 1.0;
        if !unit(self.theta_f) {
            return Err(Error::config(format!("bootstrap.theta_f must be in (0,1], got {}", self.theta_f)));
        }
        if !unit(self.theta_p) {
            return Err(Error::config(format!("bootstrap.theta_p must be in (0,1], got {}", self.theta_p)));
        }
        if !(self.theta_s > 0.0 && self.theta_s.is_finite()) {
            return Err(Error::config(format!("bootstrap.theta_s must be > 0, got {}", self.theta_s)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapWord {
    pub word: String,
    pub class: CuisineClass,
    pub freq: f64,
    pub prec: f64,
    pub sig: f64,
}

#[derive(Default)]
struct WordStats {
    names: usize,
    unlabeled: usize,
    by_class: [usize; CuisineClass::COUNT],
}

/// Mine non-seed words that pass all three thresholds, each paired with the
/// majority label of the labeled names containing it. Counts are per name,
/// so a word repeated inside one name counts once. Majority ties go to the
/// lower class code; words seen only in unlabeled names are rejected.
pub fn bootstrap_expand(
    labeled: &LabelSet,
    names: &[NamedRestaurant],
    taxonomy: &Taxonomy,
    th: &BootstrapThresholds,
) -> Vec<BootstrapWord> {
    if names.is_empty() {
        return Vec::new();
    }
    let mut stats: BTreeMap<String, WordStats> = BTreeMap::new();
    for r in names {
        let label = labeled.class_of(&r.id);
        let distinct: BTreeSet<String> = tokenize_name(&r.name).into_iter().collect();
        for w in distinct {
            if taxonomy.contains(&w) {
                continue;
            }
            let s = stats.entry(w).or_default();
            s.names += 1;
            match label {
                Some(c) => s.by_class[c.code()] += 1,
                None => s.unlabeled += 1,
            }
        }
    }

    let total = names.len() as f64;
    stats
        .into_iter()
        .filter_map(|(word, s)| {
            let n_labeled: usize = s.by_class.iter().sum();
            if n_labeled == 0 {
                return None;
            }
            let (maj, hits) = s
                .by_class
                .iter()
                .enumerate()
                .fold((0, 0), |acc, (c, &n)| if n > acc.1 { (c, n) } else { acc });
            let freq = s.names as f64 / total;
            let prec = hits as f64 / n_labeled as f64;
            let sig = n_labeled as f64 / s.unlabeled.max(1) as f64;
            (freq >= th.theta_f && prec >= th.theta_p && sig >= th.theta_s).then(|| BootstrapWord {
                word,
                class: CuisineClass::from_code(maj).expect("class code in range"),
                freq,
                prec,
                sig,
            })
        })
        .collect()
}

/// `word<TAB>cuisine<TAB>freq<TAB>prec<TAB>sig`, one accepted word per line.
pub fn write_bootstrap_report(words: &[BootstrapWord]) -> String {
    let mut out = String::new();
    for w in words {
        out.push_str(&format!("{}\t{}\t{}\t{}\t{}\n", w.word, w.class, w.freq, w.prec, w.sig));
    }
    out
}
