use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::cuisine::CuisineClass;
use crate::error::{Error, Result};
use crate::weak::{bootstrap_expand, tokenize_name, BootstrapThresholds, BootstrapWord, BtmModel, Taxonomy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LabelSource {
    Seed,
    Bootstrap,
    Topic,
    Truth,
}

impl fmt::Display for LabelSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelSource::Seed => "seed",
            LabelSource::Bootstrap => "bootstrap",
            LabelSource::Topic => "topic",
            LabelSource::Truth => "truth",
        })
    }
}

impl FromStr for LabelSource {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "seed" => Ok(LabelSource::Seed),
            "bootstrap" => Ok(LabelSource::Bootstrap),
            "topic" => Ok(LabelSource::Topic),
            "truth" => Ok(LabelSource::Truth),
            other => Err(format!("unknown label source {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Label {
    pub class: CuisineClass,
    pub source: LabelSource,
}

/// At most one label per restaurant, keyed by restaurant id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelSet {
    labels: BTreeMap<String, Label>,
}

impl LabelSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert unless the restaurant already carries a label. Returns whether
    /// the label was stored.
    pub fn insert(&mut self, id: &str, class: CuisineClass, source: LabelSource) -> bool {
        if self.labels.contains_key(id) {
            return false;
        }
        self.labels.insert(id.to_string(), Label { class, source });
        true
    }

    pub fn get(&self, id: &str) -> Option<Label> {
        self.labels.get(id).copied()
    }

    pub fn class_of(&self, id: &str) -> Option<CuisineClass> {
        self.labels.get(id).map(|l| l.class)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.labels.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Label)> {
        self.labels.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn count_by_source(&self, source: LabelSource) -> usize {
        self.labels.values().filter(|l| l.source == source).count()
    }

    pub fn coverage(&self, n_restaurants: usize) -> f64 {
        if n_restaurants == 0 {
            0.0
        } else {
            self.len() as f64 / n_restaurants as f64
        }
    }

    /// `restaurant_id<TAB>cuisine<TAB>source`, sorted by id.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (id, l) in &self.labels {
            out.push_str(&format!("{id}\t{}\t{}\n", l.class, l.source));
        }
        out
    }

    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut set = LabelSet::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let bad = |why: String| Error::Malformed {
                line: i as u64 + 1,
                reason: why,
            };
            let (id, class, source) = match cols.as_slice() {
                [id, class, source] => (*id, *class, source.parse().map_err(bad)?),
                [id, class] => (*id, *class, LabelSource::Truth),
                _ => return Err(bad(format!("expected 2 or 3 columns, found {}", cols.len()))),
            };
            let class: CuisineClass = class.parse().map_err(bad)?;
            if !set.insert(id, class, source) {
                return Err(bad(format!("duplicate label for {id}")));
            }
        }
        Ok(set)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        LabelSet::parse_tsv(&text)
    }
}

/// Ground truth in the generator's `restaurant_id<TAB>cuisine` format.
pub fn read_truth_labels(path: &Path) -> Result<LabelSet> {
    LabelSet::load(path)
}

#[derive(Debug, Clone)]
pub struct NamedRestaurant {
    pub id: String,
    pub name: String,
}

fn unique_class<'a>(
    tokens: impl Iterator<Item = &'a String>,
    lookup: impl Fn(&str) -> Option<CuisineClass>,
) -> Option<(CuisineClass, &'a String)> {
    let mut found: Option<(CuisineClass, &String)> = None;
    for t in tokens {
        if let Some(c) = lookup(t) {
            match found {
                None => found = Some((c, t)),
                Some((prev, _)) if prev != c => return None,
                Some(_) => {}
            }
        }
    }
    found
}

/// Label a name from seed keywords. Hits from two or more classes are a
/// conflict and yield no label.
pub fn seed_label(name: &str, taxonomy: &Taxonomy) -> Option<(CuisineClass, String)> {
    let tokens = tokenize_name(name);
    unique_class(tokens.iter(), |t| taxonomy.class_of(t)).map(|(c, kw)| (c, kw.clone()))
}

/// Seed keywords first; bootstrapped words then label the remaining names
/// under the same single-class rule.
pub fn apply_labels(names: &[NamedRestaurant], taxonomy: &Taxonomy, words: &[BootstrapWord]) -> LabelSet {
    let boot: BTreeMap<&str, CuisineClass> = words.iter().map(|w| (w.word.as_str(), w.class)).collect();
    let mut labels = LabelSet::new();
    for r in names {
        let tokens = tokenize_name(&r.name);
        if let Some((c, _)) = unique_class(tokens.iter(), |t| taxonomy.class_of(t)) {
            labels.insert(&r.id, c, LabelSource::Seed);
            continue;
        }
        let has_seed_hit = tokens.iter().any(|t| taxonomy.contains(t));
        if has_seed_hit {
            // seed conflict: bootstrap words never override it
            continue;
        }
        if let Some((c, _)) = unique_class(tokens.iter(), |t| boot.get(t).copied()) {
            labels.insert(&r.id, c, LabelSource::Bootstrap);
        }
    }
    labels
}

#[derive(Debug, Clone)]
pub struct WeakLabelOutcome {
    pub labels: LabelSet,
    /// Accepted bootstrap words across all rounds, sorted by word.
    pub words: Vec<BootstrapWord>,
}

impl WeakLabelOutcome {
    /// Seed plus bootstrapped words: everything used for labeling.
    pub fn labeling_words(&self, taxonomy: &Taxonomy) -> BTreeSet<String> {
        let mut set: BTreeSet<String> = CuisineClass::ALL
            .iter()
            .flat_map(|c| taxonomy.keywords(*c).iter().cloned())
            .collect();
        set.extend(self.words.iter().map(|w| w.word.clone()));
        set
    }
}

/// Seed labeling followed by `rounds` rounds of bootstrapped expansion.
pub fn weak_label(
    names: &[NamedRestaurant],
    taxonomy: &Taxonomy,
    thresholds: &BootstrapThresholds,
    rounds: usize,
) -> WeakLabelOutcome {
    let mut words: Vec<BootstrapWord> = Vec::new();
    let mut labels = apply_labels(names, taxonomy, &words);
    for _ in 0..rounds {
        if labels.is_empty() {
            break;
        }
        let known: BTreeSet<String> = words.iter().map(|w| w.word.clone()).collect();
        let fresh: Vec<BootstrapWord> = bootstrap_expand(&labels, names, taxonomy, thresholds)
            .into_iter()
            .filter(|w| !known.contains(&w.word))
            .collect();
        if fresh.is_empty() {
            break;
        }
        words.extend(fresh);
        words.sort_by(|a, b| a.word.cmp(&b.word));
        labels = apply_labels(names, taxonomy, &words);
    }
    WeakLabelOutcome { labels, words }
}

/// Topic-model label augmentation for keyword-unlabeled restaurants.
///
/// A restaurant is labeled when its dominant topic has posterior at least
/// `min_posterior` and that topic maps to a single cuisine through the
/// sprinkle-token mass (see [`BtmModel::topic_cuisines`]).
pub fn topic_labels(
    model: &BtmModel,
    names: &[NamedRestaurant],
    labels: &LabelSet,
    min_posterior: f64,
) -> Vec<(String, CuisineClass)> {
    let topic_map = model.topic_cuisines(min_posterior);
    let mut out = Vec::new();
    for r in names {
        if labels.contains(&r.id) {
            continue;
        }
        let tokens = tokenize_name(&r.name);
        let Some(post) = model.doc_topic_posterior(&tokens) else {
            continue;
        };
        let (best, p) = post
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (t, p)| if p > acc.1 { (t, p) } else { acc });
        if p >= min_posterior {
            if let Some(c) = topic_map[best] {
                out.push((r.id.clone(), c));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn named(list: &[(&str, &str)]) -> Vec<NamedRestaurant> {
        list.iter()
            .map(|(id, name)| NamedRestaurant {
                id: id.to_string(),
                name: name.to_string(),
            })
            .collect()
    }

    #[test]
    fn seed_label_examples() {
        let tax = Taxonomy::bundled();
        assert_eq!(
            seed_label("PEKING GARDEN", &tax),
            Some((CuisineClass::EastAsian, "PEKING".to_string()))
        );
        assert_eq!(seed_label("JOE'S PLACE", &tax), None);
        assert_eq!(seed_label("TACO SUSHI FUSION", &tax), None);
        assert_eq!(
            seed_label("Taco Taqueria", &tax).map(|x| x.0),
            Some(CuisineClass::LatinAmerican)
        );
    }

    #[test]
    fn seed_takes_precedence_over_bootstrap() {
        let tax = Taxonomy::bundled();
        let names = named(&[("R1", "Peking Wok"), ("R2", "Golden Wok"), ("R3", "Wok Taco")]);
        let words = vec![BootstrapWord {
            word: "WOK".into(),
            class: CuisineClass::Fastfood,
            freq: 1.0,
            prec: 1.0,
            sig: 1.0,
        }];
        let labels = apply_labels(&names, &tax, &words);
        assert_eq!(
            labels.get("R1"),
            Some(Label {
                class: CuisineClass::EastAsian,
                source: LabelSource::Seed
            })
        );
        assert_eq!(labels.get("R2").unwrap().source, LabelSource::Bootstrap);
        assert_eq!(labels.get("R3").unwrap().class, CuisineClass::LatinAmerican);
        assert_eq!(apply_labels(&names, &tax, &words), labels);
    }

    #[test]
    fn tsv_round_trip() {
        let mut set = LabelSet::new();
        set.insert("R2", CuisineClass::Bar, LabelSource::Bootstrap);
        set.insert("R1", CuisineClass::MMA, LabelSource::Seed);
        assert!(!set.insert("R1", CuisineClass::Bar, LabelSource::Seed));
        let text = set.to_tsv();
        assert_eq!(text, "R1\tMMA\tseed\nR2\tBar\tbootstrap\n");
        assert_eq!(LabelSet::parse_tsv(&text).unwrap(), set);
        let truth = LabelSet::parse_tsv("R1\tBar\n").unwrap();
        assert_eq!(truth.get("R1").unwrap().source, LabelSource::Truth);
        assert!(LabelSet::parse_tsv("R1\tBar\nR1\tMMA\n").is_err());
    }
}
