use std::collections::BTreeSet;

use crate::embed::EmbeddingMatrix;
use crate::weak::tokenize_name;

/// Max-pool the pretrained vectors of a name's tokens after dropping the
/// labeling words. Tokens are matched lowercase. Returns the vector and
/// whether nothing matched (the vector is then all zero).
pub fn name_embedding(name: &str, labeling_words: &BTreeSet<String>, pretrained: &EmbeddingMatrix) -> (Vec<f64>, bool) {
    let mut pooled: Option<Vec<f64>> = None;
    for tok in tokenize_name(name) {
        if labeling_words.contains(&tok) {
            continue;
        }
        let Some(v) = pretrained.get(&tok.to_lowercase()) else {
            continue;
        };
        match pooled.as_mut() {
            None => pooled = Some(v.iter().map(|&x| x as f64).collect()),
            Some(p) => {
                for (a, &b) in p.iter_mut().zip(v) {
                    *a = a.max(b as f64);
                }
            }
        }
    }
    match pooled {
        Some(p) => (p, false),
        None => (vec![0.0; pretrained.dim()], true),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vecs() -> EmbeddingMatrix {
        EmbeddingMatrix::parse_text("alpha 1 -2\nbeta 0 5\ngamma -1 -1\n", "t").unwrap()
    }

    #[test]
    fn single_and_pair() {
        let none = BTreeSet::new();
        assert_eq!(name_embedding("Alpha", &none, &vecs()), (vec![1.0, -2.0], false));
        assert_eq!(name_embedding("Alpha Beta", &none, &vecs()), (vec![1.0, 5.0], false));
    }

    #[test]
    fn labeling_words_removed() {
        let words: BTreeSet<String> = ["ALPHA".to_string(), "BETA".into()].into();
        assert_eq!(name_embedding("Alpha Beta", &words, &vecs()), (vec![0.0, 0.0], true));
        assert_eq!(name_embedding("Unknown", &BTreeSet::new(), &vecs()).1, true);
    }

    proptest! {
        #[test]
        fn order_does_not_matter(perm in Just(vec!["Alpha", "Beta", "Gamma"]).prop_shuffle()) {
            let none = BTreeSet::new();
            let a = name_embedding(&perm.join(" "), &none, &vecs());
            prop_assert_eq!(a, (vec![1.0, 5.0], false));
        }
    }
}
