use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::names::{flavor_words, FILLER_WORDS};
use crate::cuisine::CuisineClass;
use crate::seed::derive_seed;
use crate::weak::Taxonomy;

const WORD_NOISE: f64 = 0.7;

/// Stand-in pretrained word vectors for every word the name model can emit,
/// keyed lowercase. Seed keywords and flavor words of a cuisine scatter
/// around a shared per-cuisine center; generic words are pure noise.
/// Depends only on `dim` and the taxonomy.
pub fn name_vectors(dim: usize, taxonomy: &Taxonomy) -> BTreeMap<String, Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(dim as u64, "synth.name-vectors"));
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let draw = |center: Option<&[f64]>, rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..dim)
            .map(|j| match center {
                Some(c) => c[j] + WORD_NOISE * unit.sample(rng),
                None => unit.sample(rng),
            })
            .collect()
    };
    let centers: Vec<Vec<f64>> = (0..CuisineClass::COUNT).map(|_| draw(None, &mut rng)).collect();
    let mut out = BTreeMap::new();
    for w in FILLER_WORDS {
        out.insert(w.to_lowercase(), draw(None, &mut rng));
    }
    for c in CuisineClass::ALL {
        let words = flavor_words(c)
            .iter()
            .map(|w| w.to_string())
            .chain(taxonomy.keywords(c).iter().cloned());
        for w in words {
            let v = draw(Some(&centers[c.code()]), &mut rng);
            out.insert(w.to_lowercase(), v);
        }
    }
    out
}
