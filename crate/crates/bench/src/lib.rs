//! Fixtures shared by the benchmarks.

use ndarray::Array2;
use tabletrace::nnet::FeatureSet;
use tabletrace::synth::{generate, SynthConfig};
use tabletrace::txn::{build_index, TxnIndex};

/// A small generated transaction log, indexed.
pub fn small_index(n_restaurants: usize, n_customers: usize, days: u32) -> TxnIndex {
    let cfg = SynthConfig {
        n_restaurants,
        n_customers,
        days,
        seed: 42,
        ..SynthConfig::default()
    };
    build_index(generate(&cfg).expect("valid generator config").transactions)
}

/// Deterministic pseudo-random values in [-1, 1).
pub fn values(n: usize, salt: u64) -> Vec<f64> {
    let mut state = salt.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    (0..n)
        .map(|_| {
            // xorshift64*
            state ^= state >> 12;
            state ^= state << 25;
            state ^= state >> 27;
            let r = state.wrapping_mul(0x2545_F491_4F6C_DD1D);
            (r >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        })
        .collect()
}

/// `rows` samples over blocks of the given widths, with labels.
pub fn feature_set(rows: usize, widths: &[(&str, usize)]) -> (FeatureSet, Vec<usize>) {
    let ids = (0..rows).map(|i| format!("R{i:05}")).collect();
    let blocks = widths
        .iter()
        .enumerate()
        .map(|(k, (name, w))| {
            let v = values(rows * w, k as u64 + 1);
            (name.to_string(), Array2::from_shape_vec((rows, *w), v).expect("shape"))
        })
        .collect();
    let labels = (0..rows).map(|i| i % 10).collect();
    (FeatureSet::new(ids, blocks).expect("finite blocks"), labels)
}
