use serde::{Deserialize, Serialize};

/// Nine deciles, 10% through 90%.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deciles {
    pub values: [f64; 9],
    /// Set when the input was empty and `values` are placeholder zeros.
    pub empty: bool,
}

/// Deciles by linear interpolation between order statistics: for
/// `p = i/10`, `h = (n - 1) p` and the result is
/// `v[floor h] + (h - floor h) (v[floor h + 1] - v[floor h])`.
///
/// `h` is formed in integer arithmetic so its fractional part is exact.
pub fn deciles(values: &[f64]) -> Deciles {
    if values.is_empty() {
        return Deciles {
            values: [0.0; 9],
            empty: true,
        };
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n1 = v.len() - 1;
    let mut out = [0.0; 9];
    for (slot, i) in out.iter_mut().zip(1..=9usize) {
        let num = n1 * i;
        let lo = num / 10;
        let rem = num % 10;
        *slot = if rem == 0 {
            v[lo]
        } else {
            v[lo] + (rem as f64 / 10.0) * (v[lo + 1] - v[lo])
        };
    }
    Deciles {
        values: out,
        empty: false,
    }
}

/// Median under the same interpolation rule; 0 for empty input.
pub fn median(values: &[f64]) -> f64 {
    deciles(values).values[4]
}
