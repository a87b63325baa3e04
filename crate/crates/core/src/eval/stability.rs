use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Fraction of restaurants given the same top-1 class in both runs. Both
/// runs must cover the same restaurants.
pub fn stability(a: &[(String, usize)], b: &[(String, usize)]) -> Result<f64> {
    let index = |p: &[(String, usize)]| -> Result<BTreeMap<String, usize>> {
        let m: BTreeMap<String, usize> = p.iter().cloned().collect();
        if m.len() != p.len() {
            return Err(Error::data("stability: duplicate restaurant id"));
        }
        Ok(m)
    };
    let (ma, mb) = (index(a)?, index(b)?);
    if ma.is_empty() {
        return Err(Error::data("stability: no predictions"));
    }
    if !ma.keys().eq(mb.keys()) {
        return Err(Error::data("stability: the two runs cover different restaurants"));
    }
    let same = ma.iter().zip(mb.values()).filter(|((_, x), y)| *x == *y).count();
    Ok(same as f64 / ma.len() as f64)
}
