use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Feature blocks for a list of restaurants. Blocks are sorted by name and
/// every block has one row per id.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub ids: Vec<String>,
    pub names: Vec<String>,
    pub blocks: Vec<Array2<f64>>,
}

impl FeatureSet {
    pub fn new(ids: Vec<String>, mut blocks: Vec<(String, Array2<f64>)>) -> Result<Self> {
        blocks.sort_by(|a, b| a.0.cmp(&b.0));
        for w in blocks.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::data(format!("feature block {:?} listed twice", w[0].0)));
            }
        }
        for (name, b) in &blocks {
            if b.nrows() != ids.len() {
                return Err(Error::data(format!("block {name}: {} rows for {} ids", b.nrows(), ids.len())));
            }
            if b.iter().any(|v| !v.is_finite()) {
                return Err(Error::data(format!("block {name}: non-finite value")));
            }
        }
        let (names, blocks) = blocks.into_iter().unzip();
        Ok(FeatureSet { ids, names, blocks })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dims(&self) -> Vec<(String, usize)> {
        self.names.iter().cloned().zip(self.blocks.iter().map(|b| b.ncols())).collect()
    }

    pub fn views(&self) -> Vec<ArrayView2<'_, f64>> {
        self.blocks.iter().map(|b| b.view()).collect()
    }

    pub fn select(&self, rows: &[usize]) -> FeatureSet {
        FeatureSet {
            ids: rows.iter().map(|&i| self.ids[i].clone()).collect(),
            names: self.names.clone(),
            blocks: self.blocks.iter().map(|b| b.select(Axis(0), rows)).collect(),
        }
    }

    /// The same set with one block removed.
    pub fn without(&self, name: &str) -> Result<FeatureSet> {
        let pos = self
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::config(format!("no feature block named {name:?}")))?;
        let mut out = self.clone();
        out.names.remove(pos);
        out.blocks.remove(pos);
        Ok(out)
    }

    pub fn block(&self, name: &str) -> Option<&Array2<f64>> {
        self.names.iter().position(|n| n == name).map(|i| &self.blocks[i])
    }
}

/// Per-column standardization fitted on training rows. Constant columns
/// get scale 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<Vec<f64>>,
    pub scale: Vec<Vec<f64>>,
}

impl Scaler {
    pub fn fit(x: &FeatureSet) -> Scaler {
        let n = x.len().max(1) as f64;
        let mut mean = Vec::new();
        let mut scale = Vec::new();
        for b in &x.blocks {
            let m: Vec<f64> = b.columns().into_iter().map(|c| c.sum() / n).collect();
            let s: Vec<f64> = b
                .columns()
                .into_iter()
                .zip(&m)
                .map(|(c, mu)| {
                    let sd = (c.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n).sqrt();
                    if sd > 1e-12 {
                        sd
                    } else {
                        1.0
                    }
                })
                .collect();
            mean.push(m);
            scale.push(s);
        }
        Scaler { mean, scale }
    }

    pub fn transform(&self, x: &FeatureSet) -> Result<FeatureSet> {
        if x.blocks.len() != self.mean.len() {
            return Err(Error::data("scaler: block count mismatch"));
        }
        let mut out = x.clone();
        for ((b, m), s) in out.blocks.iter_mut().zip(&self.mean).zip(&self.scale) {
            if b.ncols() != m.len() {
                return Err(Error::data("scaler: column count mismatch"));
            }
            for mut row in b.rows_mut() {
                for ((v, mu), sd) in row.iter_mut().zip(m).zip(s) {
                    *v = (*v - mu) / sd;
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn sorted_blocks_and_selection() {
        let fs = FeatureSet::new(
            vec!["r1".into(), "r2".into(), "r3".into()],
            vec![
                ("z".into(), array![[1.0], [2.0], [3.0]]),
                ("a".into(), array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]),
            ],
        )
        .unwrap();
        assert_eq!(fs.names, vec!["a", "z"]);
        let sub = fs.select(&[2, 0]);
        assert_eq!(sub.ids, vec!["r3", "r1"]);
        assert_eq!(sub.block("z").unwrap(), &array![[3.0], [1.0]]);
        assert_eq!(fs.without("a").unwrap().names, vec!["z"]);
        assert!(fs.without("q").is_err());
        assert!(FeatureSet::new(vec!["r1".into()], vec![("a".into(), array![[1.0], [2.0]])]).is_err());
    }

    #[test]
    fn scaler_standardizes() {
        let fs = FeatureSet::new(
            vec!["a".into(), "b".into()],
            vec![("x".into(), array![[1.0, 5.0], [3.0, 5.0]])],
        )
        .unwrap();
        let s = Scaler::fit(&fs);
        let t = s.transform(&fs).unwrap();
        assert_eq!(t.blocks[0], array![[-1.0, 0.0], [1.0, 0.0]]);
    }
}
