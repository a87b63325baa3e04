use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::kfold;
use crate::nnet::{predict_topk, FeatureSet, Model, NetworkSpec, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub dropout: Vec<f64>,
    pub batch_size: Vec<usize>,
    pub lr: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            dropout: vec![0.0, 0.1, 0.2, 0.3],
            batch_size: vec![128, 256, 512, 1024],
            lr: vec![0.001, 0.01, 0.1, 1.0],
        }
    }
}

impl GridSpec {
    /// Cartesian product in (dropout, batch, lr) order.
    pub fn configs(&self, base: &TrainConfig) -> Vec<TrainConfig> {
        let mut out = Vec::new();
        for &dropout in &self.dropout {
            for &batch_size in &self.batch_size {
                for &lr in &self.lr {
                    out.push(TrainConfig {
                        dropout,
                        batch_size,
                        lr,
                        ..base.clone()
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub config: TrainConfig,
    pub fold_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub rows: Vec<GridRow>,
    pub best: TrainConfig,
}

impl GridResult {
    pub fn to_tsv(&self) -> String {
        let k = self.rows.first().map_or(0, |r| r.fold_accuracy.len());
        let mut out = String::from("dropout\tbatch_size\tlr");
        for i in 1..=k {
            let _ = write!(out, "\tfold{i}");
        }
        out.push_str("\tmean_accuracy\n");
        for r in &self.rows {
            let _ = write!(out, "{}\t{}\t{}", r.config.dropout, r.config.batch_size, r.config.lr);
            for a in &r.fold_accuracy {
                let _ = write!(out, "\t{a}");
            }
            let _ = writeln!(out, "\t{}", r.mean_accuracy);
        }
        out
    }
}

fn top1_accuracy(model: &Model, x: &FeatureSet, y: &[usize]) -> Result<f64> {
    let p = model.predict_proba(x)?;
    let mut hits = 0;
    for (row, &c) in p.rows().into_iter().zip(y) {
        if predict_topk(&row.to_vec(), 1)?[0] == c {
            hits += 1;
        }
    }
    Ok(hits as f64 / y.len().max(1) as f64)
}

/// Stratified k-fold cross-validation over the full grid. The best config
/// has the highest mean fold accuracy; ties go to the smaller batch size,
/// then the smaller learning rate, then the smaller dropout.
pub fn grid_search(
    spec: &NetworkSpec,
    base: &TrainConfig,
    grid: &GridSpec,
    x: &FeatureSet,
    y: &[usize],
    folds: usize,
    seed: u64,
) -> Result<GridResult> {
    let configs = grid.configs(base);
    if configs.is_empty() {
        return Err(Error::config("grid search: empty grid"));
    }
    for c in &configs {
        c.validate()?;
    }
    let fold_rows = kfold(&x.ids, y, folds, seed)?;
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..folds)
        .map(|f| {
            let test = fold_rows[f].clone();
            let train: Vec<usize> = (0..folds).filter(|&g| g != f).flat_map(|g| fold_rows[g].iter().copied()).collect();
            (train, test)
        })
        .collect();
    let jobs: Vec<(usize, usize)> = (0..configs.len()).flat_map(|c| (0..folds).map(move |f| (c, f))).collect();
    let scores: Vec<f64> = jobs
        .par_iter()
        .map(|&(c, f)| {
            let (tr, te) = &splits[f];
            let ytr: Vec<usize> = tr.iter().map(|&i| y[i]).collect();
            let yte: Vec<usize> = te.iter().map(|&i| y[i]).collect();
            let (model, _) = Model::fit(spec, &configs[c], &x.select(tr), &ytr, None)?;
            top1_accuracy(&model, &x.select(te), &yte)
        })
        .collect::<Result<_>>()?;
    let rows: Vec<GridRow> = configs
        .into_iter()
        .enumerate()
        .map(|(c, config)| {
            let fold_accuracy = scores[c * folds..(c + 1) * folds].to_vec();
            let mean_accuracy = fold_accuracy.iter().sum::<f64>() / folds as f64;
            GridRow {
                config,
                fold_accuracy,
                mean_accuracy,
            }
        })
        .collect();
    let best = rows
        .iter()
        .min_by(|a, b| {
            b.mean_accuracy
                .total_cmp(&a.mean_accuracy)
                .then(a.config.batch_size.cmp(&b.config.batch_size))
                .then(a.config.lr.total_cmp(&b.config.lr))
                .then(a.config.dropout.total_cmp(&b.config.dropout))
        })
        .expect("nonempty grid")
        .config
        .clone();
    Ok(GridResult { rows, best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnet::Variant;
    use ndarray::Array2;

    fn data() -> (FeatureSet, Vec<usize>) {
        let n = 50;
        let x = Array2::from_shape_fn((n, 2), |(i, j)| ((i % 10) as f64) * if j == 0 { 1.0 } else { -0.5 } + (i as f64 * 0.37).sin() * 0.1);
        let y = (0..n).map(|i| i % 10).collect();
        let ids = (0..n).map(|i| format!("r{i:02}")).collect();
        (FeatureSet::new(ids, vec![("x".into(), x)]).unwrap(), y)
    }

    #[test]
    fn default_grid_has_64_configs() {
        assert_eq!(GridSpec::default().configs(&TrainConfig::default()).len(), 64);
    }

    #[test]
    fn single_config_and_bookkeeping() {
        let (x, y) = data();
        let spec = NetworkSpec::with_sizes(&x.dims(), Variant::Logistic, 4, &[]).unwrap();
        let base = TrainConfig { epochs: 3, ..Default::default() };
        let grid = GridSpec {
            dropout: vec![0.1],
            batch_size: vec![16],
            lr: vec![0.1],
        };
        let r = grid_search(&spec, &base, &grid, &x, &y, 5, 1).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.best.batch_size, 16);
        assert_eq!(r.best.dropout, 0.1);
        let row = &r.rows[0];
        assert_eq!(row.mean_accuracy, row.fold_accuracy.iter().sum::<f64>() / 5.0);
        assert_eq!(r.to_tsv().lines().count(), 2);
    }

    #[test]
    fn ties_prefer_small_batch_then_lr_then_dropout() {
        let (x, y) = data();
        let spec = NetworkSpec::with_sizes(&x.dims(), Variant::Logistic, 4, &[]).unwrap();
        // lr 0 leaves the zero-bias init untouched, so every config scores the same
        let base = TrainConfig { epochs: 1, ..Default::default() };
        let grid = GridSpec {
            dropout: vec![0.2, 0.0],
            batch_size: vec![32, 8],
            lr: vec![0.0],
        };
        let r = grid_search(&spec, &base, &grid, &x, &y, 5, 1).unwrap();
        assert!(r.rows.windows(2).all(|w| w[0].mean_accuracy == w[1].mean_accuracy));
        assert_eq!((r.best.batch_size, r.best.dropout), (8, 0.0));
        let again = grid_search(&spec, &base, &grid, &x, &y, 5, 1).unwrap();
        assert_eq!(again, r);
    }
}
