use std::fmt::Write;

use rayon::prelude::*;

use super::metrics::{evaluate, predictions, MetricsReport};
use crate::error::{Error, Result};
use crate::nnet::{FeatureSet, Model, NetworkSpec, TrainConfig};

/// Score a trained model on labeled rows.
pub fn evaluate_model(model: &Model, x: &FeatureSet, y: &[usize]) -> Result<MetricsReport> {
    if x.len() != y.len() {
        return Err(Error::data(format!("{} rows but {} labels", x.len(), y.len())));
    }
    let probs = model.predict_proba(x)?;
    let truth: Vec<(String, usize)> = x.ids.iter().cloned().zip(y.iter().copied()).collect();
    evaluate(&predictions(&x.ids, &probs)?, &truth)
}

/// Train on `train` rows and score on `test` rows.
pub fn fit_evaluate(
    spec: &NetworkSpec,
    cfg: &TrainConfig,
    x: &FeatureSet,
    y: &[usize],
    train: &[usize],
    test: &[usize],
) -> Result<(Model, MetricsReport)> {
    let pick = |rows: &[usize]| -> Vec<usize> { rows.iter().map(|&i| y[i]).collect() };
    let (model, _) = Model::fit(spec, cfg, &x.select(train), &pick(train), None)?;
    let report = evaluate_model(&model, &x.select(test), &pick(test))?;
    Ok((model, report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub removed: String,
    pub accuracy: f64,
    /// Accuracy minus the baseline accuracy.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationTable {
    pub baseline: MetricsReport,
    /// One row per feature block, in block order.
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    /// `removed_block<TAB>accuracy<TAB>delta`, baseline first as `none`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("removed_block\taccuracy\tdelta\n");
        let _ = writeln!(out, "none\t{}\t0", self.baseline.accuracy);
        for r in &self.rows {
            let _ = writeln!(out, "{}\t{}\t{}", r.removed, r.accuracy, r.delta);
        }
        out
    }
}

/// Leave-one-block-out: retrain with each block removed, same config and
/// seed, and compare test accuracy against the full model.
pub fn ablation(
    spec: &NetworkSpec,
    cfg: &TrainConfig,
    x: &FeatureSet,
    y: &[usize],
    train: &[usize],
    test: &[usize],
) -> Result<AblationTable> {
    let jobs: Vec<Option<&String>> = std::iter::once(None).chain(x.names.iter().map(Some)).collect();
    let mut reports: Vec<MetricsReport> = jobs
        .par_iter()
        .map(|job| match job {
            None => fit_evaluate(spec, cfg, x, y, train, test).map(|r| r.1),
            Some(name) => fit_evaluate(&spec.without(name)?, cfg, &x.without(name)?, y, train, test).map(|r| r.1),
        })
        .collect::<Result<_>>()?;
    let baseline = reports.remove(0);
    let rows = x
        .names
        .iter()
        .zip(reports)
        .map(|(name, r)| AblationRow {
            removed: name.clone(),
            accuracy: r.accuracy,
            delta: r.accuracy - baseline.accuracy,
        })
        .collect();
    Ok(AblationTable { baseline, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::stratified_split;
    use crate::nnet::Variant;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Ten classes. `signal` carries the class in a noisy one-hot, `weak`
    /// carries it faintly, `noise` is pure noise and `zip` is constant.
    fn planted(n_per: usize) -> (FeatureSet, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10 * n_per;
        let y: Vec<usize> = (0..n).map(|i| i % 10).collect();
        let mut signal = Array2::zeros((n, 10));
        let mut weak = Array2::zeros((n, 10));
        let mut noise = Array2::zeros((n, 4));
        for i in 0..n {
            for j in 0..10 {
                let hot = if j == y[i] { 1.0 } else { 0.0 };
                signal[[i, j]] = 2.0 * hot + 0.3 * rng.random::<f64>();
                weak[[i, j]] = 0.1 * hot + rng.random::<f64>();
            }
            for j in 0..4 {
                noise[[i, j]] = rng.random::<f64>();
            }
        }
        let ids = (0..n).map(|i| format!("R{i:05}")).collect();
        let x = FeatureSet::new(
            ids,
            vec![
                ("signal".into(), signal),
                ("weak".into(), weak),
                ("noise".into(), noise),
                ("zip".into(), Array2::from_elem((n, 5), 3.0)),
            ],
        )
        .unwrap();
        (x, y)
    }

    #[test]
    fn planted_signal_and_null_blocks() {
        let (x, y) = planted(30);
        let (train, test) = stratified_split(&x.ids, &y, 0.8, 3).unwrap();
        let spec = NetworkSpec::with_sizes(&x.dims(), Variant::ResidualDeep, 16, &[32, 16]).unwrap();
        let cfg = TrainConfig {
            epochs: 60,
            batch_size: 32,
            lr: 0.05,
            ..TrainConfig::default()
        };
        let table = ablation(&spec, &cfg, &x, &y, &train, &test).unwrap();
        assert_eq!(table.rows.len(), 4);
        let row = |n: &str| table.rows.iter().find(|r| r.removed == n).unwrap();
        assert!(table.baseline.accuracy > 0.9, "{}", table.baseline.accuracy);
        assert!(row("signal").delta < -0.02, "{:?}", row("signal"));
        assert!(row("zip").delta.abs() <= 0.01, "{:?}", row("zip"));

        let (_, full) = fit_evaluate(&spec, &cfg, &x, &y, &train, &test).unwrap();
        assert_eq!(full, table.baseline);
        let tsv = table.to_tsv();
        assert_eq!(tsv.lines().count(), 6);
        assert!(tsv.lines().nth(1).unwrap().starts_with("none\t"));
    }
}
