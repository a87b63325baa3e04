use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nnet::{
    backward, check_inputs, forward, weighted_loss, FeatureSet, Layer, NetworkParams, NetworkSpec, Scaler,
};
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub dropout: f64,
    pub batch_size: usize,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Weight the loss by inverse class frequency.
    pub class_weights: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dropout: 0.0,
            batch_size: 128,
            lr: 0.1,
            epochs: 100,
            seed: 0,
            class_weights: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::config(format!("train: dropout must be in [0,1), got {}", self.dropout)));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::config("train: batch_size and epochs must be >= 1"));
        }
        if !(self.lr >= 0.0) || !self.lr.is_finite() {
            return Err(Error::config(format!("train: lr must be finite and >= 0, got {}", self.lr)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train: f64,
    /// NaN without a validation set.
    pub val: f64,
}

pub fn loss_curve_tsv(curve: &[EpochLoss]) -> String {
    let mut out = String::from("epoch\ttrain_loss\tval_loss\n");
    for e in curve {
        let _ = writeln!(out, "{}\t{}\t{}", e.epoch, e.train, e.val);
    }
    out
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub params: NetworkParams,
    pub curve: Vec<EpochLoss>,
    /// Set when a step produced non-finite values; `params` are then those
    /// from the end of the last finite epoch.
    pub diverged: bool,
}

/// `n / (classes present * n_c)` for present classes, 0 otherwise.
pub fn inverse_frequency_weights(labels: &[usize], classes: usize) -> Vec<f64> {
    let mut counts = vec![0usize; classes];
    for &y in labels {
        counts[y] += 1;
    }
    let present = counts.iter().filter(|&&c| c > 0).count().max(1);
    counts
        .iter()
        .map(|&c| if c == 0 { 0.0 } else { labels.len() as f64 / (present * c) as f64 })
        .collect()
}

fn eval_loss(spec: &NetworkSpec, p: &NetworkParams, x: &FeatureSet, y: &[usize], w: Option<&[f64]>) -> f64 {
    let f = forward(spec, p, &x.views(), None);
    weighted_loss(&f.probs, y, w)
}

/// Minibatch SGD on already-scaled features. The shuffle order comes from
/// `derive_seed(seed, "train.shuffle")`, dropout masks from
/// `derive_seed(seed, "train.dropout")`, initial weights from `seed`.
pub fn train(
    spec: &NetworkSpec,
    cfg: &TrainConfig,
    x: &FeatureSet,
    y: &[usize],
    val: Option<(&FeatureSet, &[usize])>,
) -> Result<Trained> {
    cfg.validate()?;
    spec.validate()?;
    if x.is_empty() {
        return Err(Error::data("train: empty dataset"));
    }
    if y.len() != x.len() || y.iter().any(|&c| c >= spec.classes) {
        return Err(Error::data("train: labels do not match the feature rows"));
    }
    check_inputs(spec, &x.views())?;
    if let Some((vx, vy)) = val {
        check_inputs(spec, &vx.views())?;
        if vy.len() != vx.len() {
            return Err(Error::data("train: validation labels do not match"));
        }
    }
    let weights = cfg.class_weights.then(|| inverse_frequency_weights(y, spec.classes));
    let w = weights.as_deref();
    let mut params = NetworkParams::init(spec, cfg.seed);
    let mut shuffle = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "train.shuffle"));
    let mut drop_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "train.dropout"));
    let mut order: Vec<usize> = (0..x.len()).collect();
    let mut curve = Vec::with_capacity(cfg.epochs);
    let mut diverged = false;

    for epoch in 1..=cfg.epochs {
        let snapshot = params.clone();
        order.shuffle(&mut shuffle);
        for batch in order.chunks(cfg.batch_size) {
            let xb: Vec<Array2<f64>> = x.blocks.iter().map(|b| b.select(Axis(0), batch)).collect();
            let views: Vec<_> = xb.iter().map(|b| b.view()).collect();
            let yb: Vec<usize> = batch.iter().map(|&i| y[i]).collect();
            let f = forward(spec, &params, &views, Some((cfg.dropout, &mut drop_rng)));
            let g = backward(spec, &params, &views, &f, &yb, w);
            params.sgd_step(&g, cfg.lr);
        }
        let train_loss = eval_loss(spec, &params, x, y, w);
        if !params.is_finite() || !train_loss.is_finite() {
            params = snapshot;
            diverged = true;
            break;
        }
        let val_loss = val.map_or(f64::NAN, |(vx, vy)| eval_loss(spec, &params, vx, vy, w));
        curve.push(EpochLoss {
            epoch,
            train: train_loss,
            val: val_loss,
        });
    }
    Ok(Trained { params, curve, diverged })
}

/// A trained network with the scaler fitted on its training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub spec: NetworkSpec,
    pub scaler: Scaler,
    pub params: NetworkParams,
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerFile {
    key: String,
    rows: usize,
    cols: usize,
    w: Vec<f64>,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: u32,
    spec: NetworkSpec,
    scaler: Scaler,
    layers: Vec<LayerFile>,
}

impl Model {
    /// Fit the scaler on `x`, then train.
    pub fn fit(
        spec: &NetworkSpec,
        cfg: &TrainConfig,
        x: &FeatureSet,
        y: &[usize],
        val: Option<(&FeatureSet, &[usize])>,
    ) -> Result<(Model, Trained)> {
        let scaler = Scaler::fit(x);
        let xs = scaler.transform(x)?;
        let vs = val.map(|(vx, _)| scaler.transform(vx)).transpose()?;
        let val = vs.as_ref().zip(val.map(|v| v.1));
        let trained = train(spec, cfg, &xs, y, val)?;
        let model = Model {
            spec: spec.clone(),
            scaler,
            params: trained.params.clone(),
        };
        Ok((model, trained))
    }

    /// Class probabilities, one row per id.
    pub fn predict_proba(&self, x: &FeatureSet) -> Result<Array2<f64>> {
        let xs = self.scaler.transform(x)?;
        check_inputs(&self.spec, &xs.views())?;
        Ok(forward(&self.spec, &self.params, &xs.views(), None).probs)
    }

    pub fn to_json(&self) -> String {
        let layers = self
            .params
            .layers
            .iter()
            .map(|(k, l)| LayerFile {
                key: k.clone(),
                rows: l.w.nrows(),
                cols: l.w.ncols(),
                w: l.w.iter().copied().collect(),
                b: l.b.to_vec(),
            })
            .collect();
        let file = ModelFile {
            version: MODEL_FORMAT_VERSION,
            spec: self.spec.clone(),
            scaler: self.scaler.clone(),
            layers,
        };
        serde_json::to_string(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Model> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: ModelFile =
            serde_path_to_error::deserialize(de).map_err(|e| Error::data(format!("model file: {e}")))?;
        if file.version != MODEL_FORMAT_VERSION {
            return Err(Error::data(format!(
                "model file version {} is not supported (expected {MODEL_FORMAT_VERSION})",
                file.version
            )));
        }
        file.spec.validate()?;
        let mut layers = std::collections::BTreeMap::new();
        for l in file.layers {
            let w = Array2::from_shape_vec((l.rows, l.cols), l.w)
                .map_err(|e| Error::data(format!("model layer {}: {e}", l.key)))?;
            layers.insert(l.key, Layer { w, b: l.b.into() });
        }
        let params = NetworkParams { layers };
        params.check_shapes(&file.spec)?;
        Ok(Model {
            spec: file.spec,
            scaler: file.scaler,
            params,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Model> {
        if !path.exists() {
            return Err(Error::MissingArtifact {
                what: "model".into(),
                path: path.to_path_buf(),
            });
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Model::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnet::{Variant, N_CLASSES};
    use rand::Rng;

    /// `n` points per class in 4 dimensions around distinct centers.
    pub(crate) fn toy(n_per_class: usize, classes: usize, seed: u64) -> (FeatureSet, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = n_per_class * classes;
        let mut a = Array2::zeros((n, 2));
        let mut b = Array2::zeros((n, 2));
        let mut y = Vec::new();
        for i in 0..n {
            let c = i % classes;
            let ang = c as f64 * std::f64::consts::TAU / classes as f64;
            a[[i, 0]] = 3.0 * ang.cos() + rng.random::<f64>() - 0.5;
            a[[i, 1]] = 3.0 * ang.sin() + rng.random::<f64>() - 0.5;
            b[[i, 0]] = c as f64 + rng.random::<f64>() * 0.5;
            b[[i, 1]] = rng.random::<f64>();
            y.push(c);
        }
        let ids = (0..n).map(|i| format!("r{i:03}")).collect();
        (FeatureSet::new(ids, vec![("a".into(), a), ("b".into(), b)]).unwrap(), y)
    }

    fn small_spec(v: Variant) -> NetworkSpec {
        NetworkSpec::with_sizes(&[("a".into(), 2), ("b".into(), 2)], v, 8, &[16, 8]).unwrap()
    }

    fn accuracy(m: &Model, x: &FeatureSet, y: &[usize]) -> f64 {
        let p = m.predict_proba(x).unwrap();
        let hits = p
            .rows()
            .into_iter()
            .zip(y)
            .filter(|(r, &c)| crate::nnet::predict_topk(r.as_slice().unwrap(), 1).unwrap()[0] == c)
            .count();
        hits as f64 / y.len() as f64
    }

    #[test]
    fn memorizes_twenty_samples() {
        let (x, y) = toy(2, N_CLASSES, 1);
        let cfg = TrainConfig {
            epochs: 200,
            batch_size: 4,
            lr: 0.05,
            ..Default::default()
        };
        let (m, t) = Model::fit(&small_spec(Variant::ResidualDeep), &cfg, &x, &y, None).unwrap();
        assert_eq!(accuracy(&m, &x, &y), 1.0);
        assert_eq!(t.curve.len(), 200);
    }

    #[test]
    fn two_seeds_both_fit() {
        let (x, y) = toy(2, N_CLASSES, 1);
        let mut params = Vec::new();
        for seed in [1, 2] {
            let cfg = TrainConfig {
                epochs: 300,
                batch_size: 4,
                lr: 0.05,
                seed,
                ..Default::default()
            };
            let (m, t) = Model::fit(&small_spec(Variant::ResidualDeep), &cfg, &x, &y, None).unwrap();
            assert!(t.curve.last().unwrap().train < 0.05, "{:?}", t.curve.last());
            params.push(m.params);
        }
        assert_ne!(params[0], params[1]);
    }

    #[test]
    fn zero_rate_changes_nothing() {
        let (x, y) = toy(3, N_CLASSES, 2);
        let spec = small_spec(Variant::Deep);
        let cfg = TrainConfig {
            lr: 0.0,
            epochs: 3,
            dropout: 0.2,
            ..Default::default()
        };
        let t = train(&spec, &cfg, &x, &y, None).unwrap();
        assert_eq!(t.params, NetworkParams::init(&spec, cfg.seed));
    }

    #[test]
    fn logistic_separates_two_classes() {
        let (x, y) = toy(30, 2, 3);
        let cfg = TrainConfig {
            epochs: 50,
            batch_size: 8,
            ..Default::default()
        };
        let (m, _) = Model::fit(&small_spec(Variant::Logistic), &cfg, &x, &y, None).unwrap();
        assert_eq!(accuracy(&m, &x, &y), 1.0);
    }

    #[test]
    fn small_step_lowers_full_batch_loss() {
        let (x, y) = toy(3, N_CLASSES, 4);
        for v in Variant::ALL {
            let spec = small_spec(v);
            let mut p = NetworkParams::init(&spec, 7);
            let f = forward(&spec, &p, &x.views(), None);
            let before = weighted_loss(&f.probs, &y, None);
            let g = backward(&spec, &p, &x.views(), &f, &y, None);
            p.sgd_step(&g, 1e-3);
            let after = eval_loss(&spec, &p, &x, &y, None);
            assert!(after < before, "{v}: {after} >= {before}");
        }
    }

    #[test]
    fn deterministic_and_round_trips() {
        let (x, y) = toy(4, N_CLASSES, 5);
        let cfg = TrainConfig {
            epochs: 5,
            batch_size: 8,
            dropout: 0.1,
            ..Default::default()
        };
        let spec = small_spec(Variant::ResidualDeep);
        let (a, ta) = Model::fit(&spec, &cfg, &x, &y, Some((&x, &y))).unwrap();
        let (b, _) = Model::fit(&spec, &cfg, &x, &y, None).unwrap();
        assert_eq!(a, b);
        let back = Model::from_json(&a.to_json()).unwrap();
        assert_eq!(back, a);
        assert_eq!(back.predict_proba(&x).unwrap(), a.predict_proba(&x).unwrap());
        let tsv = loss_curve_tsv(&ta.curve);
        assert!(tsv.starts_with("epoch\ttrain_loss\tval_loss\n1\t"));
        assert_eq!(tsv.lines().count(), 6);
    }

    #[test]
    fn bad_model_files() {
        let (x, y) = toy(2, N_CLASSES, 5);
        let cfg = TrainConfig { epochs: 1, ..Default::default() };
        let (m, _) = Model::fit(&small_spec(Variant::Shallow), &cfg, &x, &y, None).unwrap();
        let json = m.to_json();
        assert!(Model::from_json(&json.replacen("\"version\":1", "\"version\":9", 1)).is_err());
        assert!(Model::from_json(&json.replacen("\"rows\":2", "\"rows\":3", 1)).is_err());
        assert!(Model::from_json("{}").is_err());
    }

    #[test]
    fn empty_and_invalid() {
        let (x, y) = toy(1, N_CLASSES, 1);
        let spec = small_spec(Variant::Deep);
        assert!(train(&spec, &TrainConfig::default(), &x.select(&[]), &[], None).is_err());
        let bad = TrainConfig { dropout: 1.0, ..Default::default() };
        assert!(train(&spec, &bad, &x, &y, None).is_err());
    }

    #[test]
    fn class_weights() {
        let w = inverse_frequency_weights(&[0, 0, 0, 1], 3);
        assert_eq!(w, vec![4.0 / 6.0, 2.0, 0.0]);
    }
}
