use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::derive_seed;

pub const N_CLASSES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    ResidualDeep,
    Deep,
    Shallow,
    Logistic,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::ResidualDeep, Variant::Deep, Variant::Shallow, Variant::Logistic];

    pub fn name(self) -> &'static str {
        match self {
            Variant::ResidualDeep => "residual_deep",
            Variant::Deep => "deep",
            Variant::Shallow => "shallow",
            Variant::Logistic => "logistic",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown variant {s:?} (expected residual_deep, deep, shallow or logistic)"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchSpec {
    pub name: String,
    pub input_dim: usize,
    pub hidden: usize,
}

/// Network shape. Branches are kept sorted by name, so declaration order
/// never matters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub branches: Vec<BranchSpec>,
    /// Trunk hidden sizes; `shallow` uses only the first.
    pub trunk: Vec<usize>,
    pub classes: usize,
    pub variant: Variant,
}

pub const DEFAULT_BRANCH_HIDDEN: usize = 64;
pub const DEFAULT_TRUNK: [usize; 2] = [256, 128];

impl NetworkSpec {
    pub fn new(blocks: &[(String, usize)], variant: Variant) -> Result<Self> {
        Self::with_sizes(blocks, variant, DEFAULT_BRANCH_HIDDEN, &DEFAULT_TRUNK)
    }

    pub fn with_sizes(blocks: &[(String, usize)], variant: Variant, hidden: usize, trunk: &[usize]) -> Result<Self> {
        let mut branches: Vec<BranchSpec> = blocks
            .iter()
            .map(|(name, d)| BranchSpec {
                name: name.clone(),
                input_dim: *d,
                hidden,
            })
            .collect();
        branches.sort_by(|a, b| a.name.cmp(&b.name));
        let spec = NetworkSpec {
            branches,
            trunk: trunk.to_vec(),
            classes: N_CLASSES,
            variant,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.branches.is_empty() {
            return Err(Error::config("network: no feature blocks"));
        }
        for w in self.branches.windows(2) {
            if w[0].name >= w[1].name {
                return Err(Error::config(format!("network: branch {:?} duplicated or out of order", w[1].name)));
            }
        }
        if self.branches.iter().any(|b| b.input_dim == 0 || b.hidden == 0) || self.classes < 2 {
            return Err(Error::config("network: dimensions must be positive"));
        }
        let need = match self.variant {
            Variant::Logistic => 0,
            Variant::Shallow => 1,
            _ => 2,
        };
        if self.trunk.len() < need || self.trunk.contains(&0) {
            return Err(Error::config(format!("network: {} needs {need} positive trunk sizes", self.variant)));
        }
        Ok(())
    }

    /// The same network without the branch for `name`.
    pub fn without(&self, name: &str) -> Result<NetworkSpec> {
        let mut out = self.clone();
        let before = out.branches.len();
        out.branches.retain(|b| b.name != name);
        if out.branches.len() == before {
            return Err(Error::config(format!("network: no branch named {name:?}")));
        }
        out.validate()?;
        Ok(out)
    }

    pub fn input_dim(&self) -> usize {
        self.branches.iter().map(|b| b.input_dim).sum()
    }

    fn trunk_sizes(&self) -> &[usize] {
        match self.variant {
            Variant::Logistic => &[],
            Variant::Shallow => &self.trunk[..1],
            _ => &self.trunk[..2],
        }
    }

    /// Layer keys with their (fan_in, fan_out), in forward order.
    pub fn layer_shapes(&self) -> Vec<(String, usize, usize)> {
        let mut out = Vec::new();
        if self.variant == Variant::Logistic {
            out.push(("out".to_string(), self.input_dim(), self.classes));
            return out;
        }
        for b in &self.branches {
            out.push((format!("branch.{}.1", b.name), b.input_dim, b.hidden));
            if self.variant != Variant::Shallow {
                out.push((format!("branch.{}.2", b.name), b.hidden, b.hidden));
            }
        }
        let mut fan_in: usize = self.branches.iter().map(|b| b.hidden).sum();
        for (i, &h) in self.trunk_sizes().iter().enumerate() {
            out.push((format!("trunk.{}", i + 1), fan_in, h));
            fan_in = h;
        }
        out.push(("out".to_string(), fan_in, self.classes));
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// fan_in x fan_out
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

/// Weights and biases keyed by layer name.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub layers: BTreeMap<String, Layer>,
}

impl NetworkParams {
    /// He-normal weights, zero biases. Each layer draws from its own RNG
    /// seeded by `(seed, layer key)`.
    pub fn init(spec: &NetworkSpec, seed: u64) -> Self {
        let layers = spec
            .layer_shapes()
            .into_iter()
            .map(|(key, fan_in, fan_out)| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("init.{key}")));
                let d = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive sd");
                let w = Array2::from_shape_simple_fn((fan_in, fan_out), || d.sample(&mut rng));
                (key, Layer { w, b: Array1::zeros(fan_out) })
            })
            .collect();
        NetworkParams { layers }
    }

    pub fn zeros(spec: &NetworkSpec) -> Self {
        let layers = spec
            .layer_shapes()
            .into_iter()
            .map(|(key, fi, fo)| {
                (key, Layer { w: Array2::zeros((fi, fo)), b: Array1::zeros(fo) })
            })
            .collect();
        NetworkParams { layers }
    }

    fn layer(&self, key: &str) -> &Layer {
        &self.layers[key]
    }

    pub fn check_shapes(&self, spec: &NetworkSpec) -> Result<()> {
        let shapes = spec.layer_shapes();
        if shapes.len() != self.layers.len() {
            return Err(Error::data("network params: layer count does not match spec"));
        }
        for (key, fi, fo) in shapes {
            let l = self
                .layers
                .get(&key)
                .ok_or_else(|| Error::data(format!("network params: missing layer {key}")))?;
            if l.w.dim() != (fi, fo) || l.b.len() != fo {
                return Err(Error::data(format!("network params: layer {key} has the wrong shape")));
            }
            if l.w.iter().chain(l.b.iter()).any(|x| !x.is_finite()) {
                return Err(Error::data(format!("network params: layer {key} has non-finite values")));
            }
        }
        Ok(())
    }

    /// `self -= lr * g`
    pub fn sgd_step(&mut self, grads: &NetworkParams, lr: f64) {
        for (key, l) in self.layers.iter_mut() {
            let g = &grads.layers[key];
            l.w.scaled_add(-lr, &g.w);
            l.b.scaled_add(-lr, &g.b);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers.values().all(|l| l.w.iter().chain(l.b.iter()).all(|x| x.is_finite()))
    }
}

struct BranchCache {
    z1: Array2<f64>,
    a1: Array2<f64>,
    z2: Option<Array2<f64>>,
}

struct TrunkCache {
    input: Array2<f64>,
    z: Array2<f64>,
    mask: Option<Array2<f64>>,
}

/// Activations kept for the backward pass.
pub struct Forward {
    pub probs: Array2<f64>,
    branches: Vec<BranchCache>,
    trunk: Vec<TrunkCache>,
    last_hidden: Array2<f64>,
}

fn relu(z: &Array2<f64>) -> Array2<f64> {
    z.mapv(|v| v.max(0.0))
}

fn affine(x: &ArrayView2<f64>, l: &Layer) -> Array2<f64> {
    x.dot(&l.w) + &l.b
}

pub fn softmax_rows(logits: &mut Array2<f64>) {
    for mut row in logits.rows_mut() {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - m).exp());
        let s = row.sum();
        row.mapv_inplace(|v| v / s);
    }
}

/// Check the inputs line up with the spec: one matrix per branch, in
/// branch order, equal row counts.
pub fn check_inputs(spec: &NetworkSpec, inputs: &[ArrayView2<f64>]) -> Result<usize> {
    if inputs.len() != spec.branches.len() {
        return Err(Error::data(format!(
            "network expects {} feature blocks, got {}",
            spec.branches.len(),
            inputs.len()
        )));
    }
    let n = inputs[0].nrows();
    for (b, x) in spec.branches.iter().zip(inputs) {
        if x.ncols() != b.input_dim || x.nrows() != n {
            return Err(Error::data(format!(
                "block {}: expected {} x {}, got {} x {}",
                b.name,
                n,
                b.input_dim,
                x.nrows(),
                x.ncols()
            )));
        }
    }
    Ok(n)
}

/// Forward pass. With `dropout = Some((p, rng))` inverted dropout is applied
/// after every trunk hidden layer.
pub fn forward(
    spec: &NetworkSpec,
    params: &NetworkParams,
    inputs: &[ArrayView2<f64>],
    dropout: Option<(f64, &mut ChaCha8Rng)>,
) -> Forward {
    if spec.variant == Variant::Logistic {
        let x = concatenate(Axis(1), inputs).expect("row counts checked");
        let mut logits = affine(&x.view(), params.layer("out"));
        softmax_rows(&mut logits);
        return Forward {
            probs: logits,
            branches: Vec::new(),
            trunk: Vec::new(),
            last_hidden: x,
        };
    }
    let mut branches = Vec::with_capacity(spec.branches.len());
    let mut outs = Vec::with_capacity(spec.branches.len());
    for (b, x) in spec.branches.iter().zip(inputs) {
        let z1 = affine(x, params.layer(&format!("branch.{}.1", b.name)));
        let a1 = relu(&z1);
        let (z2, out) = if spec.variant == Variant::Shallow {
            (None, a1.clone())
        } else {
            let z2 = affine(&a1.view(), params.layer(&format!("branch.{}.2", b.name)));
            let mut out = relu(&z2);
            if spec.variant == Variant::ResidualDeep {
                out += &a1;
            }
            (Some(z2), out)
        };
        branches.push(BranchCache { z1, a1, z2 });
        outs.push(out);
    }
    let views: Vec<ArrayView2<f64>> = outs.iter().map(|o| o.view()).collect();
    let mut h = concatenate(Axis(1), &views).expect("row counts checked");
    let mut trunk = Vec::new();
    let mut dropout = dropout.filter(|(p, _)| *p > 0.0);
    for i in 0..spec.trunk_sizes().len() {
        let z = affine(&h.view(), params.layer(&format!("trunk.{}", i + 1)));
        let mut a = relu(&z);
        let mask = dropout.as_mut().map(|(p, rng)| {
            let keep = 1.0 - *p;
            Array2::from_shape_simple_fn(a.dim(), || if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
        });
        if let Some(m) = &mask {
            a *= m;
        }
        trunk.push(TrunkCache { input: h, z, mask });
        h = a;
    }
    let mut logits = affine(&h.view(), params.layer("out"));
    softmax_rows(&mut logits);
    Forward {
        probs: logits,
        branches,
        trunk,
        last_hidden: h,
    }
}

/// Per-sample loss weights `w_i`; the loss is `(1/n) sum w_i (-ln p_i[y_i])`.
pub fn weighted_loss(probs: &Array2<f64>, targets: &[usize], weights: Option<&[f64]>) -> f64 {
    let n = targets.len().max(1) as f64;
    targets
        .iter()
        .enumerate()
        .map(|(i, &y)| weights.map_or(1.0, |w| w[y]) * -probs[[i, y]].max(f64::MIN_POSITIVE).ln())
        .sum::<f64>()
        / n
}

/// Gradient of the loss at the logits: `w_y (p - onehot(y)) / n`.
pub fn output_delta(probs: &Array2<f64>, targets: &[usize], weights: Option<&[f64]>) -> Array2<f64> {
    let n = targets.len().max(1) as f64;
    let mut d = probs.clone();
    for (i, &y) in targets.iter().enumerate() {
        d[[i, y]] -= 1.0;
        let scale = weights.map_or(1.0, |w| w[y]) / n;
        d.row_mut(i).mapv_inplace(|v| v * scale);
    }
    d
}

fn relu_grad(dz: &mut Array2<f64>, z: &Array2<f64>) {
    dz.zip_mut_with(z, |g, &zv| {
        if zv <= 0.0 {
            *g = 0.0
        }
    });
}

/// Exact gradients of the weighted cross-entropy.
pub fn backward(
    spec: &NetworkSpec,
    params: &NetworkParams,
    inputs: &[ArrayView2<f64>],
    fwd: &Forward,
    targets: &[usize],
    weights: Option<&[f64]>,
) -> NetworkParams {
    let mut grads: BTreeMap<String, Layer> = BTreeMap::new();
    let put = |grads: &mut BTreeMap<String, Layer>, key: String, input: &ArrayView2<f64>, dz: &Array2<f64>| {
        grads.insert(
            key,
            Layer {
                w: input.t().dot(dz),
                b: dz.sum_axis(Axis(0)),
            },
        );
    };
    let delta = output_delta(&fwd.probs, targets, weights);
    put(&mut grads, "out".into(), &fwd.last_hidden.view(), &delta);
    if spec.variant == Variant::Logistic {
        return NetworkParams { layers: grads };
    }
    let mut dh = delta.dot(&params.layer("out").w.t());
    for (i, tc) in fwd.trunk.iter().enumerate().rev() {
        if let Some(m) = &tc.mask {
            dh *= m;
        }
        relu_grad(&mut dh, &tc.z);
        let key = format!("trunk.{}", i + 1);
        put(&mut grads, key.clone(), &tc.input.view(), &dh);
        dh = dh.dot(&params.layer(&key).w.t());
    }
    let mut offset = 0;
    for ((b, x), bc) in spec.branches.iter().zip(inputs).zip(&fwd.branches) {
        let d_out = dh.slice(s![.., offset..offset + b.hidden]).to_owned();
        offset += b.hidden;
        let mut da1 = match &bc.z2 {
            None => d_out,
            Some(z2) => {
                let mut dz2 = d_out.clone();
                relu_grad(&mut dz2, z2);
                let key = format!("branch.{}.2", b.name);
                put(&mut grads, key.clone(), &bc.a1.view(), &dz2);
                let mut da1 = dz2.dot(&params.layer(&key).w.t());
                if spec.variant == Variant::ResidualDeep {
                    da1 += &d_out;
                }
                da1
            }
        };
        relu_grad(&mut da1, &bc.z1);
        put(&mut grads, format!("branch.{}.1", b.name), x, &da1);
    }
    NetworkParams { layers: grads }
}

/// Classes by probability descending, ties by class code ascending.
pub fn predict_topk(probs: &[f64], k: usize) -> Result<Vec<usize>> {
    if k < 1 || k > probs.len() {
        return Err(Error::config(format!("top-k: k must be in 1..={}, got {k}", probs.len())));
    }
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    order.truncate(k);
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blocks() -> Vec<(String, usize)> {
        vec![("b".to_string(), 3), ("a".to_string(), 2)]
    }

    fn inputs(n: usize, seed: u64) -> Vec<Array2<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // sorted order: a (2), b (3)
        vec![
            Array2::from_shape_simple_fn((n, 2), || rng.random::<f64>() * 2.0 - 1.0),
            Array2::from_shape_simple_fn((n, 3), || rng.random::<f64>() * 2.0 - 1.0),
        ]
    }

    fn views(x: &[Array2<f64>]) -> Vec<ArrayView2<'_, f64>> {
        x.iter().map(|a| a.view()).collect()
    }

    fn tiny(variant: Variant) -> NetworkSpec {
        NetworkSpec::with_sizes(&blocks(), variant, 4, &[6, 5]).unwrap()
    }

    #[test]
    fn softmax_output() {
        let spec = tiny(Variant::ResidualDeep);
        let p = NetworkParams::init(&spec, 1);
        let x = inputs(7, 2);
        let f = forward(&spec, &p, &views(&x), None);
        for row in f.probs.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn zero_params_give_uniform_output() {
        for v in Variant::ALL {
            let spec = tiny(v);
            let f = forward(&spec, &NetworkParams::zeros(&spec), &views(&inputs(3, 0)), None);
            assert!(f.probs.iter().all(|&p| (p - 0.1).abs() < 1e-15), "{v}");
        }
    }

    #[test]
    fn skip_path_isolation() {
        let x = inputs(4, 5);
        let run = |v: Variant| {
            let spec = tiny(v);
            let mut p = NetworkParams::init(&spec, 3);
            for (k, l) in p.layers.iter_mut() {
                if k.starts_with("branch") && k.ends_with(".2") {
                    l.w.fill(0.0);
                }
            }
            forward(&spec, &p, &views(&x), None)
        };
        let f = run(Variant::ResidualDeep);
        let a1: Vec<ArrayView2<f64>> = f.branches.iter().map(|b| b.a1.view()).collect();
        assert_eq!(f.trunk[0].input, concatenate(Axis(1), &a1).unwrap());
        let f = run(Variant::Deep);
        assert!(f.trunk[0].input.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn output_gradient_identity() {
        let probs = Array2::from_shape_vec((1, 3), vec![0.2, 0.5, 0.3]).unwrap();
        let d = output_delta(&probs, &[1], None);
        assert_eq!(d.row(0).to_vec(), vec![0.2, -0.5, 0.3]);
    }

    #[test]
    fn branch_order_is_irrelevant() {
        let fwd = NetworkSpec::with_sizes(&blocks(), Variant::ResidualDeep, 4, &[6, 5]).unwrap();
        let mut rev = blocks();
        rev.reverse();
        let back = NetworkSpec::with_sizes(&rev, Variant::ResidualDeep, 4, &[6, 5]).unwrap();
        assert_eq!(fwd, back);
        let x = inputs(5, 9);
        let a = forward(&fwd, &NetworkParams::init(&fwd, 4), &views(&x), None).probs;
        let b = forward(&back, &NetworkParams::init(&back, 4), &views(&x), None).probs;
        assert_eq!(a, b);
    }

    #[test]
    fn topk_contract() {
        let p = [0.1; 10];
        assert_eq!(predict_topk(&p, 3).unwrap(), vec![0, 1, 2]);
        let mut q = [0.05; 10];
        q[7] = 0.3;
        q[2] = 0.3;
        q[4] = 0.2;
        assert_eq!(predict_topk(&q, 1).unwrap(), vec![2]);
        let mut all = predict_topk(&q, 10).unwrap();
        assert_eq!(&all[..3], &[2, 7, 4]);
        all.sort();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert!(predict_topk(&q, 0).is_err() && predict_topk(&q, 11).is_err());
    }

    #[test]
    fn mismatched_inputs() {
        let spec = tiny(Variant::Deep);
        let x = inputs(3, 1);
        assert!(check_inputs(&spec, &views(&x)).is_ok());
        assert!(check_inputs(&spec, &views(&x[..1])).is_err());
        let bad = vec![x[1].clone(), x[0].clone()];
        assert!(check_inputs(&spec, &views(&bad)).is_err());
    }
}
