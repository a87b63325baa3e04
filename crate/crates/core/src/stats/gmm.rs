use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GMM_TOL: f64 = 1e-6;
pub const GMM_MAX_ITERS: usize = 200;
pub const DEFAULT_K_MAX: usize = 6;
const LLOYD_ITERS: usize = 100;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// One-dimensional Gaussian mixture, components sorted by mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmModel {
    pub k: usize,
    pub phi: Vec<f64>,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub loglik: f64,
    pub aic: f64,
    pub sigma_floor: f64,
    /// Log-likelihood before the first M step and after each one.
    pub ll_trace: Vec<f64>,
}

pub fn aic(k: usize, loglik: f64) -> f64 {
    2.0 * (3 * k - 1) as f64 - 2.0 * loglik
}

fn log_normal(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    -0.5 * z * z - sigma.ln() - LN_SQRT_2PI
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl GmmModel {
    /// Component log-joint `ln phi_j + ln N(x | mu_j, sigma_j)` for each `j`.
    fn log_joint(&self, x: f64, out: &mut [f64]) {
        for j in 0..self.k {
            out[j] = self.phi[j].ln() + log_normal(x, self.mu[j], self.sigma[j]);
        }
    }

    pub fn log_likelihood(&self, x: &[f64]) -> f64 {
        let mut buf = vec![0.0; self.k];
        x.iter()
            .map(|&xi| {
                self.log_joint(xi, &mut buf);
                log_sum_exp(&buf)
            })
            .sum()
    }

    /// Index of the most responsible component; ties go to the lower index.
    pub fn assign(&self, x: f64) -> usize {
        let mut buf = vec![0.0; self.k];
        self.log_joint(x, &mut buf);
        let mut best = 0;
        for j in 1..self.k {
            if buf[j] > buf[best] {
                best = j;
            }
        }
        best
    }
}

fn std_dev(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt()
}

/// k-means++ seeding: first center uniform, then proportional to squared
/// distance from the nearest chosen center.
fn kmeanspp(x: &[f64], k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut centers = vec![x[rng.random_range(0..x.len())]];
    let mut d2: Vec<f64> = x.iter().map(|v| (v - centers[0]).powi(2)).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut idx = x.len() - 1;
            for (i, d) in d2.iter().enumerate() {
                acc += d;
                if u < acc {
                    idx = i;
                    break;
                }
            }
            idx
        } else {
            rng.random_range(0..x.len())
        };
        let c = x[pick];
        centers.push(c);
        for (d, v) in d2.iter_mut().zip(x) {
            *d = d.min((v - c).powi(2));
        }
    }
    centers
}

/// Fit a `k`-component mixture by EM.
///
/// Starts from k-means++ centers refined by Lloyd iterations, taking the
/// hard-cluster moments as initial parameters, then
/// alternates E and M steps until the log-likelihood gain drops below
/// [`GMM_TOL`] or [`GMM_MAX_ITERS`] M steps have run. Standard deviations
/// are floored at `max(1, 1e-3 std(x))`.
pub fn gmm_fit(x: &[f64], k: usize, seed: u64) -> Result<GmmModel> {
    if k == 0 {
        return Err(Error::config("gmm: k must be >= 1"));
    }
    if x.len() < k {
        return Err(Error::data(format!("gmm: {} points for {k} components", x.len())));
    }
    let n = x.len();
    let floor = (1e-3 * std_dev(x)).max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = kmeanspp(x, k, &mut rng);

    // Lloyd refinement, then hard-assignment moments as the starting point
    let mut counts = vec![0usize; k];
    let mut sums = vec![0.0; k];
    let mut sq = vec![0.0; k];
    for _ in 0..LLOYD_ITERS {
        counts.iter_mut().for_each(|c| *c = 0);
        sums.iter_mut().for_each(|c| *c = 0.0);
        sq.iter_mut().for_each(|c| *c = 0.0);
        for &v in x {
            let j = (0..k)
                .min_by(|&a, &b| (v - centers[a]).abs().total_cmp(&(v - centers[b]).abs()))
                .expect("k >= 1");
            counts[j] += 1;
            sums[j] += v;
            sq[j] += v * v;
        }
        let next: Vec<f64> = (0..k)
            .map(|j| if counts[j] > 0 { sums[j] / counts[j] as f64 } else { centers[j] })
            .collect();
        if next == centers {
            break;
        }
        centers = next;
    }
    let mut model = GmmModel {
        k,
        phi: vec![0.0; k],
        mu: centers.clone(),
        sigma: vec![floor; k],
        loglik: f64::NEG_INFINITY,
        aic: f64::INFINITY,
        sigma_floor: floor,
        ll_trace: Vec::new(),
    };
    for j in 0..k {
        let c = counts[j].max(1) as f64;
        model.phi[j] = counts[j].max(1) as f64 / (n + counts.iter().filter(|&&c| c == 0).count()) as f64;
        if counts[j] > 0 {
            let m = sums[j] / c;
            model.mu[j] = m;
            model.sigma[j] = (sq[j] / c - m * m).max(0.0).sqrt().max(floor);
        }
    }

    let mut resp = vec![0.0; n * k];
    let mut buf = vec![0.0; k];
    let e_step = |model: &GmmModel, resp: &mut [f64], buf: &mut [f64]| -> f64 {
        let mut ll = 0.0;
        for (i, &v) in x.iter().enumerate() {
            model.log_joint(v, buf);
            let lse = log_sum_exp(buf);
            ll += lse;
            for j in 0..k {
                resp[i * k + j] = (buf[j] - lse).exp();
            }
        }
        ll
    };

    let mut ll = e_step(&model, &mut resp, &mut buf);
    model.ll_trace.push(ll);
    for _ in 0..GMM_MAX_ITERS {
        for j in 0..k {
            let nk: f64 = (0..n).map(|i| resp[i * k + j]).sum();
            if nk <= f64::MIN_POSITIVE {
                continue;
            }
            let mean = (0..n).map(|i| resp[i * k + j] * x[i]).sum::<f64>() / nk;
            let var = (0..n).map(|i| resp[i * k + j] * (x[i] - mean).powi(2)).sum::<f64>() / nk;
            model.phi[j] = nk / n as f64;
            model.mu[j] = mean;
            model.sigma[j] = var.sqrt().max(floor);
        }
        let s: f64 = model.phi.iter().sum();
        model.phi.iter_mut().for_each(|p| *p /= s);
        let next = e_step(&model, &mut resp, &mut buf);
        model.ll_trace.push(next);
        let gain = next - ll;
        ll = next;
        if gain < GMM_TOL {
            break;
        }
    }

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| model.mu[a].total_cmp(&model.mu[b]).then(a.cmp(&b)));
    model.phi = order.iter().map(|&j| model.phi[j]).collect();
    model.mu = order.iter().map(|&j| model.mu[j]).collect();
    model.sigma = order.iter().map(|&j| model.sigma[j]).collect();
    model.loglik = ll;
    model.aic = aic(k, ll);
    Ok(model)
}

/// Fit `K = 1..=min(k_max, |x|)` and keep the lowest AIC; ties keep the
/// smaller `K`.
pub fn select_k_aic(x: &[f64], k_max: usize, seed: u64) -> Result<GmmModel> {
    if x.is_empty() {
        return Err(Error::data("gmm: no points"));
    }
    let mut best: Option<GmmModel> = None;
    for k in 1..=k_max.min(x.len()).max(1) {
        let m = gmm_fit(x, k, seed.wrapping_add(k as u64))?;
        if best.as_ref().is_none_or(|b| m.aic < b.aic) {
            best = Some(m);
        }
    }
    Ok(best.expect("at least one fit"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    pub(crate) fn two_clusters(seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Normal::new(1000.0, 50.0).unwrap();
        let b = Normal::new(3000.0, 50.0).unwrap();
        let mut x: Vec<f64> = (0..500).map(|_| a.sample(&mut rng)).collect();
        x.extend((0..500).map(|_| b.sample(&mut rng)));
        x
    }

    #[test]
    fn single_component_matches_moments() {
        let x: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 400.0 } else { 600.0 }).collect();
        let m = gmm_fit(&x, 1, 0).unwrap();
        assert!((m.mu[0] - 500.0).abs() < 1e-6);
        assert!((m.sigma[0] - 100.0).abs() < 1e-6);
        assert_eq!(m.phi, vec![1.0]);
    }

    #[test]
    fn constant_input_hits_the_floor() {
        let m = gmm_fit(&[250.0; 40], 1, 3).unwrap();
        assert_eq!(m.sigma[0], 1.0);
        assert!(m.loglik.is_finite());
        let m = gmm_fit(&[250.0; 40], 2, 3).unwrap();
        assert!(m.loglik.is_finite() && m.mu.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn two_clusters_are_recovered() {
        let x = two_clusters(1);
        let m = gmm_fit(&x, 2, 9).unwrap();
        assert!((m.mu[0] - 1000.0).abs() < 25.0 && (m.mu[1] - 3000.0).abs() < 25.0, "{:?}", m.mu);
        assert!((m.phi[0] - 0.5).abs() < 0.05);
        assert!((m.aic - (2.0 * 5.0 - 2.0 * m.log_likelihood(&x))).abs() < 1e-6);
    }

    #[test]
    fn loglik_never_decreases() {
        for seed in 0..10 {
            let x = two_clusters(seed);
            let m = gmm_fit(&x, 3, seed).unwrap();
            for w in m.ll_trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0));
            }
        }
    }

    #[test]
    fn too_few_points() {
        assert!(gmm_fit(&[1.0, 2.0], 3, 0).is_err());
        assert!(select_k_aic(&[], 6, 0).is_err());
        assert!(select_k_aic(&[1.0, 5.0, 9.0], 6, 0).unwrap().k <= 3);
    }

    #[test]
    fn tight_cluster_mostly_selects_one() {
        // AIC overfits mixtures now and then, so this is a rate, not a sure thing
        let d = Normal::new(1500.0, 30.0).unwrap();
        let ones = (0..40)
            .filter(|&s| {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                let x: Vec<f64> = (0..400).map(|_| d.sample(&mut rng)).collect();
                select_k_aic(&x, 6, s).unwrap().k == 1
            })
            .count();
        assert!(ones >= 24, "{ones}/40");
    }
}
