use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cuisine::CuisineClass;
use crate::error::{Error, Result};
use crate::seed::derive_seed;
use crate::weak::BitermCorpus;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BtmConfig {
    pub k: usize,
    /// Document-topic density; `None` means 50/k.
    pub alpha: Option<f64>,
    /// Topic-word density.
    pub beta: f64,
    pub gibbs_iters: usize,
    /// Top words per topic used for coherence.
    pub top_n: usize,
    /// Independent Gibbs chains; the one whose model gives the biterms the
    /// highest likelihood is kept.
    pub chains: usize,
    pub seed: u64,
}

impl Default for BtmConfig {
    fn default() -> Self {
        BtmConfig {
            k: 10,
            alpha: None,
            beta: 0.1,
            gibbs_iters: 200,
            top_n: 10,
            chains: 4,
            seed: 0,
        }
    }
}

impl BtmConfig {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.k as f64)
    }

    pub fn with_k(&self, k: usize) -> Self {
        BtmConfig {
            k,
            alpha: None,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::config("btm.k must be >= 1"));
        }
        if !(self.alpha() > 0.0) {
            return Err(Error::config("btm.alpha must be > 0"));
        }
        if !(self.beta > 0.0) {
            return Err(Error::config("btm.beta must be > 0"));
        }
        if self.top_n < 2 {
            return Err(Error::config("btm.top_n must be >= 2"));
        }
        if self.chains < 1 {
            return Err(Error::config("btm.chains must be >= 1"));
        }
        Ok(())
    }
}

/// Fitted biterm topic model.
#[derive(Debug, Clone)]
pub struct BtmModel {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub vocab: Vec<String>,
    /// `phi[t][w]`: probability of word `w` under topic `t`.
    pub phi: Vec<Vec<f64>>,
    /// Topic prior.
    pub theta: Vec<f64>,
    index: HashMap<String, usize>,
}

impl BtmModel {
    pub fn word_id(&self, w: &str) -> Option<usize> {
        self.index.get(w).copied()
    }

    /// Word ids of topic `t` by descending probability, ties by id.
    pub fn top_words(&self, t: usize, n: usize) -> Vec<usize> {
        let row = &self.phi[t];
        let mut ids: Vec<usize> = (0..row.len()).collect();
        ids.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        ids.truncate(n);
        ids
    }

    /// `sum_b ln sum_z theta_z phi_z(w_i) phi_z(w_j)` over a biterm set
    /// sharing this model's vocabulary.
    pub fn biterm_log_likelihood(&self, corpus: &BitermCorpus) -> f64 {
        corpus
            .biterms
            .iter()
            .map(|&(a, b)| {
                let (a, b) = (a as usize, b as usize);
                (0..self.k)
                    .map(|t| self.theta[t] * self.phi[t][a] * self.phi[t][b])
                    .sum::<f64>()
                    .ln()
            })
            .sum()
    }

    /// `P(z | b) ∝ theta_z phi_z(w_i) phi_z(w_j)`, normalized.
    fn biterm_posterior(&self, a: usize, b: usize) -> Vec<f64> {
        let mut p: Vec<f64> = (0..self.k)
            .map(|t| self.theta[t] * self.phi[t][a] * self.phi[t][b])
            .collect();
        normalize(&mut p);
        p
    }

    /// Topic posterior of a short document: the average biterm posterior
    /// over its biterms, or `P(z | w)` for a one-word document. Unknown
    /// words are ignored; `None` when nothing is known.
    pub fn doc_topic_posterior(&self, tokens: &[String]) -> Option<Vec<f64>> {
        let ids: Vec<usize> = tokens.iter().filter_map(|w| self.word_id(w)).collect();
        match ids.len() {
            0 => None,
            1 => {
                let mut p: Vec<f64> = (0..self.k).map(|t| self.theta[t] * self.phi[t][ids[0]]).collect();
                normalize(&mut p);
                Some(p)
            }
            n => {
                let mut acc = vec![0.0; self.k];
                let mut count = 0usize;
                for i in 0..n {
                    for j in i + 1..n {
                        for (a, p) in acc.iter_mut().zip(self.biterm_posterior(ids[i], ids[j])) {
                            *a += p;
                        }
                        count += 1;
                    }
                }
                acc.iter_mut().for_each(|a| *a /= count as f64);
                Some(acc)
            }
        }
    }

    /// `P(z | token)` for one word, normalized over topics.
    pub fn word_topic_mass(&self, word: &str) -> Option<Vec<f64>> {
        let w = self.word_id(word)?;
        let mut p: Vec<f64> = (0..self.k).map(|t| self.theta[t] * self.phi[t][w]).collect();
        normalize(&mut p);
        Some(p)
    }

    /// Map each topic to a cuisine when a single sprinkle token holds at
    /// least `min_share` of the topic's sprinkle-token probability mass.
    pub fn topic_cuisines(&self, min_share: f64) -> Vec<Option<CuisineClass>> {
        let tokens: Vec<(CuisineClass, Option<usize>)> = CuisineClass::ALL
            .iter()
            .map(|c| (*c, self.word_id(&c.sprinkle_token())))
            .collect();
        (0..self.k)
            .map(|t| {
                let masses: Vec<(CuisineClass, f64)> = tokens
                    .iter()
                    .filter_map(|(c, id)| id.map(|id| (*c, self.phi[t][id])))
                    .collect();
                let total: f64 = masses.iter().map(|m| m.1).sum();
                let (best, mass) = masses
                    .iter()
                    .copied()
                    .fold(None, |acc: Option<(CuisineClass, f64)>, m| match acc {
                        Some(a) if a.1 >= m.1 => Some(a),
                        _ => Some(m),
                    })?;
                (total > 0.0 && mass / total >= min_share).then_some(best)
            })
            .collect()
    }
}

fn normalize(p: &mut [f64]) {
    let s: f64 = p.iter().sum();
    if s > 0.0 {
        p.iter_mut().for_each(|x| *x /= s);
    }
}

/// Collapsed Gibbs sampler over biterm topic assignments.
pub struct BtmSampler {
    k: usize,
    alpha: f64,
    beta: f64,
    vocab: Vec<String>,
    biterms: Vec<(usize, usize)>,
    z: Vec<usize>,
    n_z: Vec<f64>,
    /// `n_wz[t * V + w]`
    n_wz: Vec<f64>,
    rng: ChaCha8Rng,
    probs: Vec<f64>,
}

impl BtmSampler {
    pub fn new(corpus: &BitermCorpus, cfg: &BtmConfig) -> Result<Self> {
        cfg.validate()?;
        if corpus.biterms.is_empty() {
            return Err(Error::data("biterm topic model: empty biterm set"));
        }
        let v = corpus.vocab.len();
        let k = cfg.k;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let biterms: Vec<(usize, usize)> = corpus
            .biterms
            .iter()
            .map(|&(a, b)| (a as usize, b as usize))
            .collect();
        let mut z = Vec::with_capacity(biterms.len());
        let mut n_z = vec![0.0; k];
        let mut n_wz = vec![0.0; k * v];
        for &(a, b) in &biterms {
            let t = rng.random_range(0..k);
            z.push(t);
            n_z[t] += 1.0;
            n_wz[t * v + a] += 1.0;
            n_wz[t * v + b] += 1.0;
        }
        Ok(BtmSampler {
            k,
            alpha: cfg.alpha(),
            beta: cfg.beta,
            vocab: corpus.vocab.clone(),
            biterms,
            z,
            n_z,
            n_wz,
            rng,
            probs: vec![0.0; k],
        })
    }

    /// One full pass resampling every biterm's topic.
    pub fn sweep(&mut self) {
        let v = self.vocab.len();
        let vbeta = v as f64 * self.beta;
        for i in 0..self.biterms.len() {
            let (a, b) = self.biterms[i];
            let old = self.z[i];
            self.n_z[old] -= 1.0;
            self.n_wz[old * v + a] -= 1.0;
            self.n_wz[old * v + b] -= 1.0;

            let mut total = 0.0;
            for t in 0..self.k {
                let denom = 2.0 * self.n_z[t] + vbeta;
                let p = (self.n_z[t] + self.alpha)
                    * (self.n_wz[t * v + a] + self.beta)
                    * (self.n_wz[t * v + b] + self.beta)
                    / (denom * denom);
                total += p;
                self.probs[t] = total;
            }
            let u = self.rng.random::<f64>() * total;
            let new = self.probs.iter().position(|&c| u < c).unwrap_or(self.k - 1);

            self.z[i] = new;
            self.n_z[new] += 1.0;
            self.n_wz[new * v + a] += 1.0;
            self.n_wz[new * v + b] += 1.0;
        }
    }

    /// Current smoothed estimates.
    pub fn model(&self) -> BtmModel {
        let v = self.vocab.len();
        let vbeta = v as f64 * self.beta;
        let nb = self.biterms.len() as f64;
        let phi = (0..self.k)
            .map(|t| {
                let denom = 2.0 * self.n_z[t] + vbeta;
                (0..v).map(|w| (self.n_wz[t * v + w] + self.beta) / denom).collect()
            })
            .collect();
        let theta = (0..self.k)
            .map(|t| (self.n_z[t] + self.alpha) / (nb + self.k as f64 * self.alpha))
            .collect();
        BtmModel {
            k: self.k,
            alpha: self.alpha,
            beta: self.beta,
            vocab: self.vocab.clone(),
            phi,
            theta,
            index: self.vocab.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect(),
        }
    }
}

fn run_chain(corpus: &BitermCorpus, cfg: &BtmConfig) -> Result<BtmModel> {
    let mut sampler = BtmSampler::new(corpus, cfg)?;
    for _ in 0..cfg.gibbs_iters {
        sampler.sweep();
    }
    Ok(sampler.model())
}

/// Run `cfg.chains` chains and keep the most likely model; ties keep the
/// earlier chain. Chain 0 is seeded with `cfg.seed` itself.
pub fn btm_fit(corpus: &BitermCorpus, cfg: &BtmConfig) -> Result<BtmModel> {
    cfg.validate()?;
    let fits: Vec<(f64, BtmModel)> = (0..cfg.chains)
        .into_par_iter()
        .map(|c| {
            let seed = if c == 0 { cfg.seed } else { derive_seed(cfg.seed, &format!("btm.chain.{c}")) };
            let model = run_chain(corpus, &BtmConfig { seed, ..cfg.clone() })?;
            Ok((model.biterm_log_likelihood(corpus), model))
        })
        .collect::<Result<_>>()?;
    let mut best: Option<(f64, BtmModel)> = None;
    for (ll, m) in fits {
        if best.as_ref().is_none_or(|b| ll > b.0) {
            best = Some((ll, m));
        }
    }
    Ok(best.expect("at least one chain").1)
}
