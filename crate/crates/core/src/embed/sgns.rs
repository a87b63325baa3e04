use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

use crate::embed::{context_range, Corpus, EmbedConfig, EmbeddingMatrix};
use crate::error::{Error, Result};

/// Vocabulary kept after `min_count` pruning, in ascending key order, plus
/// the documents re-encoded as ids with pruned tokens removed.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub words: Vec<String>,
    pub counts: Vec<u64>,
    pub doc_ids: Vec<String>,
    pub docs: Vec<Vec<u32>>,
}

impl Encoded {
    pub fn new(corpus: &Corpus, min_count: u64) -> Self {
        let mut words = Vec::new();
        let mut counts = Vec::new();
        let mut id = std::collections::HashMap::new();
        for (w, &c) in &corpus.vocab {
            if c >= min_count.max(1) {
                id.insert(w.as_str(), words.len() as u32);
                words.push(w.clone());
                counts.push(c);
            }
        }
        let (doc_ids, docs) = corpus
            .docs
            .iter()
            .map(|(d, toks)| (d.clone(), toks.iter().filter_map(|t| id.get(t.as_str()).copied()).collect()))
            .unzip();
        Encoded {
            words,
            counts,
            doc_ids,
            docs,
        }
    }

    pub fn n_tokens(&self) -> usize {
        self.docs.iter().map(Vec::len).sum()
    }
}

/// Draws negatives with probability proportional to `count^0.75`.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    alias: WeightedAliasIndex<f64>,
    probs: Vec<f64>,
}

impl NegativeSampler {
    pub fn new(counts: &[u64]) -> Result<Self> {
        let w: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(0.75)).collect();
        let total: f64 = w.iter().sum();
        let probs = w.iter().map(|x| x / total).collect();
        let alias = WeightedAliasIndex::new(w).map_err(|e| Error::data(format!("negative table: {e}")))?;
        Ok(NegativeSampler { alias, probs })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> u32 {
        self.alias.sample(rng) as u32
    }
}

pub(crate) fn sigmoid(x: f32) -> f32 {
    if x > 20.0 {
        1.0
    } else if x < -20.0 {
        0.0
    } else {
        1.0 / (1.0 + (-x).exp())
    }
}

pub(crate) fn dot(a: &[f32], b: &[f32]) -> f32 {
    // eight independent lanes so the loop vectorizes
    let mut acc = [0.0f32; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: f32 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    acc.iter().sum::<f32>() + tail
}

pub(crate) fn axpy(y: &mut [f32], a: f32, x: &[f32]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub(crate) fn init_uniform(n: usize, dim: usize, rng: &mut ChaCha8Rng) -> Vec<f32> {
    (0..n * dim).map(|_| (rng.random::<f32>() - 0.5) / dim as f32).collect()
}

/// One positive pair and its negatives, for loss evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub center: u32,
    pub context: u32,
    pub negatives: Vec<u32>,
}

/// Skip-gram with negative sampling. Single-threaded and deterministic.
pub struct Sgns {
    cfg: EmbedConfig,
    pub enc: Encoded,
    neg: NegativeSampler,
    input: Vec<f32>,
    output: Vec<f32>,
    rng: ChaCha8Rng,
    done: usize,
    total: usize,
}

impl Sgns {
    pub fn new(corpus: &Corpus, cfg: &EmbedConfig) -> Result<Self> {
        cfg.validate()?;
        let enc = Encoded::new(corpus, cfg.min_count);
        if enc.words.is_empty() {
            return Err(Error::data("sgns: vocabulary is empty after min_count pruning"));
        }
        let neg = NegativeSampler::new(&enc.counts)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let input = init_uniform(enc.words.len(), cfg.dim, &mut rng);
        let output = vec![0.0; enc.words.len() * cfg.dim];
        let total = enc.n_tokens() * cfg.epochs;
        Ok(Sgns {
            cfg: cfg.clone(),
            enc,
            neg,
            input,
            output,
            rng,
            done: 0,
            total,
        })
    }

    pub fn train_epoch(&mut self) {
        let dim = self.cfg.dim;
        let mut grad = vec![0.0f32; dim];
        for d in 0..self.enc.docs.len() {
            let n = self.enc.docs[d].len();
            for i in 0..n {
                let alpha = self.cfg.rate(self.done, self.total);
                self.done += 1;
                let center = self.enc.docs[d][i] as usize;
                for j in context_range(i, n, self.cfg.window) {
                    let ctx = self.enc.docs[d][j];
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    let inp = &self.input[center * dim..(center + 1) * dim];
                    for k in 0..=self.cfg.negative {
                        let (target, label) = if k == 0 {
                            (ctx, 1.0)
                        } else {
                            let t = self.neg.sample(&mut self.rng);
                            if t == ctx {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let out = &mut self.output[target as usize * dim..(target as usize + 1) * dim];
                        let g = (label - sigmoid(dot(inp, out))) * alpha;
                        axpy(&mut grad, g, out);
                        axpy(out, g, inp);
                    }
                    axpy(&mut self.input[center * dim..(center + 1) * dim], 1.0, &grad);
                }
            }
        }
    }

    /// Draw `n` positive pairs uniformly over all window pairs, each with
    /// `negative` negatives, from a separate RNG.
    pub fn sample_examples(&self, n: usize, seed: u64) -> Vec<Example> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let docs: Vec<usize> = (0..self.enc.docs.len()).filter(|&d| self.enc.docs[d].len() > 1).collect();
        let mut out = Vec::with_capacity(n);
        if docs.is_empty() {
            return out;
        }
        while out.len() < n {
            let d = &self.enc.docs[docs[rng.random_range(0..docs.len())]];
            let i = rng.random_range(0..d.len());
            let ctx: Vec<usize> = context_range(i, d.len(), self.cfg.window).collect();
            let j = ctx[rng.random_range(0..ctx.len())];
            let negatives = (0..self.cfg.negative).map(|_| self.neg.sample(&mut rng)).collect();
            out.push(Example {
                center: d[i],
                context: d[j],
                negatives,
            });
        }
        out
    }

    /// Mean negative-sampling loss over `batch`.
    pub fn loss(&self, batch: &[Example]) -> f64 {
        let dim = self.cfg.dim;
        fn v(m: &[f32], i: u32, dim: usize) -> &[f32] {
            &m[i as usize * dim..(i as usize + 1) * dim]
        }
        let ln_sig = |x: f32| -> f64 { -((-(x as f64)).exp().ln_1p()) };
        let total: f64 = batch
            .iter()
            .map(|e| {
                let c = v(&self.input, e.center, dim);
                let mut l = -ln_sig(dot(c, v(&self.output, e.context, dim)));
                for &n in &e.negatives {
                    l -= ln_sig(-dot(c, v(&self.output, n, dim)));
                }
                l
            })
            .sum();
        total / batch.len().max(1) as f64
    }

    pub fn matrix(&self) -> EmbeddingMatrix {
        let dim = self.cfg.dim;
        let mut m = EmbeddingMatrix::new(dim, "micro");
        m.config = Some(self.cfg.clone());
        for (i, w) in self.enc.words.iter().enumerate() {
            m.insert(w, self.input[i * dim..(i + 1) * dim].to_vec()).expect("finite vectors");
        }
        m
    }
}

/// Train skip-gram word vectors; returns the input vectors.
pub fn sgns_train(corpus: &Corpus, cfg: &EmbedConfig) -> Result<EmbeddingMatrix> {
    let mut model = Sgns::new(corpus, cfg)?;
    for _ in 0..cfg.epochs {
        model.train_epoch();
    }
    let mut m = model.matrix();
    m.direction = Some(corpus.direction);
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::{skipgram_pair_count, Direction};

    fn cos(a: &[f32], b: &[f32]) -> f32 {
        dot(a, b) / (dot(a, a).sqrt() * dot(b, b).sqrt())
    }

    /// Two-token documents drawn within one of two disjoint communities.
    fn pairs_corpus() -> Corpus {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut docs = Vec::new();
        for i in 0..2000 {
            let g = if i % 2 == 0 { "a" } else { "b" };
            let x = rng.random_range(0..5);
            let y = (x + rng.random_range(1..5)) % 5;
            docs.push((format!("d{i:04}"), vec![format!("{g}{x}"), format!("{g}{y}")]));
        }
        Corpus::from_docs(Direction::CustomerDocs, docs)
    }

    fn small_cfg() -> EmbedConfig {
        EmbedConfig {
            dim: 16,
            window: 2,
            negative: 3,
            min_count: 1,
            ..EmbedConfig::micro()
        }
    }

    #[test]
    fn community_members_end_up_close() {
        let m = sgns_train(&pairs_corpus(), &small_cfg()).unwrap();
        let v = |k: String| m.get(&k).unwrap();
        for x in 0..5 {
            for y in 0..5 {
                if x != y {
                    let near = cos(v(format!("a{x}")), v(format!("a{y}")));
                    let far = cos(v(format!("a{x}")), v(format!("b{y}")));
                    assert!(near > far, "a{x} a{y}: {near} vs b{y}: {far}");
                }
            }
        }
    }

    #[test]
    fn vector_length_follows_dim() {
        let m = sgns_train(&pairs_corpus(), &EmbedConfig { dim: 200, epochs: 1, ..small_cfg() }).unwrap();
        assert!(m.iter().all(|(_, v)| v.len() == 200));
        assert_eq!(m.direction, Some(Direction::CustomerDocs));
    }

    #[test]
    fn loss_drops_over_epochs() {
        let mut docs = Vec::new();
        for i in 0..300u32 {
            let g = i % 3;
            let toks = (0..8).map(|j| format!("w{}", g * 10 + (i + j) % 7)).collect();
            docs.push((format!("d{i:03}"), toks));
        }
        let corpus = Corpus::from_docs(Direction::CustomerDocs, docs);
        let mut model = Sgns::new(&corpus, &small_cfg()).unwrap();
        let batch = model.sample_examples(500, 99);
        let mut last = model.loss(&batch);
        for _ in 0..5 {
            model.train_epoch();
            let now = model.loss(&batch);
            assert!(now < last, "{now} >= {last}");
            last = now;
        }
    }

    #[test]
    fn pruning_and_empty_vocab() {
        let corpus = Corpus::from_docs(
            Direction::CustomerDocs,
            vec![("d".into(), vec!["x".into(), "y".into(), "x".into()])],
        );
        let enc = Encoded::new(&corpus, 2);
        assert_eq!(enc.words, vec!["x".to_string()]);
        assert_eq!(enc.docs, vec![vec![0, 0]]);
        assert!(sgns_train(&corpus, &EmbedConfig { min_count: 5, ..small_cfg() }).is_err());
    }

    #[test]
    fn pair_count_matches_closed_form() {
        let lens = [0usize, 1, 2, 3, 7, 25, 60];
        let docs: Vec<Vec<u32>> = lens.iter().map(|&n| vec![0; n]).collect();
        for w in [1usize, 2, 5, 20, 100] {
            let closed: usize = lens
                .iter()
                .map(|&n| (0..n).map(|i| i.min(w) + (n - 1 - i).min(w)).sum::<usize>())
                .sum();
            assert_eq!(skipgram_pair_count(&docs, w), closed);
        }
    }

    #[test]
    fn negative_table_converges() {
        let counts = [1u64, 5, 10, 50, 100, 3];
        let s = NegativeSampler::new(&counts).unwrap();
        let z: f64 = counts.iter().map(|&c| (c as f64).powf(0.75)).sum();
        let mut hits = [0usize; 6];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 1_000_000;
        for _ in 0..n {
            hits[s.sample(&mut rng) as usize] += 1;
        }
        for (i, &c) in counts.iter().enumerate() {
            let want = (c as f64).powf(0.75) / z;
            assert!((s.probabilities()[i] - want).abs() < 1e-12);
            let got = hits[i] as f64 / n as f64;
            assert!((got - want).abs() < 0.01, "{i}: {got} vs {want}");
        }
    }

    #[test]
    fn deterministic() {
        let a = sgns_train(&pairs_corpus(), &small_cfg()).unwrap();
        let b = sgns_train(&pairs_corpus(), &small_cfg()).unwrap();
        assert_eq!(a, b);
    }
}
