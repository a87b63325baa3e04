use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::embed::sgns::{axpy, dot, init_uniform, sigmoid, Encoded, NegativeSampler};
use crate::embed::{context_range, Corpus, EmbedConfig, EmbeddingMatrix};
use crate::error::{Error, Result};

/// Distributed-memory paragraph vectors: each token is predicted from the
/// mean of its document vector and the word vectors within `window`.
/// Returns document vectors; documents left empty by pruning are absent.
pub fn pv_train(corpus: &Corpus, cfg: &EmbedConfig) -> Result<EmbeddingMatrix> {
    cfg.validate()?;
    let enc = Encoded::new(corpus, cfg.min_count);
    if enc.words.is_empty() {
        return Err(Error::data("pv: vocabulary is empty after min_count pruning"));
    }
    let dim = cfg.dim;
    let neg = NegativeSampler::new(&enc.counts)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut docv = init_uniform(enc.docs.len(), dim, &mut rng);
    let mut wordv = init_uniform(enc.words.len(), dim, &mut rng);
    let mut output = vec![0.0f32; enc.words.len() * dim];
    let total = enc.n_tokens() * cfg.epochs;
    let mut done = 0;
    let mut h = vec![0.0f32; dim];
    let mut grad = vec![0.0f32; dim];

    for _ in 0..cfg.epochs {
        for (d, doc) in enc.docs.iter().enumerate() {
            let n = doc.len();
            for i in 0..n {
                let alpha = cfg.rate(done, total);
                done += 1;
                h.copy_from_slice(&docv[d * dim..(d + 1) * dim]);
                let mut count = 1;
                for j in context_range(i, n, cfg.window) {
                    let w = doc[j] as usize;
                    axpy(&mut h, 1.0, &wordv[w * dim..(w + 1) * dim]);
                    count += 1;
                }
                let inv = 1.0 / count as f32;
                h.iter_mut().for_each(|x| *x *= inv);

                grad.iter_mut().for_each(|g| *g = 0.0);
                let target = doc[i];
                for k in 0..=cfg.negative {
                    let (t, label) = if k == 0 {
                        (target, 1.0)
                    } else {
                        let t = neg.sample(&mut rng);
                        if t == target {
                            continue;
                        }
                        (t, 0.0)
                    };
                    let out = &mut output[t as usize * dim..(t as usize + 1) * dim];
                    let g = (label - sigmoid(dot(&h, out))) * alpha;
                    axpy(&mut grad, g, out);
                    axpy(out, g, &h);
                }
                axpy(&mut docv[d * dim..(d + 1) * dim], 1.0, &grad);
                for j in context_range(i, n, cfg.window) {
                    let w = doc[j] as usize;
                    axpy(&mut wordv[w * dim..(w + 1) * dim], 1.0, &grad);
                }
            }
        }
    }

    let mut m = EmbeddingMatrix::new(dim, "macro");
    m.config = Some(cfg.clone());
    m.direction = Some(corpus.direction);
    for (d, id) in enc.doc_ids.iter().enumerate() {
        if !enc.docs[d].is_empty() {
            m.insert(id, docv[d * dim..(d + 1) * dim].to_vec())?;
        }
    }
    Ok(m)
}
