use ndarray::Array2;

use crate::embed::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::nnet::FeatureSet;
use crate::stats::{StatTable, STAT_BLOCKS};

pub const NAME_BLOCK: &str = "name_embedding";
pub const MICRO_BLOCK: &str = "micro_embedding";
pub const MACRO_BLOCK: &str = "macro_embedding";

/// All fourteen feature block names: the statistical blocks followed by the
/// three embeddings.
pub fn block_names() -> Vec<String> {
    STAT_BLOCKS
        .iter()
        .map(|(n, _)| n.to_string())
        .chain([NAME_BLOCK, MICRO_BLOCK, MACRO_BLOCK].map(String::from))
        .collect()
}

fn matrix_block(m: &EmbeddingMatrix, ids: &[&str]) -> Array2<f64> {
    let (rows, _) = m.aligned(ids);
    let dim = m.dim();
    Array2::from_shape_fn((ids.len(), dim), |(i, j)| rows[i][j])
}

/// One row per restaurant in the statistics table. Restaurants missing from
/// an embedding get a zero vector for that block.
pub fn assemble_features(
    stats: &StatTable,
    name: &EmbeddingMatrix,
    micro: &EmbeddingMatrix,
    macro_: &EmbeddingMatrix,
) -> Result<FeatureSet> {
    let ids: Vec<&str> = stats.rows.iter().map(|(id, _)| id.as_str()).collect();
    let mut blocks = Vec::new();
    for (block, width) in STAT_BLOCKS {
        let mut a = Array2::zeros((ids.len(), width));
        for (i, (_, f)) in stats.rows.iter().enumerate() {
            let v = f.block(block).expect("known block");
            a.row_mut(i).iter_mut().zip(v).for_each(|(d, s)| *d = *s);
        }
        blocks.push((block.to_string(), a));
    }
    for (label, m) in [(NAME_BLOCK, name), (MICRO_BLOCK, micro), (MACRO_BLOCK, macro_)] {
        if m.dim() == 0 {
            return Err(Error::data(format!("{label}: empty embedding")));
        }
        blocks.push((label.to_string(), matrix_block(m, &ids)));
    }
    FeatureSet::new(ids.iter().map(|s| s.to_string()).collect(), blocks)
}
