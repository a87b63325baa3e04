//! Statistical feature blocks computed from each restaurant's transactions.

mod blocks;
mod deciles;
mod features;
mod gmm;

pub use blocks::{
    hourly_capacity, loyalty_deciles, party_features, revisit_counts, revisit_deciles, temporal_dists, tip_series,
    zip_feature, PartyFeatures, Temporal, MAX_PARTY,
};
pub use deciles::{deciles, median, Deciles};
pub use features::{extract_all, extract_restaurant, stat_columns, StatFeatureBlock, StatTable, STAT_BLOCKS, STAT_DIM};
pub use gmm::{aic, gmm_fit, select_k_aic, GmmModel, DEFAULT_K_MAX, GMM_MAX_ITERS, GMM_TOL};
