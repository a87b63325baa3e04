//! Restaurant representations from co-visitation (skip-gram over customer
//! documents, paragraph vectors over restaurant documents) and from names
//! (max-pooled pretrained word vectors).

mod config;
mod corpus;
mod matrix;
mod name;
mod pv;
mod sgns;

pub use config::EmbedConfig;
pub use corpus::{build_customer_corpus, build_restaurant_corpus, context_range, skipgram_pair_count, Corpus, Direction};
pub use matrix::{load_pretrained_vectors, EmbedMeta, EmbeddingMatrix};
pub use name::name_embedding;
pub use pv::pv_train;
pub use sgns::{sgns_train, Encoded, Example, NegativeSampler, Sgns};
