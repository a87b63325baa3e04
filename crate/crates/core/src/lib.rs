//! Cuisine inference from card transaction logs.
//!
//! The pipeline labels restaurants from their names with weak supervision,
//! extracts statistical and embedding features from their transactions, and
//! trains a multi-branch feedforward classifier. A seeded generator
//! produces synthetic logs with known ground truth.

pub mod cuisine;
pub mod embed;
pub mod error;
pub mod eval;
pub mod nnet;
pub mod pipeline;
pub mod seed;
pub mod stats;
pub mod synth;
pub mod txn;
pub mod weak;

pub use cuisine::CuisineClass;
pub use error::{Error, Result};
pub use txn::{Transaction, TxnIndex, Zip5};
