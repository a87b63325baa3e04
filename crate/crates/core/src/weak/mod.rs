//! Weak supervision over restaurant names: seed keywords, bootstrapped
//! keyword expansion, and a sprinkled biterm topic model used for
//! diagnostics and optional label augmentation.

mod biterm;
mod bootstrap;
mod btm;
mod coherence;
mod labels;
mod taxonomy;
mod tokenize;

pub use biterm::{extract_biterms, stratified_sample_biterms, Biterm, BitermCorpus};
pub use bootstrap::{bootstrap_expand, write_bootstrap_report, BootstrapThresholds, BootstrapWord};
pub use btm::{btm_fit, BtmConfig, BtmModel, BtmSampler};
pub use coherence::{coherence_sweep, umass_coherence, write_coherence_report, Coherence, DEFAULT_K_VALUES};
pub use labels::{
    apply_labels, read_truth_labels, seed_label, topic_labels, weak_label, Label, LabelSet,
    LabelSource, NamedRestaurant, WeakLabelOutcome,
};
pub use taxonomy::Taxonomy;
pub use tokenize::tokenize_name;
