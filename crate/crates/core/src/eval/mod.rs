//! Evaluation protocol: stratified splits and folds, accuracy and confusion
//! reports, leave-one-block-out ablation, cross-period stability and the
//! per-cuisine summary table.

mod ablation;
mod metrics;
mod split;
mod stability;
mod summary;

pub use ablation::{ablation, evaluate_model, fit_evaluate, AblationRow, AblationTable};
pub use metrics::{evaluate, predictions, MetricsReport, Prediction};
pub use split::{kfold, stratified_split};
pub use stability::stability;
pub use summary::{cuisine_summary, expense_per_person, summary_text, summary_tsv, SummaryRow};
