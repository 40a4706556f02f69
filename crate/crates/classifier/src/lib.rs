//! Multi-class RBF support vector machine for rhythm feature datasets.
//!
//! Training standardises features, picks `(C, gamma)` by stratified k-fold
//! cross-validation and refits one binary machine per class pair with an
//! SMO dual solver. Evaluation reports accuracy, weighted F1 and the
//! confusion matrix; permutation importance ranks the feature columns.

mod error;
pub mod importance;
pub mod metrics;
pub mod model;
pub mod search;
pub mod smo;
pub mod split;

pub use error::{ClassifierError, Result};
pub use importance::{importance_table, permutation_importance, FeatureImportance, DEFAULT_N_REPEATS};
pub use metrics::{evaluate, ClassMetrics, EvalReport};
pub use model::{fit, BinaryMachine, Kernel, Standardizer, SvmModel, SvmParams, MODEL_FORMAT_VERSION};
pub use search::{train, Grid, GridPoint, GridReport, TrainConfig};
pub use split::{split_dataset, stratified_folds};
