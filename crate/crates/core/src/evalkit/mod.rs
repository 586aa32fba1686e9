//! Evaluation: the shared model contract, confusion counting and detection
//! metrics, cross-validation, ROC curves, hyperparameter sweeps and the
//! histogram Bayes oracle over the simulator.

mod cv;
mod metrics;
mod model;
mod oracle;
mod roc;
mod sweep;

pub use cv::{cross_validate, cross_validate_with_plan, CvOutcome};
pub use metrics::{confusion, metrics, ConfusionMatrix, EvalReport, FoldReport, Metrics, Rate};
pub use model::{Classifier, Learner, ModelFile, ModelSpec, TrainedModel, MODEL_FORMAT_VERSION};
pub use oracle::{bayes_oracle, BAYES_BINS, CANONICAL_BAYES_ACCURACY, CANONICAL_BAYES_N_MC, MIN_ORACLE_DRAWS};
pub use roc::{roc_curve, RocCurve, RocPoint};
pub use sweep::{sweep, Sweep, SweepRow};
