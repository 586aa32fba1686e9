//! Jamming-detection workbench: a slotted link simulator that labels
//! feature windows, three from-scratch classifiers (random forest, kernel
//! SVM, feedforward network), and the evaluation harness around them.

pub mod canon;
pub mod datakit;
pub mod error;
pub mod evalkit;
pub mod forest;
pub mod neuralnet;
pub mod seed;
pub mod simkit;
pub mod svm;

pub use datakit::{csv_read, csv_write, kfold_split, Dataset, FoldPlan, Scaler};
pub use error::{Error, Result};
pub use evalkit::{
    bayes_oracle, confusion, cross_validate, metrics, roc_curve, sweep, Classifier, ConfusionMatrix, CvOutcome,
    EvalReport, Learner, ModelFile, ModelSpec, RocCurve, Sweep, SweepRow, TrainedModel,
};
pub use forest::{fit_forest, Forest, SplitCriterion, TreeParams};
pub use neuralnet::{fit_nn, NetArchitecture, NeuralNet, NnHyperparams};
pub use simkit::{
    generate_dataset, simulate_window, ChannelConfig, JammerKind, JammerProfile, LinkWindow, Sample, Scenario, ScenarioMix,
};
pub use svm::{fit_svm, KernelKind, KernelSpec, SvmModel, SvmParams};

/// Size of the canonical dataset.
pub const CANONICAL_N: usize = 10_000;
/// Seed of the canonical dataset.
pub const CANONICAL_SEED: u64 = 42;

/// The canonical dataset: the canonical scenario mix, 10000 samples, seed 42.
pub fn canonical_dataset() -> Result<Dataset> {
    generate_dataset(&ScenarioMix::canonical(), CANONICAL_N, CANONICAL_SEED)
}
