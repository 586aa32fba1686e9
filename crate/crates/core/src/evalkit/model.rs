use serde::{Deserialize, Serialize};

use crate::datakit::Dataset;
use crate::error::{Error, Result};
use crate::forest::{fit_forest, Forest, TreeParams};
use crate::neuralnet::{fit_nn, NetArchitecture, NeuralNet, NnHyperparams};
use crate::simkit::Sample;
use crate::svm::{fit_svm, SvmModel, SvmParams};

/// A trained binary detector. `predict` is `score > threshold`.
pub trait Classifier {
    fn score(&self, x: &Sample) -> f64;

    fn threshold(&self) -> f64;

    fn predict(&self, x: &Sample) -> u8 {
        u8::from(self.score(x) > self.threshold())
    }
}

/// Something that can be fit on a training fold.
pub trait Learner: Sync {
    type Model: Classifier + Send;

    fn fit(&self, train: &Dataset, seed: u64) -> Result<Self::Model>;

    fn describe(&self) -> String;
}

impl Classifier for Forest {
    fn score(&self, x: &Sample) -> f64 {
        self.vote_fraction(x)
    }

    fn threshold(&self) -> f64 {
        0.5
    }
}

impl Classifier for SvmModel {
    fn score(&self, x: &Sample) -> f64 {
        self.decision(x)
    }

    fn threshold(&self) -> f64 {
        0.0
    }
}

impl Classifier for NeuralNet {
    fn score(&self, x: &Sample) -> f64 {
        self.output(x)
    }

    fn threshold(&self) -> f64 {
        0.5
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TrainedModel {
    Forest(Forest),
    Svm(SvmModel),
    Nn(NeuralNet),
}

impl Classifier for TrainedModel {
    fn score(&self, x: &Sample) -> f64 {
        match self {
            TrainedModel::Forest(m) => m.score(x),
            TrainedModel::Svm(m) => m.score(x),
            TrainedModel::Nn(m) => m.score(x),
        }
    }

    fn threshold(&self) -> f64 {
        match self {
            TrainedModel::Forest(m) => m.threshold(),
            TrainedModel::Svm(m) => m.threshold(),
            TrainedModel::Nn(m) => m.threshold(),
        }
    }
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Versioned on-disk model document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub spec: ModelSpec,
    pub model: TrainedModel,
}

impl ModelFile {
    pub fn new(spec: ModelSpec, model: TrainedModel) -> Self {
        ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            spec,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "format_version {} (expected {MODEL_FORMAT_VERSION})",
                file.format_version
            )));
        }
        match &file.model {
            TrainedModel::Forest(f) => {
                f.scaler.check_arity()?;
                if f.trees.is_empty() {
                    return Err(Error::ModelFormat("forest has no trees".into()));
                }
            }
            TrainedModel::Svm(m) => {
                m.scaler.check_arity()?;
                if m.support_vectors.len() != m.coefficients.len() {
                    return Err(Error::ModelFormat("support vector / coefficient count mismatch".into()));
                }
            }
            TrainedModel::Nn(n) => n.check_shapes()?,
        }
        Ok(file)
    }
}

/// Model family plus hyperparameters; the unit that cross-validation and sweeps fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelSpec {
    Forest { estimators: usize, params: TreeParams },
    Svm(SvmParams),
    Nn { architecture: NetArchitecture, hyperparams: NnHyperparams },
}

impl ModelSpec {
    pub fn forest(estimators: usize) -> Self {
        ModelSpec::Forest {
            estimators,
            params: TreeParams::default(),
        }
    }

    pub fn nn(hidden: &[usize]) -> Self {
        ModelSpec::Nn {
            architecture: NetArchitecture::with_hidden(hidden),
            hyperparams: NnHyperparams::default(),
        }
    }
}

impl Learner for ModelSpec {
    type Model = TrainedModel;

    fn fit(&self, train: &Dataset, seed: u64) -> Result<TrainedModel> {
        Ok(match self {
            ModelSpec::Forest { estimators, params } => {
                TrainedModel::Forest(fit_forest(train, *estimators, params, seed)?)
            }
            ModelSpec::Svm(p) => TrainedModel::Svm(fit_svm(train, p.kernel, p.c, p.epochs, seed)?),
            ModelSpec::Nn {
                architecture,
                hyperparams,
            } => {
                let hp = NnHyperparams {
                    init_seed: seed,
                    ..hyperparams.clone()
                };
                TrainedModel::Nn(fit_nn(train, architecture, &hp)?)
            }
        })
    }

    fn describe(&self) -> String {
        match self {
            ModelSpec::Forest { estimators, .. } => format!("forest(estimators={estimators})"),
            ModelSpec::Svm(p) => format!("svm(kernel={},C={})", p.kernel.kind.name(), p.c),
            ModelSpec::Nn { architecture, .. } => {
                let hidden: Vec<String> = architecture.hidden().iter().map(|h| h.to_string()).collect();
                format!("nn(hidden={})", hidden.join(","))
            }
        }
    }
}
