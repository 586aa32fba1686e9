use serde::{Deserialize, Serialize};

use crate::datakit::Dataset;

use super::model::Classifier;

/// Outcome counts with class 1 ("attack") as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

/// A proportion kept as counts so identities hold exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rate {
    pub count: u64,
    pub total: u64,
}

impl Rate {
    /// `None` for an empty denominator.
    pub fn value(self) -> Option<f64> {
        (self.total > 0).then(|| self.count as f64 / self.total as f64)
    }
}

impl ConfusionMatrix {
    pub fn record(&mut self, label: u8, predicted: u8) {
        match (label, predicted) {
            (1, 1) => self.tp += 1,
            (1, _) => self.fn_ += 1,
            (_, 1) => self.fp += 1,
            _ => self.tn += 1,
        }
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        self.tp += other.tp;
        self.fn_ += other.fn_;
        self.fp += other.fp;
        self.tn += other.tn;
    }

    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> u64 {
        self.fp + self.tn
    }

    pub fn total(&self) -> u64 {
        self.positives() + self.negatives()
    }

    pub fn detection(&self) -> Rate {
        Rate {
            count: self.tp,
            total: self.positives(),
        }
    }

    pub fn miss(&self) -> Rate {
        Rate {
            count: self.fn_,
            total: self.positives(),
        }
    }

    pub fn false_alarm(&self) -> Rate {
        Rate {
            count: self.fp,
            total: self.negatives(),
        }
    }

    pub fn correct(&self) -> Rate {
        Rate {
            count: self.tp + self.tn,
            total: self.total(),
        }
    }

    pub fn metrics(&self) -> Metrics {
        Metrics {
            pd: self.detection().value(),
            pfa: self.false_alarm().value(),
            pmd: self.miss().value(),
            accuracy: self.correct().value(),
        }
    }
}

/// Probability of detection, false alarm, missed detection, and accuracy.
/// A field is `None` when its denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub pd: Option<f64>,
    pub pfa: Option<f64>,
    pub pmd: Option<f64>,
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub confusion: ConfusionMatrix,
    #[serde(flatten)]
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub seed: u64,
    pub confusion: ConfusionMatrix,
    #[serde(flatten)]
    pub metrics: Metrics,
    pub folds: Vec<FoldReport>,
}

impl EvalReport {
    pub fn pd(&self) -> Option<f64> {
        self.metrics.pd
    }

    pub fn pfa(&self) -> Option<f64> {
        self.metrics.pfa
    }

    pub fn pmd(&self) -> Option<f64> {
        self.metrics.pmd
    }

    pub fn accuracy(&self) -> Option<f64> {
        self.metrics.accuracy
    }
}

pub fn confusion<M: Classifier + ?Sized>(model: &M, test: &Dataset) -> ConfusionMatrix {
    let mut cm = ConfusionMatrix::default();
    for s in &test.samples {
        cm.record(s.label, model.predict(s));
    }
    cm
}

pub fn metrics(cm: &ConfusionMatrix) -> EvalReport {
    EvalReport {
        model: String::new(),
        seed: 0,
        confusion: *cm,
        metrics: cm.metrics(),
        folds: Vec::new(),
    }
}
