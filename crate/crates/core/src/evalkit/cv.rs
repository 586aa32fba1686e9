use rayon::prelude::*;

use crate::datakit::{kfold_split, Dataset, FoldPlan};
use crate::error::{Error, Result};
use crate::seed;

use super::metrics::{ConfusionMatrix, EvalReport, FoldReport};
use super::model::{Classifier, Learner};

/// Cross-validation result: the pooled report plus the out-of-fold score
/// of every sample, indexed like the input dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub report: EvalReport,
    pub scores: Vec<f64>,
    pub threshold: f64,
}

/// Stratified k-fold cross-validation with pooled confusion counts.
pub fn cross_validate<L: Learner>(learner: &L, d: &Dataset, k: usize, seed: u64) -> Result<CvOutcome> {
    let plan = kfold_split(d, k, seed, true)?;
    cross_validate_with_plan(learner, d, &plan, seed)
}

/// Cross-validation over a given fold plan. Fold `f` fits with seed
/// `derive(seed, f)`.
pub fn cross_validate_with_plan<L: Learner>(
    learner: &L,
    d: &Dataset,
    plan: &FoldPlan,
    seed: u64,
) -> Result<CvOutcome> {
    d.ensure_non_empty()?;
    if plan.assignment.len() != d.len() {
        return Err(Error::Config(format!(
            "fold plan covers {} samples, dataset has {}",
            plan.assignment.len(),
            d.len()
        )));
    }
    let folds: Vec<Result<(Vec<usize>, Vec<f64>, f64)>> = (0..plan.k)
        .into_par_iter()
        .map(|fold| {
            let test_idx = plan.test_indices(fold);
            let train = d.select(&plan.train_indices(fold));
            let model = learner
                .fit(&train, seed::derive(seed, fold as u64))
                .map_err(|e| Error::Fold {
                    fold,
                    source: Box::new(e),
                })?;
            let scores = test_idx.iter().map(|&i| model.score(&d.samples[i])).collect();
            Ok((test_idx, scores, model.threshold()))
        })
        .collect();

    let mut pooled = ConfusionMatrix::default();
    let mut fold_reports = Vec::with_capacity(plan.k);
    let mut scores = vec![f64::NAN; d.len()];
    let mut threshold = f64::NAN;
    for (fold, result) in folds.into_iter().enumerate() {
        let (test_idx, fold_scores, t) = result?;
        threshold = t;
        let mut cm = ConfusionMatrix::default();
        for (&i, &s) in test_idx.iter().zip(&fold_scores) {
            cm.record(d.samples[i].label, u8::from(s > t));
            scores[i] = s;
        }
        pooled.merge(&cm);
        fold_reports.push(FoldReport {
            fold,
            confusion: cm,
            metrics: cm.metrics(),
        });
    }
    Ok(CvOutcome {
        report: EvalReport {
            model: learner.describe(),
            seed,
            confusion: pooled,
            metrics: pooled.metrics(),
            folds: fold_reports,
        },
        scores,
        threshold,
    })
}
