use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datakit::{kfold_split, Dataset, FoldPlan};
use crate::error::{Error, Result};
use crate::forest::{fit_forest, TreeParams};
use crate::neuralnet::{NetArchitecture, NnHyperparams};
use crate::seed;
use crate::svm::{KernelKind, KernelSpec, SvmParams};

use super::cv::cross_validate_with_plan;
use super::metrics::{ConfusionMatrix, EvalReport, FoldReport};
use super::model::{Learner, ModelSpec};

/// A hyperparameter grid over one model family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "grid", rename_all = "snake_case")]
pub enum Sweep {
    ForestEstimators { params: TreeParams, estimators: Vec<usize> },
    SvmKernelC { epochs: usize, kernels: Vec<KernelKind>, cs: Vec<f64> },
    NnHidden { hyperparams: NnHyperparams, hidden: Vec<usize> },
    Folds { model: ModelSpec, folds: Vec<usize> },
}

/// One grid point and its outcome; failures are kept as messages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub point: Vec<(String, String)>,
    pub spec: ModelSpec,
    pub folds: usize,
    pub report: Option<EvalReport>,
    pub error: Option<String>,
}

impl SweepRow {
    fn finish(point: Vec<(String, String)>, spec: ModelSpec, folds: usize, r: Result<EvalReport>) -> Self {
        let (report, error) = match r {
            Ok(rep) => (Some(rep), None),
            Err(e) => (None, Some(e.to_string())),
        };
        SweepRow {
            point,
            spec,
            folds,
            report,
            error,
        }
    }

    pub fn accuracy(&self) -> Option<f64> {
        self.report.as_ref().and_then(|r| r.accuracy())
    }
}

impl Sweep {
    fn is_empty(&self) -> bool {
        match self {
            Sweep::ForestEstimators { estimators, .. } => estimators.is_empty(),
            Sweep::SvmKernelC { kernels, cs, .. } => kernels.is_empty() || cs.is_empty(),
            Sweep::NnHidden { hidden, .. } => hidden.is_empty(),
            Sweep::Folds { folds, .. } => folds.is_empty(),
        }
    }

    /// Grid points with their model specs, in table order.
    fn points(&self) -> Vec<(Vec<(String, String)>, ModelSpec)> {
        match self {
            Sweep::ForestEstimators { params, estimators } => estimators
                .iter()
                .map(|&m| {
                    let spec = ModelSpec::Forest {
                        estimators: m,
                        params: params.clone(),
                    };
                    (vec![("estimators".to_string(), m.to_string())], spec)
                })
                .collect(),
            Sweep::SvmKernelC { epochs, kernels, cs } => kernels
                .iter()
                .flat_map(|&k| {
                    cs.iter().map(move |&c| {
                        let spec = ModelSpec::Svm(SvmParams {
                            kernel: KernelSpec::new(k),
                            c,
                            epochs: *epochs,
                        });
                        let point = vec![
                            ("kernel".to_string(), k.name().to_string()),
                            ("C".to_string(), crate::canon::fmt_f64(c)),
                        ];
                        (point, spec)
                    })
                })
                .collect(),
            Sweep::NnHidden { hyperparams, hidden } => hidden
                .iter()
                .map(|&h| {
                    let spec = ModelSpec::Nn {
                        architecture: NetArchitecture::with_hidden(&[h]),
                        hyperparams: hyperparams.clone(),
                    };
                    (vec![("hidden".to_string(), h.to_string())], spec)
                })
                .collect(),
            Sweep::Folds { model, folds } => folds
                .iter()
                .map(|&k| (vec![("folds".to_string(), k.to_string())], model.clone()))
                .collect(),
        }
    }
}

/// One cross-validation per grid point. Every point of a grid shares the
/// fold plan drawn from `seed`, except a fold-count grid where each point
/// draws its own.
pub fn sweep(grid: &Sweep, d: &Dataset, k: usize, seed: u64) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::Config("empty sweep grid".into()));
    }
    d.ensure_non_empty()?;
    let points = grid.points();

    if let Sweep::Folds { folds, .. } = grid {
        return Ok(points
            .into_iter()
            .zip(folds)
            .map(|((point, spec), &fk)| {
                let r = kfold_split(d, fk, seed, true)
                    .and_then(|plan| cross_validate_with_plan(&spec, d, &plan, seed))
                    .map(|o| o.report);
                SweepRow::finish(point, spec, fk, r)
            })
            .collect());
    }

    let plan = kfold_split(d, k, seed, true)?;
    if let Sweep::ForestEstimators { params, estimators } = grid {
        let reports = forest_prefix_reports(params, estimators, d, &plan, seed);
        return Ok(points
            .into_iter()
            .zip(reports)
            .map(|((point, spec), r)| SweepRow::finish(point, spec, k, r))
            .collect());
    }

    Ok(points
        .into_par_iter()
        .map(|(point, spec)| {
            let r = cross_validate_with_plan(&spec, d, &plan, seed).map(|o| o.report);
            SweepRow::finish(point, spec, k, r)
        })
        .collect())
}

/// Fits the largest forest once per fold and reads smaller ensembles off
/// its first trees, which is exactly what a separate fit would grow.
fn forest_prefix_reports(
    params: &TreeParams,
    estimators: &[usize],
    d: &Dataset,
    plan: &FoldPlan,
    seed: u64,
) -> Vec<Result<EvalReport>> {
    let max_m = estimators.iter().copied().max().unwrap_or(0);
    let per_fold: Vec<Result<Vec<ConfusionMatrix>>> = (0..plan.k)
        .into_par_iter()
        .map(|fold| {
            let train = d.select(&plan.train_indices(fold));
            let forest = fit_forest(&train, max_m.max(1), params, seed::derive(seed, fold as u64)).map_err(|e| {
                Error::Fold {
                    fold,
                    source: Box::new(e),
                }
            })?;
            let test_idx = plan.test_indices(fold);
            let mut cms = vec![ConfusionMatrix::default(); estimators.len()];
            for &i in &test_idx {
                let s = &d.samples[i];
                let z = forest.scaler.transform(&s.features());
                let votes: Vec<u8> = forest.trees.iter().map(|t| t.predict(&z)).collect();
                for (cm, &m) in cms.iter_mut().zip(estimators) {
                    let ones: usize = votes[..m].iter().map(|&v| v as usize).sum();
                    cm.record(s.label, u8::from(2 * ones > m));
                }
            }
            Ok(cms)
        })
        .collect();

    estimators
        .iter()
        .enumerate()
        .map(|(j, &m)| {
            if m == 0 {
                return Err(Error::Config("forest needs at least one estimator".into()));
            }
            let mut pooled = ConfusionMatrix::default();
            let mut folds = Vec::with_capacity(plan.k);
            for (fold, r) in per_fold.iter().enumerate() {
                let cm = match r {
                    Ok(cms) => cms[j],
                    Err(e) => return Err(clone_fold_error(fold, e)),
                };
                pooled.merge(&cm);
                folds.push(FoldReport {
                    fold,
                    confusion: cm,
                    metrics: cm.metrics(),
                });
            }
            Ok(EvalReport {
                model: ModelSpec::Forest {
                    estimators: m,
                    params: params.clone(),
                }
                .describe(),
                seed,
                confusion: pooled,
                metrics: pooled.metrics(),
                folds,
            })
        })
        .collect()
}

fn clone_fold_error(fold: usize, e: &Error) -> Error {
    match e {
        Error::Fold { source, .. } => Error::Fold {
            fold,
            source: Box::new(Error::Config(source.to_string())),
        },
        other => Error::Config(other.to_string()),
    }
}
