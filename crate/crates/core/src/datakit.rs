//! Dataset container, z-score scaling, shuffling, stratified k-fold planning
//! and the CSV format shared by every command.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::canon::fmt_f64;
use crate::error::{Error, Result};
use crate::seed;
use crate::simkit::{Sample, FEATURE_COUNT};

pub const CSV_HEADER: &str = "pdr,bpr,rss_dbm,cca_busy_ratio,label";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    /// Provenance (generator fingerprint, seed, size).
    pub meta: BTreeMap<String, String>,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>) -> Self {
        Dataset {
            samples,
            meta: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn positives(&self) -> usize {
        self.samples.iter().filter(|s| s.label == 1).count()
    }

    /// Sub-dataset at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            samples: indices.iter().map(|&i| self.samples[i]).collect(),
            meta: self.meta.clone(),
        }
    }

    pub fn ensure_non_empty(&self) -> Result<()> {
        if self.is_empty() {
            Err(Error::EmptyDataset)
        } else {
            Ok(())
        }
    }
}

/// Seeded Fisher-Yates permutation of the samples.
pub fn shuffle(d: &Dataset, seed: u64) -> Dataset {
    let mut out = d.clone();
    out.samples.shuffle(&mut seed::rng(seed));
    out
}

/// Per-feature z-score parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub means: Vec<f64>,
    /// Zero-variance features get a standard deviation of 1.
    pub stddevs: Vec<f64>,
}

impl Scaler {
    pub fn fit(d: &Dataset) -> Result<Scaler> {
        d.ensure_non_empty()?;
        let n = d.len() as f64;
        let mut means = vec![0.0; FEATURE_COUNT];
        for s in &d.samples {
            for (m, v) in means.iter_mut().zip(s.features()) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut vars = vec![0.0; FEATURE_COUNT];
        for s in &d.samples {
            for ((acc, v), m) in vars.iter_mut().zip(s.features()).zip(&means) {
                *acc += (v - m).powi(2);
            }
        }
        let stddevs = vars
            .into_iter()
            .map(|v| {
                let sd = (v / n).sqrt();
                if sd > 0.0 && sd.is_finite() {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Scaler { means, stddevs })
    }

    pub fn check_arity(&self) -> Result<()> {
        for len in [self.means.len(), self.stddevs.len()] {
            if len != FEATURE_COUNT {
                return Err(Error::Arity {
                    expected: FEATURE_COUNT,
                    got: len,
                });
            }
        }
        Ok(())
    }

    pub fn transform(&self, x: &[f64; FEATURE_COUNT]) -> [f64; FEATURE_COUNT] {
        std::array::from_fn(|j| (x[j] - self.means[j]) / self.stddevs[j])
    }

    pub fn inverse(&self, z: &[f64; FEATURE_COUNT]) -> [f64; FEATURE_COUNT] {
        std::array::from_fn(|j| z[j] * self.stddevs[j] + self.means[j])
    }

    pub fn apply(&self, d: &Dataset) -> Result<Dataset> {
        self.check_arity()?;
        Ok(Dataset {
            samples: d
                .samples
                .iter()
                .map(|s| Sample::new(self.transform(&s.features()), s.label))
                .collect(),
            meta: d.meta.clone(),
        })
    }

    /// Scaled feature rows, the form every trainer consumes.
    pub fn rows(&self, d: &Dataset) -> Vec<[f64; FEATURE_COUNT]> {
        d.samples.iter().map(|s| self.transform(&s.features())).collect()
    }
}

pub fn scaler_fit(d: &Dataset) -> Result<Scaler> {
    Scaler::fit(d)
}

pub fn scaler_apply(s: &Scaler, d: &Dataset) -> Result<Dataset> {
    s.apply(d)
}

/// Assignment of every sample to one of `k` test folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignment: Vec<usize>,
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|&(_, &f)| f == fold)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|&(_, &f)| f != fold)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Partition `d` into `k` folds. In stratified mode each label's shuffled indices
/// are dealt round-robin, continuing the deal across strata so that overall fold
/// sizes also differ by at most one.
pub fn kfold_split(d: &Dataset, k: usize, seed: u64, stratified: bool) -> Result<FoldPlan> {
    let n = d.len();
    if k < 2 || k > n {
        return Err(Error::FoldCount { k, n });
    }
    let mut rng = seed::rng(seed);
    let strata: Vec<Vec<usize>> = if stratified {
        [0u8, 1]
            .iter()
            .map(|&label| (0..n).filter(|&i| d.samples[i].label == label).collect())
            .collect()
    } else {
        vec![(0..n).collect()]
    };

    let mut assignment = vec![0; n];
    let mut next_fold = 0;
    for mut stratum in strata {
        stratum.shuffle(&mut rng);
        for i in stratum {
            assignment[i] = next_fold;
            next_fold = (next_fold + 1) % k;
        }
    }
    Ok(FoldPlan { k, assignment })
}

pub fn csv_write(d: &Dataset, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{CSV_HEADER}")?;
    for s in &d.samples {
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(s.pdr),
            fmt_f64(s.bpr),
            fmt_f64(s.rss_dbm),
            fmt_f64(s.cca_busy_ratio),
            s.label
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn csv_read(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    if text.trim().is_empty() {
        return Err(Error::NoData(path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .quoting(false)
        .from_reader(text.as_bytes());

    let header = reader.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != CSV_HEADER {
        return Err(Error::Header {
            path: path.to_path_buf(),
            expected: CSV_HEADER.to_string(),
            found: header,
        });
    }

    let mut samples = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row = record.position().map_or(0, |p| p.line());
        if record.len() != FEATURE_COUNT + 1 {
            return Err(Error::Row {
                row,
                message: format!("expected {} fields, found {}", FEATURE_COUNT + 1, record.len()),
            });
        }
        let mut features = [0.0; FEATURE_COUNT];
        for (j, f) in features.iter_mut().enumerate() {
            let cell = &record[j];
            *f = cell
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Row {
                    row,
                    message: format!("non-numeric value `{cell}` in column {}", j + 1),
                })?;
        }
        let label = match record[FEATURE_COUNT].trim() {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(Error::Row {
                    row,
                    message: format!("label must be 0 or 1, found `{other}`"),
                })
            }
        };
        samples.push(Sample::new(features, label));
    }
    if samples.is_empty() {
        return Err(Error::NoData(path.to_path_buf()));
    }
    Ok(Dataset::new(samples))
}
