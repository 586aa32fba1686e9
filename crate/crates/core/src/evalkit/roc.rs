use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub pfa: f64,
    pub pd: f64,
    /// Samples scoring at or above this value are flagged; infinite for the origin.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

impl RocCurve {
    /// True if `(pfa, pd)` is one of the operating points, to within `tol`.
    pub fn contains(&self, pfa: f64, pd: f64, tol: f64) -> bool {
        self.points
            .iter()
            .any(|p| (p.pfa - pfa).abs() <= tol && (p.pd - pd).abs() <= tol)
    }

    /// Two-column CSV `pfa,pd`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("pfa,pd\n");
        for p in &self.points {
            out.push_str(&crate::canon::fmt_f64(p.pfa));
            out.push(',');
            out.push_str(&crate::canon::fmt_f64(p.pd));
            out.push('\n');
        }
        out
    }
}

/// Threshold sweep over the unique scores, highest first. Tied scores
/// move together, so they produce a single operating point.
pub fn roc_curve(scores: &[f64], labels: &[u8]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::Config(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Config("NaN score".into()));
    }
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let negatives = labels.len() - positives;
    if positives == 0 {
        return Err(Error::OneClassLabels(0));
    }
    if negatives == 0 {
        return Err(Error::OneClassLabels(1));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let (p, n) = (positives as f64, negatives as f64);
    let mut points = vec![RocPoint {
        pfa: 0.0,
        pd: 0.0,
        threshold: f64::INFINITY,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            pfa: fp as f64 / n,
            pd: tp as f64 / p,
            threshold: s,
        });
    }

    let auc = points
        .windows(2)
        .map(|w| (w[1].pfa - w[0].pfa) * (w[1].pd + w[0].pd) / 2.0)
        .sum::<f64>()
        .clamp(0.0, 1.0);
    Ok(RocCurve { points, auc })
}
