//! Kernel SVM trained on the soft-margin hinge objective
//! `||w||^2 + C * sum_i max(0, 1 - y_i f(x_i))`.
//!
//! The trainer is kernelized Pegasos: stochastic subgradient steps with step
//! size `1/(lambda t)`, `lambda = 2/(C n)`, which puts the objective above in
//! Pegasos form. Decision values of every training point are cached and updated
//! on each margin violation, so non-violating steps cost O(1). The returned
//! coefficients are the average of the iterates over the final epoch, and the
//! unregularized bias is the exact minimizer of the hinge loss given those
//! coefficients.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::datakit::{Dataset, Scaler};
use crate::error::{Error, Result};
use crate::seed;
use crate::simkit::{Sample, FEATURE_COUNT};

pub const DEFAULT_EPOCHS: usize = 50;
pub const DEFAULT_C: f64 = 3.0;
/// Early stop when the per-epoch objective moves by less than this.
pub const OBJECTIVE_TOLERANCE: f64 = 1e-6;
const DEFAULT_CACHE_BYTES: usize = 256 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Linear,
    Poly2,
    Poly3,
    Rbf,
    Sigmoid,
}

impl KernelKind {
    pub const ALL: [KernelKind; 5] = [
        KernelKind::Linear,
        KernelKind::Poly2,
        KernelKind::Poly3,
        KernelKind::Rbf,
        KernelKind::Sigmoid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Linear => "linear",
            KernelKind::Poly2 => "poly2",
            KernelKind::Poly3 => "poly3",
            KernelKind::Rbf => "rbf",
            KernelKind::Sigmoid => "sigmoid",
        }
    }

    pub fn parse(s: &str) -> Option<KernelKind> {
        KernelKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    /// RBF width and sigmoid slope. `None` picks a data-dependent default at fit time.
    pub gamma: Option<f64>,
    /// Sigmoid offset.
    pub coef0: f64,
}

impl KernelSpec {
    pub fn new(kind: KernelKind) -> Self {
        KernelSpec {
            kind,
            gamma: None,
            coef0: 0.0,
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = Some(gamma);
        self
    }

    fn gamma_or_default(&self) -> f64 {
        self.gamma.unwrap_or(1.0 / FEATURE_COUNT as f64)
    }

    /// Kernel value for equal-length inputs.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        let dot = || x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        match self.kind {
            KernelKind::Linear => dot(),
            KernelKind::Poly2 => (dot() + 1.0).powi(2),
            KernelKind::Poly3 => (dot() + 1.0).powi(3),
            KernelKind::Rbf => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-self.gamma_or_default() * d2).exp()
            }
            KernelKind::Sigmoid => (self.gamma_or_default() * dot() + self.coef0).tanh(),
        }
    }

    /// Fill in `gamma` from the scaled training rows when unset.
    fn resolved(&self, rows: &[[f64; FEATURE_COUNT]]) -> KernelSpec {
        if self.gamma.is_some() {
            return *self;
        }
        let gamma = match self.kind {
            KernelKind::Rbf => {
                let n = rows.len() as f64;
                let mut var = 0.0;
                for f in 0..FEATURE_COUNT {
                    let mean = rows.iter().map(|r| r[f]).sum::<f64>() / n;
                    var += rows.iter().map(|r| (r[f] - mean).powi(2)).sum::<f64>() / n;
                }
                var /= FEATURE_COUNT as f64;
                if var > 0.0 {
                    1.0 / (FEATURE_COUNT as f64 * var)
                } else {
                    1.0 / FEATURE_COUNT as f64
                }
            }
            _ => 1.0 / FEATURE_COUNT as f64,
        };
        self.with_gamma(gamma)
    }
}

pub fn kernel_eval(k: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Arity {
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok(k.eval(x, y))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: KernelSpec,
    /// Scaled feature vectors with non-zero coefficient.
    pub support_vectors: Vec<[f64; FEATURE_COUNT]>,
    /// Signed coefficients `alpha_i * y_i`.
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub scaler: Scaler,
    pub epochs_run: usize,
}

impl SvmModel {
    pub fn decision_scaled(&self, z: &[f64; FEATURE_COUNT]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, c)| c * self.kernel.eval(sv, z))
            .sum::<f64>()
            + self.bias
    }

    pub fn decision(&self, x: &Sample) -> f64 {
        self.decision_scaled(&self.scaler.transform(&x.features()))
    }

    /// Positive decision means class 1; the boundary itself is class 0.
    pub fn predict(&self, x: &Sample) -> u8 {
        u8::from(self.decision(x) > 0.0)
    }

    /// Primal weights in scaled space, available for the linear kernel only.
    pub fn explicit_weights(&self) -> Option<[f64; FEATURE_COUNT]> {
        if self.kernel.kind != KernelKind::Linear {
            return None;
        }
        let mut w = [0.0; FEATURE_COUNT];
        for (sv, c) in self.support_vectors.iter().zip(&self.coefficients) {
            for (wj, xj) in w.iter_mut().zip(sv) {
                *wj += c * xj;
            }
        }
        Some(w)
    }

    /// `||w||^2` in the kernel's feature space.
    pub fn weight_norm_sq(&self) -> f64 {
        let mut s = 0.0;
        for (a, ca) in self.support_vectors.iter().zip(&self.coefficients) {
            for (b, cb) in self.support_vectors.iter().zip(&self.coefficients) {
                s += ca * cb * self.kernel.eval(a, b);
            }
        }
        s
    }

    /// The training objective `||w||^2 + C * sum hinge` evaluated on `d`.
    pub fn objective(&self, d: &Dataset) -> f64 {
        let hinge: f64 = d
            .samples
            .iter()
            .map(|s| {
                let y = if s.label == 1 { 1.0 } else { -1.0 };
                (1.0 - y * self.decision(s)).max(0.0)
            })
            .sum();
        self.weight_norm_sq() + self.c * hinge
    }
}

pub fn svm_decision(m: &SvmModel, x: &Sample) -> f64 {
    m.decision(x)
}

pub fn svm_predict(m: &SvmModel, x: &Sample) -> u8 {
    m.predict(x)
}

/// Kernel rows computed on demand, kept while under a byte budget.
struct RowCache<'a> {
    kernel: KernelSpec,
    rows: &'a [[f64; FEATURE_COUNT]],
    cached: Vec<Option<Box<[f64]>>>,
    room: usize,
    scratch: Vec<f64>,
}

impl<'a> RowCache<'a> {
    fn new(kernel: KernelSpec, rows: &'a [[f64; FEATURE_COUNT]], budget_bytes: usize) -> Self {
        let n = rows.len();
        RowCache {
            kernel,
            rows,
            cached: vec![None; n],
            room: budget_bytes / (n * std::mem::size_of::<f64>()).max(1),
            scratch: vec![0.0; n],
        }
    }

    fn row(&mut self, i: usize) -> &[f64] {
        if self.cached[i].is_none() {
            let xi = &self.rows[i];
            let fresh: Box<[f64]> = self.rows.iter().map(|xj| self.kernel.eval(xi, xj)).collect();
            if self.room > 0 {
                self.room -= 1;
                self.cached[i] = Some(fresh);
            } else {
                self.scratch.copy_from_slice(&fresh);
                return &self.scratch;
            }
        }
        self.cached[i].as_deref().expect("row cached above")
    }
}

/// Running `sum_{s=1}^{t} 1/s`, grown as training proceeds.
struct Harmonic(Vec<f64>);

impl Harmonic {
    fn upto(&mut self, t: usize) -> f64 {
        while self.0.len() <= t {
            let k = self.0.len();
            let prev = *self.0.last().unwrap_or(&0.0);
            self.0.push(if k == 0 { 0.0 } else { prev + 1.0 / k as f64 });
        }
        self.0[t]
    }

    /// `sum_{s=a}^{b} 1/s`, zero for an empty range.
    fn range(&mut self, a: usize, b: usize) -> f64 {
        if b < a {
            0.0
        } else {
            self.upto(b) - self.upto(a - 1)
        }
    }
}

/// Minimizer of `sum_i max(0, 1 - y_i (g_i + b))` over `b`. Every breakpoint
/// `y_i - g_i` raises the slope by one starting from `-positives`, so the flat
/// optimum lies between the `P`-th and `P+1`-th sorted breakpoints.
fn hinge_optimal_bias(g: &[f64], y: &[f64]) -> f64 {
    let mut breaks: Vec<f64> = g.iter().zip(y).map(|(gi, yi)| yi - gi).collect();
    breaks.sort_by(f64::total_cmp);
    let positives = y.iter().filter(|&&v| v > 0.0).count();
    match positives {
        0 => breaks[0] - 1.0,
        p if p == breaks.len() => breaks[p - 1] + 1.0,
        p => 0.5 * (breaks[p - 1] + breaks[p]),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub kernel: KernelSpec,
    pub c: f64,
    pub epochs: usize,
}

impl SvmParams {
    pub fn new(kernel: KernelKind) -> Self {
        SvmParams {
            kernel: KernelSpec::new(kernel),
            c: DEFAULT_C,
            epochs: DEFAULT_EPOCHS,
        }
    }
}

pub fn fit_svm(train: &Dataset, kernel: KernelSpec, c: f64, epochs: usize, seed: u64) -> Result<SvmModel> {
    fit_svm_with_cache(train, kernel, c, epochs, seed, DEFAULT_CACHE_BYTES)
}

pub fn fit_svm_with_cache(
    train: &Dataset,
    kernel: KernelSpec,
    c: f64,
    epochs: usize,
    seed: u64,
    cache_bytes: usize,
) -> Result<SvmModel> {
    train.ensure_non_empty()?;
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::Config(format!("C must be > 0, got {c}")));
    }
    if epochs == 0 {
        return Err(Error::Config("epochs must be >= 1".into()));
    }
    let positives = train.positives();
    if positives == 0 || positives == train.len() {
        return Err(Error::SingleClass);
    }

    let scaler = Scaler::fit(train)?;
    let rows = scaler.rows(train);
    let kernel = kernel.resolved(&rows);
    let y: Vec<f64> = train
        .samples
        .iter()
        .map(|s| if s.label == 1 { 1.0 } else { -1.0 })
        .collect();
    let n = rows.len();
    let lambda = 2.0 / (c * n as f64);

    let mut cache = RowCache::new(kernel, &rows, cache_bytes);
    let mut harmonic = Harmonic(Vec::new());
    let mut rng = seed::rng(seed);
    let mut order: Vec<usize> = (0..n).collect();

    // alpha: violation counts; f: unnormalized decision cache sum_j alpha_j y_j K_ij
    let mut alpha = vec![0u64; n];
    let mut f = vec![0.0; n];
    let mut acc = vec![0.0; n];
    let mut since = vec![1usize; n];
    let mut t = 0usize;
    let mut last_objective: Option<f64> = None;
    let mut epochs_run = 0;
    let mut epoch_start = 1;

    for _ in 0..epochs {
        epochs_run += 1;
        epoch_start = t + 1;
        acc.iter_mut().for_each(|a| *a = 0.0);
        since.iter_mut().for_each(|s| *s = epoch_start);
        order.shuffle(&mut rng);

        for &i in &order {
            t += 1;
            if y[i] * f[i] / (lambda * t as f64) < 1.0 {
                acc[i] += alpha[i] as f64 * harmonic.range(since[i], t - 1);
                since[i] = t;
                alpha[i] += 1;
                let yi = y[i];
                for (fj, kij) in f.iter_mut().zip(cache.row(i)) {
                    *fj += yi * kij;
                }
            }
        }

        let scale = 1.0 / (lambda * t as f64);
        let norm_sq: f64 = (0..n).map(|j| alpha[j] as f64 * y[j] * f[j]).sum::<f64>() * scale * scale;
        let hinge: f64 = (0..n).map(|j| (1.0 - y[j] * f[j] * scale).max(0.0)).sum::<f64>() / n as f64;
        let objective = 0.5 * lambda * norm_sq + hinge;
        if last_objective.is_some_and(|prev| (prev - objective).abs() < OBJECTIVE_TOLERANCE) {
            break;
        }
        last_objective = Some(objective);
    }

    let steps = (t + 1 - epoch_start) as f64;
    let mut coef = vec![0.0; n];
    for j in 0..n {
        acc[j] += alpha[j] as f64 * harmonic.range(since[j], t);
        coef[j] = y[j] * acc[j] / (lambda * steps);
    }

    let mut g = vec![0.0; n];
    for (j, &cj) in coef.iter().enumerate() {
        if cj != 0.0 {
            for (gi, kji) in g.iter_mut().zip(cache.row(j)) {
                *gi += cj * kji;
            }
        }
    }
    let bias = hinge_optimal_bias(&g, &y);

    let (support_vectors, coefficients) = rows
        .iter()
        .zip(&coef)
        .filter(|(_, &c)| c != 0.0)
        .map(|(r, &c)| (*r, c))
        .unzip();
    Ok(SvmModel {
        kernel,
        support_vectors,
        coefficients,
        bias,
        c,
        scaler,
        epochs_run,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_scaler() -> Scaler {
        Scaler {
            means: vec![0.0; 4],
            stddevs: vec![1.0; 4],
        }
    }

    #[test]
    fn kernel_values() {
        let x = [1.0, 0.0, 0.0, 0.0];
        let poly2 = KernelSpec::new(KernelKind::Poly2);
        assert_eq!(kernel_eval(&poly2, &x, &x).unwrap(), 4.0);
        let rbf = KernelSpec::new(KernelKind::Rbf).with_gamma(1.0);
        assert_eq!(kernel_eval(&rbf, &x, &x).unwrap(), 1.0);
        let y = [0.0, 0.0, 0.0, 0.0];
        assert!((kernel_eval(&rbf, &x, &y).unwrap() - (-1f64).exp()).abs() < 1e-15);
        let sig = KernelSpec::new(KernelKind::Sigmoid);
        assert_eq!(kernel_eval(&sig, &x, &x).unwrap(), 0.25f64.tanh());
        assert!(kernel_eval(&poly2, &x, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn decision_with_explicit_weight() {
        let m = SvmModel {
            kernel: KernelSpec::new(KernelKind::Linear),
            support_vectors: vec![[1.0, 0.0, 0.0, 0.0]],
            coefficients: vec![1.0],
            bias: 0.0,
            c: 1.0,
            scaler: identity_scaler(),
            epochs_run: 0,
        };
        let x = Sample::new([2.0, 5.0, -3.0, 0.5], 1);
        assert_eq!(m.decision(&x), 2.0);
        assert_eq!(m.explicit_weights(), Some([1.0, 0.0, 0.0, 0.0]));
        let boundary = Sample::new([0.0, 1.0, 1.0, 1.0], 0);
        assert_eq!(m.decision(&boundary), 0.0);
        assert_eq!(m.predict(&boundary), 0);

        let mut neg = m.clone();
        neg.coefficients[0] = -1.0;
        neg.bias = -m.bias;
        assert_eq!(neg.decision(&x), -m.decision(&x));
    }

    #[test]
    fn sign_rule() {
        let mut m = SvmModel {
            kernel: KernelSpec::new(KernelKind::Linear),
            support_vectors: vec![],
            coefficients: vec![],
            bias: 0.7,
            c: 1.0,
            scaler: identity_scaler(),
            epochs_run: 0,
        };
        let x = Sample::new([0.0; 4], 0);
        assert_eq!(m.predict(&x), 1);
        m.bias = 0.0;
        assert_eq!(m.predict(&x), 0);
        m.bias = -3.0;
        assert_eq!(m.predict(&x), 0);
    }

    #[test]
    fn separable_pair() {
        let d = Dataset::new(vec![
            Sample::new([-1.0, 0.0, 0.0, 0.0], 0),
            Sample::new([1.0, 0.0, 0.0, 0.0], 1),
        ]);
        let m = fit_svm(&d, KernelSpec::new(KernelKind::Linear), 1.0, 20, 1).unwrap();
        assert!(m.decision(&d.samples[0]) < 0.0);
        assert!(m.decision(&d.samples[1]) > 0.0);
    }

    #[test]
    fn single_class_refused() {
        let d = Dataset::new(vec![Sample::new([0.0; 4], 1), Sample::new([1.0; 4], 1)]);
        assert!(matches!(
            fit_svm(&d, KernelSpec::new(KernelKind::Rbf), 1.0, 5, 0),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn bias_scan_is_optimal() {
        let g = [0.3, -0.2, 1.4, -1.1, 0.05, 0.6];
        let y = [1.0, -1.0, 1.0, -1.0, -1.0, 1.0];
        let h = |b: f64| g.iter().zip(&y).map(|(gi, yi)| (1.0 - yi * (gi + b)).max(0.0)).sum::<f64>();
        let b = hinge_optimal_bias(&g, &y);
        for k in -400..=400 {
            assert!(h(b) <= h(k as f64 * 0.01) + 1e-12);
        }
    }

    #[test]
    fn cache_budget_does_not_change_result() {
        let d = Dataset::new(
            (0..80)
                .map(|i| {
                    let v = (i as f64 * 0.37).sin();
                    Sample::new([v, (i as f64 * 0.11).cos(), v * v, (i % 5) as f64], u8::from(v > 0.1))
                })
                .collect(),
        );
        let k = KernelSpec::new(KernelKind::Rbf);
        let a = fit_svm_with_cache(&d, k, 1.0, 10, 4, 1 << 30).unwrap();
        let b = fit_svm_with_cache(&d, k, 1.0, 10, 4, 0).unwrap();
        assert_eq!(a, b);
    }
}
