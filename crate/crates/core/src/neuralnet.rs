//! Feed-forward network with logistic units everywhere, regularized
//! cross-entropy cost, exact backpropagation and full-batch gradient descent
//! with step halving.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::datakit::{Dataset, Scaler};
use crate::error::{Error, Result};
use crate::seed;
use crate::simkit::{Sample, FEATURE_COUNT};

/// Log arguments are clamped here to keep the cost finite under saturation.
pub const LOG_CLAMP: f64 = 1e-12;
pub const MAX_HALVINGS: usize = 20;
/// Step growth after an accepted epoch; the next epoch starts from the grown step.
pub const STEP_GROWTH: f64 = 1.2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetArchitecture {
    /// Input width first, single output last.
    pub layer_sizes: Vec<usize>,
}

impl NetArchitecture {
    pub fn with_hidden(hidden: &[usize]) -> Self {
        let mut layer_sizes = vec![FEATURE_COUNT];
        layer_sizes.extend_from_slice(hidden);
        layer_sizes.push(1);
        NetArchitecture { layer_sizes }
    }

    pub fn hidden(&self) -> &[usize] {
        &self.layer_sizes[1..self.layer_sizes.len() - 1]
    }

    pub fn validate(&self) -> Result<()> {
        let sizes = &self.layer_sizes;
        if sizes.len() < 3 {
            return Err(Error::Config("network needs at least one hidden layer".into()));
        }
        if sizes[0] != FEATURE_COUNT || sizes[sizes.len() - 1] != 1 {
            return Err(Error::Config(format!(
                "layer sizes must start at {FEATURE_COUNT} and end at 1, got {sizes:?}"
            )));
        }
        if sizes.contains(&0) {
            return Err(Error::Config("layer sizes must be >= 1".into()));
        }
        Ok(())
    }
}

impl Default for NetArchitecture {
    fn default() -> Self {
        NetArchitecture::with_hidden(&[2, 2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnHyperparams {
    pub lambda: f64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Stop once an epoch lowers the cost by less than this.
    pub tolerance: f64,
    pub init_seed: u64,
}

impl Default for NnHyperparams {
    fn default() -> Self {
        NnHyperparams {
            lambda: 0.01,
            learning_rate: 0.5,
            max_epochs: 2000,
            tolerance: 1e-7,
            init_seed: 0,
        }
    }
}

impl NnHyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::Config("lambda must be >= 0".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config("learning rate must be > 0".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be >= 1".into()));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::Config("tolerance must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralNet {
    /// Layer `l` maps `[1; a_l]` to `z_{l+1}`; shape `(s_{l+1}, s_l + 1)`, bias in column 0.
    pub weights: Vec<Array2<f64>>,
    pub architecture: NetArchitecture,
    pub scaler: Scaler,
    pub epochs_run: usize,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Batch forward pass. Returns the activation matrix of every layer, input first.
fn forward_batch(weights: &[Array2<f64>], x: ArrayView2<f64>) -> Vec<Array2<f64>> {
    let mut acts = Vec::with_capacity(weights.len() + 1);
    acts.push(x.to_owned());
    for theta in weights {
        let a = acts.last().expect("input layer present");
        let mut z = a.dot(&theta.slice(s![.., 1..]).t());
        let bias = theta.column(0);
        for mut row in z.rows_mut() {
            row.zip_mut_with(&bias, |v, &b| *v = sigmoid(*v + b));
        }
        acts.push(z);
    }
    acts
}

fn clamped_cross_entropy(h: ArrayView1<f64>, y: ArrayView1<f64>) -> f64 {
    let m = h.len() as f64;
    h.iter()
        .zip(y)
        .map(|(&h, &y)| -(y * h.max(LOG_CLAMP).ln() + (1.0 - y) * (1.0 - h).max(LOG_CLAMP).ln()))
        .sum::<f64>()
        / m
}

fn penalty(weights: &[Array2<f64>], lambda: f64, m: usize) -> f64 {
    let sq: f64 = weights
        .iter()
        .map(|t| t.slice(s![.., 1..]).iter().map(|w| w * w).sum::<f64>())
        .sum();
    lambda / (2.0 * m as f64) * sq
}

/// Cost and its exact gradient for scaled inputs `x` and 0/1 targets `y`.
pub fn cost_and_gradients(
    weights: &[Array2<f64>],
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    lambda: f64,
) -> (f64, Vec<Array2<f64>>) {
    let m = x.nrows();
    let scale = 1.0 / m as f64;
    let acts = forward_batch(weights, x);
    let h = acts[weights.len()].column(0);
    let cost = clamped_cross_entropy(h, y) + penalty(weights, lambda, m);

    let mut grads: Vec<Array2<f64>> = Vec::with_capacity(weights.len());
    let mut delta = (&h - &y).insert_axis(Axis(1));
    for l in (0..weights.len()).rev() {
        let theta = &weights[l];
        let w = theta.slice(s![.., 1..]);
        let mut g = Array2::zeros(theta.dim());
        g.column_mut(0).assign(&(delta.sum_axis(Axis(0)) * scale));
        {
            let mut gw = g.slice_mut(s![.., 1..]);
            gw.assign(&delta.t().dot(&acts[l]));
            gw.zip_mut_with(&w, |gv, &wv| *gv = *gv * scale + lambda * scale * wv);
        }
        grads.push(g);
        if l > 0 {
            let mut back = delta.dot(&w);
            back.zip_mut_with(&acts[l], |d, &a| *d *= a * (1.0 - a));
            delta = back;
        }
    }
    grads.reverse();
    (cost, grads)
}

fn design(scaler: &Scaler, d: &Dataset) -> (Array2<f64>, Array1<f64>) {
    let rows = scaler.rows(d);
    let x = Array2::from_shape_fn((rows.len(), FEATURE_COUNT), |(i, j)| rows[i][j]);
    let y = d.samples.iter().map(|s| s.label as f64).collect();
    (x, y)
}

impl NeuralNet {
    /// A net with every weight zero.
    pub fn zeros(architecture: NetArchitecture, scaler: Scaler) -> Self {
        let weights = architecture
            .layer_sizes
            .windows(2)
            .map(|w| Array2::zeros((w[1], w[0] + 1)))
            .collect();
        NeuralNet {
            weights,
            architecture,
            scaler,
            epochs_run: 0,
        }
    }

    /// Uniform init in `[-eps, eps]`, `eps = sqrt(6 / (fan_in + fan_out))`.
    pub fn initialized(architecture: NetArchitecture, scaler: Scaler, seed: u64) -> Self {
        let mut rng = seed::rng(seed);
        let weights = architecture
            .layer_sizes
            .windows(2)
            .map(|w| {
                let eps = (6.0 / (w[0] + w[1]) as f64).sqrt();
                Array2::from_shape_simple_fn((w[1], w[0] + 1), || rng.random_range(-eps..=eps))
            })
            .collect();
        NeuralNet {
            weights,
            architecture,
            scaler,
            epochs_run: 0,
        }
    }

    pub fn check_shapes(&self) -> Result<()> {
        self.architecture.validate()?;
        let sizes = &self.architecture.layer_sizes;
        if self.weights.len() != sizes.len() - 1 {
            return Err(Error::Config("weight count does not match architecture".into()));
        }
        for (l, t) in self.weights.iter().enumerate() {
            if t.dim() != (sizes[l + 1], sizes[l] + 1) {
                return Err(Error::Arity {
                    expected: sizes[l] + 1,
                    got: t.ncols(),
                });
            }
            if t.iter().any(|w| !w.is_finite()) {
                return Err(Error::Config(format!("layer {l} has non-finite weights")));
            }
        }
        self.scaler.check_arity()
    }

    /// Activations of every layer for an already-scaled input, input layer first.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<Array1<f64>>> {
        if x.len() != self.architecture.layer_sizes[0] {
            return Err(Error::Arity {
                expected: self.architecture.layer_sizes[0],
                got: x.len(),
            });
        }
        let mut acts = vec![Array1::from(x.to_vec())];
        for theta in &self.weights {
            let prev = acts.last().expect("input pushed");
            if theta.ncols() != prev.len() + 1 {
                return Err(Error::Arity {
                    expected: theta.ncols() - 1,
                    got: prev.len(),
                });
            }
            let z = theta.slice(s![.., 1..]).dot(prev) + theta.column(0);
            acts.push(z.mapv(sigmoid));
        }
        Ok(acts)
    }

    pub fn output_scaled(&self, z: &[f64; FEATURE_COUNT]) -> f64 {
        self.forward(z).expect("shapes checked at construction")[self.weights.len()][0]
    }

    /// Hypothesis `h(x)` for a raw sample.
    pub fn output(&self, x: &Sample) -> f64 {
        self.output_scaled(&self.scaler.transform(&x.features()))
    }

    /// Class 1 iff `h > 0.5`.
    pub fn predict(&self, x: &Sample) -> u8 {
        u8::from(self.output(x) > 0.5)
    }

    pub fn cost(&self, d: &Dataset, lambda: f64) -> f64 {
        let (x, y) = design(&self.scaler, d);
        let acts = forward_batch(&self.weights, x.view());
        let h = acts[self.weights.len()].column(0).to_owned();
        clamped_cross_entropy(h.view(), y.view()) + penalty(&self.weights, lambda, d.len())
    }

    pub fn gradients(&self, d: &Dataset, lambda: f64) -> Vec<Array2<f64>> {
        let (x, y) = design(&self.scaler, d);
        cost_and_gradients(&self.weights, x.view(), y.view(), lambda).1
    }
}

pub fn cost(net: &NeuralNet, d: &Dataset, lambda: f64) -> f64 {
    net.cost(d, lambda)
}

pub fn backprop_gradients(net: &NeuralNet, d: &Dataset, lambda: f64) -> Vec<Array2<f64>> {
    net.gradients(d, lambda)
}

pub fn nn_predict(net: &NeuralNet, x: &Sample) -> u8 {
    net.predict(x)
}

/// Trained net plus the cost after every accepted epoch (entry 0 is the initial cost).
#[derive(Debug, Clone)]
pub struct TrainingTrace {
    pub net: NeuralNet,
    pub costs: Vec<f64>,
}

pub fn fit_nn(train: &Dataset, arch: &NetArchitecture, hp: &NnHyperparams) -> Result<NeuralNet> {
    fit_nn_traced(train, arch, hp).map(|t| t.net)
}

pub fn fit_nn_traced(train: &Dataset, arch: &NetArchitecture, hp: &NnHyperparams) -> Result<TrainingTrace> {
    train.ensure_non_empty()?;
    arch.validate()?;
    hp.validate()?;
    let scaler = Scaler::fit(train)?;
    let (x, y) = design(&scaler, train);
    let mut net = NeuralNet::initialized(arch.clone(), scaler, hp.init_seed);

    let (mut current, mut grads) = cost_and_gradients(&net.weights, x.view(), y.view(), hp.lambda);
    let mut costs = vec![current];
    let mut step = hp.learning_rate;
    for epoch in 1..=hp.max_epochs {
        let mut rate = step;
        let mut halvings = 0;
        let (trial, trial_cost, trial_grads) = loop {
            let trial: Vec<Array2<f64>> = net
                .weights
                .iter()
                .zip(&grads)
                .map(|(w, g)| w - &(g * rate))
                .collect();
            let (c, g) = cost_and_gradients(&trial, x.view(), y.view(), hp.lambda);
            if c <= current {
                break (trial, c, g);
            }
            if halvings == MAX_HALVINGS {
                return Err(Error::Divergence { epoch, halvings });
            }
            halvings += 1;
            rate *= 0.5;
        };
        let decrease = current - trial_cost;
        step = rate * STEP_GROWTH;
        net.weights = trial;
        net.epochs_run = epoch;
        current = trial_cost;
        grads = trial_grads;
        costs.push(current);
        if decrease < hp.tolerance {
            break;
        }
    }
    Ok(TrainingTrace { net, costs })
}
