use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::buffer::Sample;
use super::features::FeatureVector;
use crate::error::{Error, Result};
use crate::oppo::ProbabilityMatrix;

/// Floor applied to probabilities inside the log of the loss.
pub const LOG_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetShape {
    pub input: usize,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub users: usize,
    pub options: usize,
}

impl NetShape {
    pub fn output(&self) -> usize {
        self.users * self.options
    }

    /// `(fan_in, fan_out)` of every affine map, input to output.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_layers + 1);
        let mut prev = self.input;
        for _ in 0..self.hidden_layers {
            dims.push((prev, self.hidden_width));
            prev = self.hidden_width;
        }
        dims.push((prev, self.output()));
        dims
    }

    pub fn parameter_count(&self) -> usize {
        self.layer_dims().iter().map(|(i, o)| (i + 1) * o).sum()
    }
}

/// Affine map `y = W x + b` with `W` stored `out × in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weights: Array2::zeros((fan_out, fan_in)),
            bias: Array1::zeros(fan_out),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    pub first: Vec<Dense>,
    pub second: Vec<Dense>,
}

/// One bias-corrected Adam update of `param`; `step` is the 1-based count
/// including this update.
pub fn adam_update(
    param: &mut [f64],
    grad: &[f64],
    first: &mut [f64],
    second: &mut [f64],
    step: u64,
    cfg: &AdamConfig,
) {
    let c1 = 1.0 - cfg.beta1.powi(step as i32);
    let c2 = 1.0 - cfg.beta2.powi(step as i32);
    for i in 0..param.len() {
        let g = grad[i];
        first[i] = cfg.beta1 * first[i] + (1.0 - cfg.beta1) * g;
        second[i] = cfg.beta2 * second[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = first[i] / c1;
        let v_hat = second[i] / c2;
        param[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

/// Inverted-dropout masks, one `batch × width` array per gap between
/// consecutive hidden layers; entries are `0` or `1/(1−rate)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMasks(pub Vec<Array2<f64>>);

/// Parameter gradients, aligned with the network layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<Dense>);

struct Trace {
    /// Input followed by each hidden layer's output after dropout.
    inputs: Vec<Array2<f64>>,
    /// `tanh` output of each hidden layer before dropout.
    activations: Vec<Array2<f64>>,
    probs: Array2<f64>,
}

/// Fully connected `tanh` network emitting a row-wise softmax per user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyNet {
    shape: NetShape,
    dropout: f64,
    layers: Vec<Dense>,
    adam: AdamState,
}

impl PolicyNet {
    /// Weights and biases uniform in `±1/√fan_in`.
    pub fn new<R: Rng>(
        shape: NetShape,
        dropout: f64,
        learning_rate: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&dropout) {
            return Err(Error::Domain(format!(
                "dropout rate {dropout} outside [0, 1)"
            )));
        }
        if shape.input == 0 || shape.options < 2 || shape.users == 0 {
            return Err(Error::Domain(format!("degenerate network shape {shape:?}")));
        }
        if shape.hidden_layers > 0 && shape.hidden_width == 0 {
            return Err(Error::Domain("hidden width must be positive".into()));
        }
        let dims = shape.layer_dims();
        let layers = dims
            .iter()
            .map(|&(fan_in, fan_out)| {
                let bound = 1.0 / (fan_in as f64).sqrt();
                let mut d = Dense::zeros(fan_in, fan_out);
                d.weights.mapv_inplace(|_| rng.random_range(-bound..bound));
                d.bias.mapv_inplace(|_| rng.random_range(-bound..bound));
                d
            })
            .collect();
        let zeros: Vec<Dense> = dims.iter().map(|&(i, o)| Dense::zeros(i, o)).collect();
        Ok(Self {
            shape,
            dropout,
            layers,
            adam: AdamState {
                config: AdamConfig::with_learning_rate(learning_rate),
                step: 0,
                first: zeros.clone(),
                second: zeros,
            },
        })
    }

    pub fn shape(&self) -> NetShape {
        self.shape
    }

    pub fn dropout(&self) -> f64 {
        self.dropout
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn adam(&self) -> &AdamState {
        &self.adam
    }

    /// Structural consistency, used after deserialization.
    pub fn validate(&self) -> Result<()> {
        let dims = self.shape.layer_dims();
        let check = |set: &[Dense], what: &str| -> Result<()> {
            if set.len() != dims.len() {
                return Err(Error::Shape {
                    expected: dims.len(),
                    actual: set.len(),
                });
            }
            for (d, &(i, o)) in set.iter().zip(&dims) {
                if d.weights.dim() != (o, i) || d.bias.len() != o {
                    return Err(Error::Invariant(format!(
                        "{what} layer is {:?}/{}, expected ({o}, {i})/{o}",
                        d.weights.dim(),
                        d.bias.len()
                    )));
                }
            }
            Ok(())
        };
        check(&self.layers, "parameter")?;
        check(&self.adam.first, "first-moment")?;
        check(&self.adam.second, "second-moment")?;
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Invariant(format!(
                "dropout rate {} outside [0, 1)",
                self.dropout
            )));
        }
        Ok(())
    }

    pub fn sample_masks<R: Rng>(&self, batch: usize, rng: &mut R) -> Option<DropoutMasks> {
        let gaps = self.shape.hidden_layers.saturating_sub(1);
        if self.dropout == 0.0 || gaps == 0 {
            return None;
        }
        let keep = 1.0 - self.dropout;
        let scale = 1.0 / keep;
        Some(DropoutMasks(
            (0..gaps)
                .map(|_| {
                    Array2::from_shape_simple_fn((batch, self.shape.hidden_width), || {
                        if rng.random_bool(keep) {
                            scale
                        } else {
                            0.0
                        }
                    })
                })
                .collect(),
        ))
    }

    fn input_matrix<'a>(
        &self,
        rows: impl ExactSizeIterator<Item = &'a FeatureVector>,
    ) -> Result<Array2<f64>> {
        let n = rows.len();
        let mut x = Array2::zeros((n, self.shape.input));
        for (r, f) in rows.enumerate() {
            if f.len() != self.shape.input {
                return Err(Error::Shape {
                    expected: self.shape.input,
                    actual: f.len(),
                });
            }
            x.row_mut(r).assign(&ndarray::ArrayView1::from(&f.0));
        }
        Ok(x)
    }

    fn run(&self, x: Array2<f64>, masks: Option<&DropoutMasks>) -> Trace {
        let hidden = self.shape.hidden_layers;
        let mut inputs = Vec::with_capacity(hidden + 1);
        let mut activations = Vec::with_capacity(hidden);
        inputs.push(x);
        for (i, layer) in self.layers[..hidden].iter().enumerate() {
            let z = inputs[i].dot(&layer.weights.t()) + &layer.bias;
            let t = z.mapv(f64::tanh);
            let out = match masks {
                Some(m) if i + 1 < hidden => &t * &m.0[i],
                _ => t.clone(),
            };
            activations.push(t);
            inputs.push(out);
        }
        let last = &self.layers[hidden];
        let mut probs = inputs[hidden].dot(&last.weights.t()) + &last.bias;
        let o = self.shape.options;
        for mut row in probs.rows_mut() {
            for mut chunk in row.exact_chunks_mut(o) {
                let max = chunk.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                chunk.mapv_inplace(|v| (v - max).exp());
                let sum = chunk.sum();
                chunk.mapv_inplace(|v| v / sum);
            }
        }
        Trace {
            inputs,
            activations,
            probs,
        }
    }

    fn to_matrix(&self, probs: ndarray::ArrayView1<f64>) -> Result<ProbabilityMatrix> {
        let p = probs
            .to_owned()
            .into_shape_with_order((self.shape.users, self.shape.options))
            .map_err(|e| Error::Invariant(e.to_string()))?;
        ProbabilityMatrix::new(p)
    }

    /// Probability matrix for one input; `train` applies dropout from `rng`.
    pub fn forward<R: Rng>(
        &self,
        x: &FeatureVector,
        train: bool,
        rng: &mut R,
    ) -> Result<ProbabilityMatrix> {
        let input = self.input_matrix(std::iter::once(x))?;
        let masks = if train {
            self.sample_masks(1, rng)
        } else {
            None
        };
        let trace = self.run(input, masks.as_ref());
        self.to_matrix(trace.probs.row(0))
    }

    /// Deterministic evaluation-mode forward pass.
    pub fn predict(&self, x: &FeatureVector) -> Result<ProbabilityMatrix> {
        let input = self.input_matrix(std::iter::once(x))?;
        self.to_matrix(self.run(input, None).probs.row(0))
    }

    fn targets(&self, batch: &[&Sample]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(batch.len() * self.shape.users);
        for s in batch {
            let d = &s.reference;
            if d.num_users() != self.shape.users || d.options() != self.shape.options {
                return Err(Error::InvalidDecision(format!(
                    "reference is {}x{}, network emits {}x{}",
                    d.num_users(),
                    d.options(),
                    self.shape.users,
                    self.shape.options
                )));
            }
            out.extend_from_slice(d.choices());
        }
        Ok(out)
    }

    fn loss_of(&self, probs: &Array2<f64>, targets: &[usize]) -> f64 {
        let (u, o) = (self.shape.users, self.shape.options);
        let mut total = 0.0;
        for (b, row) in probs.rows().into_iter().enumerate() {
            for user in 0..u {
                let p = row[user * o + targets[b * u + user]];
                total -= p.max(LOG_EPSILON).ln();
            }
        }
        total / probs.nrows() as f64
    }

    /// Mean negative log-likelihood of the references under fixed masks.
    pub fn loss_with(&self, batch: &[&Sample], masks: Option<&DropoutMasks>) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::Domain("empty batch".into()));
        }
        let targets = self.targets(batch)?;
        let x = self.input_matrix(batch.iter().map(|s| &s.features))?;
        Ok(self.loss_of(&self.run(x, masks).probs, &targets))
    }

    /// Training-mode loss with masks drawn from `rng`.
    pub fn mle_loss<R: Rng>(&self, batch: &[&Sample], rng: &mut R) -> Result<f64> {
        let masks = self.sample_masks(batch.len(), rng);
        self.loss_with(batch, masks.as_ref())
    }

    /// Loss and its analytic gradient under fixed masks.
    pub fn backward(
        &self,
        batch: &[&Sample],
        masks: Option<&DropoutMasks>,
    ) -> Result<(f64, Gradients)> {
        if batch.is_empty() {
            return Err(Error::Domain("empty batch".into()));
        }
        let targets = self.targets(batch)?;
        let x = self.input_matrix(batch.iter().map(|s| &s.features))?;
        let trace = self.run(x, masks);
        let loss = self.loss_of(&trace.probs, &targets);

        let (u, o) = (self.shape.users, self.shape.options);
        let n = batch.len() as f64;
        let mut delta = trace.probs.clone();
        for (b, mut row) in delta.rows_mut().into_iter().enumerate() {
            for user in 0..u {
                let t = user * o + targets[b * u + user];
                let mut chunk = row.slice_mut(ndarray::s![user * o..(user + 1) * o]);
                if trace.probs[[b, t]] < LOG_EPSILON {
                    // The clamp is flat here.
                    chunk.fill(0.0);
                } else {
                    chunk[t - user * o] -= 1.0;
                }
            }
        }
        delta /= n;

        let hidden = self.shape.hidden_layers;
        let mut grads = vec![Dense::zeros(0, 0); hidden + 1];
        for l in (0..=hidden).rev() {
            let layer = &self.layers[l];
            grads[l] = Dense {
                weights: delta.t().dot(&trace.inputs[l]),
                bias: delta.sum_axis(Axis(0)),
            };
            if l == 0 {
                break;
            }
            let mut upstream = delta.dot(&layer.weights);
            // `inputs[l]` is hidden layer `l-1` after dropout.
            if let Some(m) = masks {
                if l < hidden {
                    upstream *= &m.0[l - 1];
                }
            }
            let t = &trace.activations[l - 1];
            delta = upstream * &t.mapv(|v| 1.0 - v * v);
        }
        Ok((loss, Gradients(grads)))
    }

    pub fn adam_step(&mut self, grads: &Gradients) -> Result<()> {
        if grads.0.len() != self.layers.len() {
            return Err(Error::Shape {
                expected: self.layers.len(),
                actual: grads.0.len(),
            });
        }
        for (g, p) in grads.0.iter().zip(&self.layers) {
            if g.weights.dim() != p.weights.dim() || g.bias.len() != p.bias.len() {
                return Err(Error::Invariant(
                    "gradient shape differs from parameters".into(),
                ));
            }
        }
        self.adam.step += 1;
        let step = self.adam.step;
        let cfg = self.adam.config;
        for (l, g) in grads.0.iter().enumerate() {
            let p = &mut self.layers[l];
            let m = &mut self.adam.first[l];
            let v = &mut self.adam.second[l];
            adam_update(
                p.weights.as_slice_mut().expect("standard layout"),
                g.weights.as_slice().expect("standard layout"),
                m.weights.as_slice_mut().expect("standard layout"),
                v.weights.as_slice_mut().expect("standard layout"),
                step,
                &cfg,
            );
            adam_update(
                p.bias.as_slice_mut().expect("standard layout"),
                g.bias.as_slice().expect("standard layout"),
                m.bias.as_slice_mut().expect("standard layout"),
                v.bias.as_slice_mut().expect("standard layout"),
                step,
                &cfg,
            );
        }
        Ok(())
    }

    /// One training event: dropout masks, gradient, Adam update. Returns the loss.
    pub fn train_step<R: Rng>(&mut self, batch: &[&Sample], rng: &mut R) -> Result<f64> {
        let masks = self.sample_masks(batch.len(), rng);
        let (loss, grads) = self.backward(batch, masks.as_ref())?;
        self.adam_step(&grads)?;
        Ok(loss)
    }
}
