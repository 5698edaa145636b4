//! Minibatch SGD on softmax cross-entropy, with hand-written backprop.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Activation, NetworkParams};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::{stream_rng, tags};

/// Layer widths `d_0 .. d_L` and one activation per layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub dims: Vec<usize>,
    pub activations: Vec<Activation>,
}

impl Architecture {
    pub fn validate(&self) -> Result<()> {
        if self.dims.len() < 2 || self.dims.contains(&0) {
            return Err(Error::InvalidSpec(
                "architecture needs at least input and output widths, all positive".into(),
            ));
        }
        if self.activations.len() != self.dims.len() - 1 {
            return Err(Error::DimensionMismatch {
                expected: self.dims.len() - 1,
                actual: self.activations.len(),
            });
        }
        self.activations.iter().try_for_each(|a| a.validate())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Half-width of the uniform initialization; `None` uses `1/sqrt(fan_in)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_scale: Option<f64>,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidSpec(
                "learning_rate must be non-negative".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidSpec("batch_size must be positive".into()));
        }
        if let Some(s) = self.init_scale {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidSpec("init_scale must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Training surrogate. The ramp loss is flat outside its linear band, so it
/// is not used for optimization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Surrogate {
    /// `scale · (-log softmax(F(x))_y)`, averaged over the batch.
    SoftmaxCrossEntropy { scale: f64 },
}

impl Default for Surrogate {
    fn default() -> Self {
        Surrogate::SoftmaxCrossEntropy { scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedNetwork {
    pub params: NetworkParams,
    /// Mean surrogate loss of each epoch.
    pub loss_history: Vec<f64>,
}

pub fn init_params(
    arch: &Architecture,
    init_scale: Option<f64>,
    seed: u64,
) -> Result<NetworkParams> {
    arch.validate()?;
    let mut rng = stream_rng(seed, 0);
    let layers = arch
        .dims
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let s = init_scale.unwrap_or(1.0 / (fan_in as f64).sqrt());
            let data = (0..fan_in * fan_out)
                .map(|_| rng.random_range(-s..=s))
                .collect();
            Matrix::from_row_major(fan_out, fan_in, data)
        })
        .collect::<Result<Vec<_>>>()?;
    NetworkParams::new(layers, arch.activations.clone())
}

/// Surrogate loss over `batch` (indices into `data`) and its exact gradient
/// with respect to every weight matrix.
pub fn gradient(
    params: &NetworkParams,
    data: &LabeledDataset,
    batch: &[usize],
    surrogate: Surrogate,
) -> Result<(f64, Vec<Matrix>)> {
    if batch.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if data.input_dim() != params.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: params.input_dim(),
            actual: data.input_dim(),
        });
    }
    let Surrogate::SoftmaxCrossEntropy { scale } = surrogate;
    let weight = scale / batch.len() as f64;
    let layers = params.layers();
    let acts = params.activations();
    let mut grads: Vec<Matrix> = layers
        .iter()
        .map(|a| Matrix::zeros(a.rows(), a.cols()))
        .collect();
    let mut loss = 0.0;

    for &i in batch {
        let (x, y) = (data.input(i), data.labels[i]);
        if y == 0 || y > params.output_dim() {
            return Err(Error::BadLabel {
                label: y,
                num_classes: params.output_dim(),
            });
        }
        // inputs[l] feeds layer l, pre[l] is its pre-activation
        let mut inputs = Vec::with_capacity(layers.len() + 1);
        let mut pre = Vec::with_capacity(layers.len());
        inputs.push(x.to_vec());
        for (a, act) in layers.iter().zip(acts) {
            let h = a.mul_vec(inputs.last().unwrap());
            inputs.push(h.iter().map(|&v| act.apply(v)).collect());
            pre.push(h);
        }
        let logits = inputs.last().unwrap();
        let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|v| (v - top).exp()).collect();
        let z: f64 = exps.iter().sum();
        loss += weight * (z.ln() + top - logits[y - 1]);

        // d loss / d output
        let mut upstream: Vec<f64> = exps.iter().map(|e| weight * e / z).collect();
        upstream[y - 1] -= weight;

        for l in (0..layers.len()).rev() {
            let delta: Vec<f64> = upstream
                .iter()
                .zip(&pre[l])
                .map(|(u, &h)| u * acts[l].derivative(h))
                .collect();
            let g = &mut grads[l];
            let input = &inputs[l];
            for (r, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                for (c, &v) in input.iter().enumerate() {
                    g[(r, c)] += d * v;
                }
            }
            if l > 0 {
                upstream = layers[l].t_mul_vec(&delta);
            }
        }
    }
    Ok((loss, grads))
}

/// Deterministic minibatch SGD from a seeded uniform initialization.
pub fn train_sgd(
    train_data: &LabeledDataset,
    arch: &Architecture,
    config: &TrainConfig,
) -> Result<TrainedNetwork> {
    config.validate()?;
    arch.validate()?;
    if arch.dims[0] != train_data.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: train_data.input_dim(),
            actual: arch.dims[0],
        });
    }
    if train_data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut params = init_params(arch, config.init_scale, config.seed)?;
    let mut rng = stream_rng(config.seed, tags::SHUFFLE);
    let mut order: Vec<usize> = (0..train_data.len()).collect();
    let mut loss_history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let (loss, grads) = gradient(&params, train_data, batch, Surrogate::default())?;
            epoch_loss += loss * batch.len() as f64;
            if config.learning_rate > 0.0 {
                for (w, g) in params.layers_mut().iter_mut().zip(&grads) {
                    for (wv, gv) in w.as_mut_slice().iter_mut().zip(g.as_slice()) {
                        *wv -= config.learning_rate * gv;
                    }
                }
            }
        }
        let epoch_loss = epoch_loss / train_data.len() as f64;
        if !epoch_loss.is_finite() || params.layers().iter().any(|a| !a.is_finite()) {
            return Err(Error::DivergedLoss { epoch });
        }
        loss_history.push(epoch_loss);
    }
    Ok(TrainedNetwork {
        params,
        loss_history,
    })
}
