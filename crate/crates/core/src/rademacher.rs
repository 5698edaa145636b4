//! Empirical Rademacher complexity `E_θ sup_f (1/n) Σ θ_i f(z_i)` of finite
//! function classes, by exhaustive sign enumeration or Monte Carlo, and the
//! closed-form covering bound for margin-loss classes of networks.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::network::{margin, ramp_loss, NetworkParams};
use crate::norms::LayerNorms;
use crate::rng::stream_rng;

/// Maps a data point `(x, y)` to a value in `[0, 1]`.
pub type Evaluator = Arc<dyn Fn(&[f64], usize) -> f64 + Send + Sync>;

pub const MAX_EXACT_POINTS: usize = 20;
pub const MIN_MC_TRIALS: usize = 100;

#[derive(Clone)]
pub struct FunctionClass {
    pub label: String,
    members: Vec<Evaluator>,
}

impl fmt::Debug for FunctionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionClass")
            .field("label", &self.label)
            .field("members", &self.members.len())
            .finish()
    }
}

impl FunctionClass {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            members: Vec::new(),
        }
    }

    pub fn with(mut self, f: impl Fn(&[f64], usize) -> f64 + Send + Sync + 'static) -> Self {
        self.members.push(Arc::new(f));
        self
    }

    pub fn push(&mut self, f: Evaluator) {
        self.members.push(f);
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Union of two classes.
    pub fn union(&self, other: &FunctionClass) -> FunctionClass {
        FunctionClass {
            label: format!("{} ∪ {}", self.label, other.label),
            members: self.members.iter().chain(&other.members).cloned().collect(),
        }
    }

    /// Ramp-loss evaluators `(x, y) ↦ ℓ_γ(-M(F(x), y))` of a set of networks.
    pub fn ramp_losses(networks: &[NetworkParams], gamma: f64) -> Result<Self> {
        ramp_loss(0.0, gamma)?;
        let mut class = FunctionClass::new(format!(
            "ramp losses of {} networks, γ = {gamma}",
            networks.len()
        ));
        for net in networks {
            let net = net.clone();
            class.push(Arc::new(move |x, y| {
                let v = net.forward_unchecked(x);
                margin(&v, y).map_or(1.0, |m| ramp_loss(-m, gamma).unwrap_or(1.0))
            }));
        }
        Ok(class)
    }

    pub fn eval_point(&self, member: usize, x: &[f64], y: usize) -> f64 {
        (self.members[member])(x, y)
    }

    /// Evaluates every member on every point, as `values[member][point]`.
    pub fn evaluate(&self, data: &LabeledDataset) -> Result<Vec<Vec<f64>>> {
        self.members
            .iter()
            .enumerate()
            .map(|(m, f)| {
                data.iter()
                    .enumerate()
                    .map(|(i, (x, y))| {
                        let value = f(x, y);
                        if (0.0..=1.0).contains(&value) {
                            Ok(value)
                        } else {
                            Err(Error::OutOfRange {
                                value,
                                member: m,
                                point: i,
                            })
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RademacherEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
    pub method: Method,
}

fn sup_correlation(values: &[Vec<f64>], signs: impl Fn(usize) -> f64, n: usize) -> f64 {
    values
        .iter()
        .map(|row| (0..n).map(|i| signs(i) * row[i]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
        / n as f64
}

/// Exact average over all `2^n` sign vectors of a precomputed value table.
pub fn exact_from_values(values: &[Vec<f64>], n: usize) -> Result<RademacherEstimate> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if values.is_empty() {
        return Err(Error::InvalidSpec("function class is empty".into()));
    }
    if n > MAX_EXACT_POINTS {
        return Err(Error::TooLarge {
            required: 1u128 << n,
            budget: 1u128 << MAX_EXACT_POINTS,
        });
    }
    let total: f64 = (0u64..1 << n)
        .map(|mask| sup_correlation(values, |i| if mask >> i & 1 == 1 { 1.0 } else { -1.0 }, n))
        .sum();
    Ok(RademacherEstimate {
        mean: total / (1u64 << n) as f64,
        stderr: 0.0,
        trials: 1 << n,
        method: Method::Exact,
    })
}

/// Monte Carlo over seeded sign draws; trial `t` uses stream `t` of `seed`.
pub fn mc_from_values(
    values: &[Vec<f64>],
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<RademacherEstimate> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if values.is_empty() {
        return Err(Error::InvalidSpec("function class is empty".into()));
    }
    let draws: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, t);
            let signs: Vec<f64> = (0..n)
                .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                .collect();
            sup_correlation(values, |i| signs[i], n)
        })
        .collect();
    let (mean, stderr) = mean_and_stderr(&draws);
    Ok(RademacherEstimate {
        mean,
        stderr,
        trials,
        method: Method::MonteCarlo,
    })
}

pub(crate) fn mean_and_stderr(samples: &[f64]) -> (f64, f64) {
    let m = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / m;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Exact empirical Rademacher complexity; `n <= 20`.
pub fn empirical_rademacher_exact(
    class: &FunctionClass,
    data: &LabeledDataset,
) -> Result<RademacherEstimate> {
    if data.len() > MAX_EXACT_POINTS {
        return Err(Error::TooLarge {
            required: 1u128 << data.len().min(127),
            budget: 1u128 << MAX_EXACT_POINTS,
        });
    }
    exact_from_values(&class.evaluate(data)?, data.len())
}

/// Monte Carlo empirical Rademacher complexity with `trials >= 100` sign draws.
pub fn empirical_rademacher_mc(
    class: &FunctionClass,
    data: &LabeledDataset,
    trials: usize,
    seed: u64,
) -> Result<RademacherEstimate> {
    if trials < MIN_MC_TRIALS {
        return Err(Error::InvalidSpec(format!(
            "Monte Carlo needs at least {MIN_MC_TRIALS} trials"
        )));
    }
    mc_from_values(&class.evaluate(data)?, data.len(), trials, seed)
}

/// The two additive pieces of the covering bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoveringTerms {
    /// `4 / n^{3/2}`.
    pub small: f64,
    /// `36 B ln(2W) ln(n) / (γ n) · (Σ (b_i/s_i)^{2/3})^{3/2} · ∏ s_i p_i`.
    pub complexity: f64,
}

impl CoveringTerms {
    pub fn total(&self) -> f64 {
        self.small + self.complexity
    }
}

pub fn covering_terms(
    input_norm: f64,
    gamma: f64,
    max_width: usize,
    n: usize,
    norms: &LayerNorms,
) -> Result<CoveringTerms> {
    if n < 2 {
        return Err(Error::InvalidSpec("covering bound needs n >= 2".into()));
    }
    if !(gamma > 0.0) {
        return Err(Error::NonpositiveGamma(gamma));
    }
    if !(input_norm >= 0.0) || max_width == 0 {
        return Err(Error::InvalidSpec("need B >= 0 and W >= 1".into()));
    }
    if let Some(layer) = norms.first_zero_layer() {
        return Err(Error::ZeroSpectralNorm { layer });
    }
    let nf = n as f64;
    let small = 4.0 / nf.powf(1.5);
    let complexity = 36.0 * input_norm * (2.0 * max_width as f64).ln() * nf.ln() / (gamma * nf)
        * norms.ratio_aggregate()
        * norms.lipschitz_product();
    Ok(CoveringTerms { small, complexity })
}

/// Upper bound on the empirical Rademacher complexity of the ramp-loss class
/// of all networks with `‖A_i‖_S <= s_i`, `‖A_iᵀ‖_{2,1} <= b_i`, on data with
/// `sqrt(Σ ‖x_i‖²) <= B`.
pub fn covering_rademacher_bound(
    input_norm: f64,
    gamma: f64,
    max_width: usize,
    n: usize,
    norms: &LayerNorms,
) -> Result<f64> {
    covering_terms(input_norm, gamma, max_width, n, norms).map(|t| t.total())
}
