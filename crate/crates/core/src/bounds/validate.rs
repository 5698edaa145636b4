//! Monte Carlo and exact checks of the four supporting inequalities:
//! the phi-mixing McDiarmid tail, the TV shift of expectations,
//! symmetrization, and 0-1 loss ≤ ramp loss.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mcdiarmid_tail_bound;
use crate::error::{Error, Result};
use crate::network::{is_error, margin, ramp_loss};
use crate::process::{discrete_joint_laws, mixing_profile, simulate, EmissionSpec, ProcessSpec};
use crate::rademacher::{exact_from_values, mc_from_values, mean_and_stderr, FunctionClass};
use crate::rng::{derive_seed, stream_rng, tags};

pub const DEFAULT_EPSILON_GRID: [f64; 5] = [0.02, 0.05, 0.1, 0.2, 0.3];
/// Largest `n` for which the symmetrization check enumerates signs exactly.
const SYMMETRIZATION_EXACT_LIMIT: usize = 12;
const SYMMETRIZATION_SIGN_DRAWS: usize = 64;
pub const MIN_TAIL_TRIALS: usize = 10_000;
pub const MIN_SYMMETRIZATION_TRIALS: usize = 1_000;
/// Absolute slack allowed in the exact marginal-shift comparison.
pub const MARGINAL_SHIFT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McDiarmidConfig {
    pub epsilon_grid: Vec<f64>,
    /// Replaces the computed `‖Δ_n‖∞` (negative controls).
    pub delta_inf_override: Option<f64>,
}

impl Default for McDiarmidConfig {
    fn default() -> Self {
        Self {
            epsilon_grid: DEFAULT_EPSILON_GRID.to_vec(),
            delta_inf_override: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub n: usize,
    pub trials: usize,
    pub lipschitz_constant: f64,
    pub delta_inf: f64,
    pub statistic_mean: f64,
    pub epsilon: Vec<f64>,
    pub empirical_tail: Vec<f64>,
    pub empirical_stderr: Vec<f64>,
    pub analytic_bound: Vec<f64>,
    /// `empirical - 3·stderr > bound` at that ε.
    pub violation: Vec<bool>,
}

impl TailReport {
    pub fn violations(&self) -> usize {
        self.violation.iter().filter(|&&v| v).count()
    }
}

/// Tail frequencies of `Φ = (1/n) Σ f(X_i, Y_i)` against the mixing
/// McDiarmid bound with `c = 1/n`.
pub fn validate_mcdiarmid(
    spec: &ProcessSpec,
    statistic: &(dyn Fn(&[f64], usize) -> f64 + Sync),
    n: usize,
    trials: usize,
    seed: u64,
    config: &McDiarmidConfig,
) -> Result<TailReport> {
    spec.validate()?;
    if n == 0 || trials < MIN_TAIL_TRIALS {
        return Err(Error::InvalidSpec(format!(
            "need n >= 1 and at least {MIN_TAIL_TRIALS} trials"
        )));
    }
    let delta_inf = match config.delta_inf_override {
        Some(d) => d,
        None => mixing_profile(spec, n)?.delta_inf,
    };
    let samples: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, t);
            let mut total = 0.0;
            simulate(spec, n, &mut rng, |_, x, y| total += statistic(x, y));
            total / n as f64
        })
        .collect();
    if let Some(bad) = samples.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidSpec(format!(
            "statistic mean {bad} outside [0, 1]; f must map into [0, 1]"
        )));
    }
    let mean = samples.iter().sum::<f64>() / trials as f64;
    let c = 1.0 / n as f64;
    let m = trials as f64;

    let mut report = TailReport {
        n,
        trials,
        lipschitz_constant: c,
        delta_inf,
        statistic_mean: mean,
        epsilon: config.epsilon_grid.clone(),
        empirical_tail: Vec::new(),
        empirical_stderr: Vec::new(),
        analytic_bound: Vec::new(),
        violation: Vec::new(),
    };
    for &eps in &config.epsilon_grid {
        let hits = samples.iter().filter(|&&v| (v - mean).abs() >= eps).count();
        let p = hits as f64 / m;
        let se = (p * (1.0 - p) / m).sqrt();
        let bound = mcdiarmid_tail_bound(eps, n, c, delta_inf);
        report.empirical_tail.push(p);
        report.empirical_stderr.push(se);
        report.analytic_bound.push(bound);
        report.violation.push(p - 3.0 * se > bound);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalShiftReport {
    pub n: usize,
    /// `|E f(Z_i) - E_Π f|` for `i = 1..=n`.
    pub gaps: Vec<f64>,
    pub mu: Vec<f64>,
    pub averaged_gap: f64,
    pub mu_mean: f64,
    /// `max_i (gap_i - μ_i)`; non-positive up to rounding when the inequality holds.
    pub max_excess: f64,
    pub passed: bool,
}

/// Exact check of `|E f(Z_i) - E_Π f| ≤ μ_i` and its averaged form.
///
/// `f_table[a][y - 1]` is the value of `f` at `(alphabet[a], y)`.
pub fn validate_marginal_shift(
    spec: &ProcessSpec,
    f_table: &[Vec<f64>],
    n: usize,
) -> Result<MarginalShiftReport> {
    let EmissionSpec::Discrete { alphabet, .. } = &spec.emission else {
        return Err(Error::NotDiscrete);
    };
    let k = spec.num_classes;
    if f_table.len() != alphabet.len() || f_table.iter().any(|r| r.len() != k) {
        return Err(Error::DimensionMismatch {
            expected: alphabet.len() * k,
            actual: f_table.iter().map(Vec::len).sum(),
        });
    }
    if f_table.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidSpec("f must take values in [0, 1]".into()));
    }
    let (laws, target) = discrete_joint_laws(spec, n)?;
    let flat: Vec<f64> = f_table.iter().flatten().copied().collect();
    let expect = |law: &[f64]| law.iter().zip(&flat).map(|(p, f)| p * f).sum::<f64>();
    let target_value = expect(&target);

    let profile = mixing_profile(spec, n)?;
    let mut gaps = Vec::with_capacity(n);
    let mut sum_expect = 0.0;
    for law in &laws {
        let e = expect(law);
        sum_expect += e;
        gaps.push((e - target_value).abs());
    }
    let averaged_gap = (sum_expect / n as f64 - target_value).abs();
    let mu_mean = profile.mu_mean();
    let max_excess = gaps
        .iter()
        .zip(&profile.mu)
        .map(|(g, m)| g - m)
        .fold(f64::NEG_INFINITY, f64::max);
    let passed =
        max_excess <= MARGINAL_SHIFT_SLACK && averaged_gap <= mu_mean + MARGINAL_SHIFT_SLACK;
    Ok(MarginalShiftReport {
        n,
        gaps,
        mu: profile.mu,
        averaged_gap,
        mu_mean,
        max_excess,
        passed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetrizationReport {
    pub class_label: String,
    pub n: usize,
    pub trials: usize,
    /// Estimate of `E sup_f [(1/n) Σ f(Z_i) - E (1/n) Σ f(Z'_i)]`.
    pub lhs: f64,
    pub lhs_stderr: f64,
    /// Estimate of `2 R_n(F)`.
    pub rhs: f64,
    pub rhs_stderr: f64,
    /// Per-member expectations were computed exactly (discrete emissions).
    pub exact_expectations: bool,
    pub violation: bool,
}

/// Monte Carlo check of `E sup_f [P_n f - E P_n f] ≤ 2 R_n(F)` over
/// independent runs of the process.
pub fn validate_symmetrization(
    class: &FunctionClass,
    spec: &ProcessSpec,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<SymmetrizationReport> {
    spec.validate()?;
    if class.is_empty() || n == 0 || trials < MIN_SYMMETRIZATION_TRIALS {
        return Err(Error::InvalidSpec(format!(
            "need a nonempty class, n >= 1 and at least {MIN_SYMMETRIZATION_TRIALS} trials"
        )));
    }
    let members = class.len();
    let run_means = |rng: &mut rand_chacha::ChaCha8Rng| -> (Vec<f64>, Vec<Vec<f64>>) {
        let mut values = vec![Vec::with_capacity(n); members];
        simulate(spec, n, rng, |_, x, y| {
            for (m, row) in values.iter_mut().enumerate() {
                row.push(class.eval_point(m, x, y));
            }
        });
        let means = values
            .iter()
            .map(|row| row.iter().sum::<f64>() / n as f64)
            .collect();
        (means, values)
    };

    let (expected, exact_expectations) = match exact_member_means(class, spec, n) {
        Some(e) => (e?, true),
        None => {
            let mean_seed = derive_seed(seed, tags::MEAN_BATCH);
            let batch: Vec<Vec<f64>> = (0..trials as u64)
                .into_par_iter()
                .map(|t| run_means(&mut stream_rng(mean_seed, t)).0)
                .collect();
            let e = (0..members)
                .map(|m| batch.iter().map(|b| b[m]).sum::<f64>() / trials as f64)
                .collect();
            (e, false)
        }
    };

    let sign_seed = derive_seed(seed, tags::SIGNS);
    let draws: Vec<Result<(f64, f64)>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let (means, values) = run_means(&mut stream_rng(seed, t));
            if let Some(bad) = values.iter().flatten().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::InvalidSpec(format!(
                    "class value {bad} outside [0, 1]"
                )));
            }
            let lhs = means
                .iter()
                .zip(&expected)
                .map(|(a, b)| a - b)
                .fold(f64::NEG_INFINITY, f64::max);
            let r = if n <= SYMMETRIZATION_EXACT_LIMIT {
                exact_from_values(&values, n)?.mean
            } else {
                mc_from_values(
                    &values,
                    n,
                    SYMMETRIZATION_SIGN_DRAWS,
                    derive_seed(sign_seed, t),
                )?
                .mean
            };
            Ok((lhs, 2.0 * r))
        })
        .collect();
    let draws = draws.into_iter().collect::<Result<Vec<_>>>()?;
    let (lhs, lhs_stderr) = mean_and_stderr(&draws.iter().map(|d| d.0).collect::<Vec<_>>());
    let (rhs, rhs_stderr) = mean_and_stderr(&draws.iter().map(|d| d.1).collect::<Vec<_>>());
    Ok(SymmetrizationReport {
        class_label: class.label.clone(),
        n,
        trials,
        lhs,
        lhs_stderr,
        rhs,
        rhs_stderr,
        exact_expectations,
        violation: lhs - 3.0 * lhs_stderr > rhs + 3.0 * rhs_stderr,
    })
}

/// `E (1/n) Σ f(Z_i)` per member by enumeration, for discrete emissions.
fn exact_member_means(
    class: &FunctionClass,
    spec: &ProcessSpec,
    n: usize,
) -> Option<Result<Vec<f64>>> {
    let EmissionSpec::Discrete { alphabet, .. } = &spec.emission else {
        return None;
    };
    let k = spec.num_classes;
    Some(discrete_joint_laws(spec, n).map(|(laws, _)| {
        let mut avg = vec![0.0; alphabet.len() * k];
        for law in &laws {
            for (a, p) in avg.iter_mut().zip(law) {
                *a += p / n as f64;
            }
        }
        (0..class.len())
            .map(|m| {
                avg.iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(idx, p)| p * class.eval_point(m, &alphabet[idx / k], idx % k + 1))
                    .sum()
            })
            .collect()
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RampDominanceReport {
    pub samples: usize,
    pub ties: usize,
    pub failures: usize,
}

/// Pointwise sweep of `1[argmax v ≠ y] ≤ ℓ_γ(-M(v, y))` over random
/// `(v, y, γ)`; a quarter of the draws use integer-rounded scores to hit ties.
pub fn validate_ramp_dominance(samples: usize, seed: u64) -> Result<RampDominanceReport> {
    let results: Vec<Result<(bool, bool)>> = (0..samples as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, t);
            let k = rng.random_range(2..=6);
            let coarse = rng.random_range(0..4) == 0;
            let v: Vec<f64> = (0..k)
                .map(|_| {
                    let x: f64 = rng.random_range(-5.0..5.0);
                    if coarse {
                        x.round()
                    } else {
                        x
                    }
                })
                .collect();
            let y = rng.random_range(1..=k);
            let gamma = 10f64.powf(rng.random_range(-3.0..2.0));
            let m = margin(&v, y)?;
            let indicator = if is_error(&v, y)? { 1.0 } else { 0.0 };
            Ok((indicator > ramp_loss(-m, gamma)?, m == 0.0))
        })
        .collect();
    let mut report = RampDominanceReport {
        samples,
        ties: 0,
        failures: 0,
    };
    for r in results {
        let (fail, tie) = r?;
        report.failures += fail as usize;
        report.ties += tie as usize;
    }
    Ok(report)
}
