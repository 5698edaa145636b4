//! Exact mixing quantities of hidden Markov processes: stationary law,
//! marginals, phi-mixing coefficients, marginal drift, and the dependence
//! factor `1 + 2 Σ φ(k)`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spec::{EmissionSpec, MarkovSpec, ProcessSpec};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Total variation values below this are rounding residue and reported as 0.
pub const TV_ZERO_FLOOR: f64 = 1e-14;

fn kernel(markov: &MarkovSpec) -> Matrix {
    Matrix::from_rows(&markov.transition).expect("validated kernel is rectangular")
}

/// Half the L1 distance between two probability vectors.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            actual: q.len(),
        });
    }
    for v in [p, q] {
        let total: f64 = v.iter().sum();
        if (total - 1.0).abs() > 1e-9 || v.iter().any(|&x| x < -1e-12) {
            return Err(Error::InvalidSpec(format!(
                "not a probability vector (sums to {total})"
            )));
        }
    }
    Ok(tv_unchecked(p, q))
}

pub(crate) fn tv_unchecked(p: &[f64], q: &[f64]) -> f64 {
    let tv = 0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>();
    if tv < TV_ZERO_FLOOR {
        0.0
    } else {
        tv.min(1.0)
    }
}

/// Unique stationary law of the hidden chain.
///
/// Uniqueness is established by finding a strictly positive power `P^m`
/// with `m <= S²` (primitive kernel). The law itself solves
/// `π (P - I) = 0, Σ π = 1`.
pub fn stationary_distribution(markov: &MarkovSpec) -> Result<Vec<f64>> {
    markov.validate()?;
    let s = markov.num_states;
    if !is_primitive(markov) {
        return Err(Error::NonUniqueStationary);
    }
    // Rows of the system are the balance equations; the last one is replaced
    // by normalization.
    let mut a = DMatrix::<f64>::zeros(s, s);
    for i in 0..s {
        for j in 0..s {
            a[(i, j)] = markov.transition[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..s {
        a[(s - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(s);
    b[s - 1] = 1.0;
    let pi = a.lu().solve(&b).ok_or(Error::NonUniqueStationary)?;
    let mut pi: Vec<f64> = pi.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= total);
    Ok(pi)
}

fn is_primitive(markov: &MarkovSpec) -> bool {
    let s = markov.num_states;
    let base: Vec<Vec<bool>> = markov
        .transition
        .iter()
        .map(|r| r.iter().map(|&p| p > 0.0).collect())
        .collect();
    let mut pow = base.clone();
    for _ in 0..s * s {
        if pow.iter().all(|r| r.iter().all(|&b| b)) {
            return true;
        }
        pow = (0..s)
            .map(|i| {
                (0..s)
                    .map(|j| (0..s).any(|k| pow[i][k] && base[k][j]))
                    .collect()
            })
            .collect();
    }
    false
}

/// Law of the hidden state at time `t`, `π0 P^t`.
pub fn marginal_at(spec: &ProcessSpec, t: usize) -> Vec<f64> {
    let p = kernel(&spec.markov);
    let mut m = spec.markov.initial.clone();
    for _ in 0..t {
        m = p.vec_mul(&m);
    }
    m
}

/// Precomputed marginals and kernel powers for one chain.
struct ChainTables {
    /// `marginals[t] = π0 P^t`, t = 0..=len-1.
    marginals: Vec<Vec<f64>>,
    stationary: Option<Vec<f64>>,
}

impl ChainTables {
    fn new(markov: &MarkovSpec, max_time: usize) -> Self {
        let p = kernel(markov);
        let mut marginals = Vec::with_capacity(max_time + 1);
        marginals.push(markov.initial.clone());
        for t in 1..=max_time {
            let next = p.vec_mul(&marginals[t - 1]);
            marginals.push(next);
        }
        Self {
            marginals,
            stationary: stationary_distribution(markov).ok(),
        }
    }

    /// `max_{n <= horizon, b reachable at n} TV(δ_b P^k, π0 P^{n+k})`,
    /// optionally also against the stationary limit point.
    fn phi(&self, rows_k: &Matrix, k: usize, horizon: usize, include_limit: bool) -> f64 {
        let mut best = 0.0f64;
        for n in 0..=horizon {
            let past = &self.marginals[n];
            let future = &self.marginals[n + k];
            for (b, &pb) in past.iter().enumerate() {
                if pb > 0.0 {
                    best = best.max(tv_unchecked(rows_k.row(b), future));
                }
            }
        }
        if include_limit {
            if let Some(pi) = &self.stationary {
                for (b, &pb) in pi.iter().enumerate() {
                    if pb > 0.0 {
                        best = best.max(tv_unchecked(rows_k.row(b), pi));
                    }
                }
            }
        }
        best
    }
}

fn kernel_power(markov: &MarkovSpec, k: usize) -> Matrix {
    let p = kernel(markov);
    let mut acc = Matrix::identity(markov.num_states);
    for _ in 0..k {
        acc = acc.matmul(&p).expect("square kernel");
    }
    acc
}

/// φ(k) of the hidden chain, with the supremum over the conditioning time
/// taken over `0..=horizon` plus the stationary limit point.
///
/// For the observed `(X, Y)` process this is exact when emissions are
/// deterministic and injective, and an upper bound otherwise.
pub fn phi_coefficient(spec: &ProcessSpec, k: usize, horizon: usize) -> f64 {
    phi_impl(spec, k, horizon, true)
}

/// Like [`phi_coefficient`] but restricted to conditioning times
/// `0..=horizon`, without the stationary limit point. This is the quantity
/// a finite enumeration of past events up to `horizon` sees.
pub fn phi_coefficient_window(spec: &ProcessSpec, k: usize, horizon: usize) -> f64 {
    phi_impl(spec, k, horizon, false)
}

fn phi_impl(spec: &ProcessSpec, k: usize, horizon: usize, include_limit: bool) -> f64 {
    assert!(k >= 1, "phi is defined for k >= 1");
    let tables = ChainTables::new(&spec.markov, horizon + k);
    let rows_k = kernel_power(&spec.markov, k);
    tables.phi(&rows_k, k, horizon, include_limit)
}

/// Joint law of `(alphabet index, label)` given a hidden-state law and an
/// emission table, flattened as `a * K + (y - 1)`.
pub(crate) fn joint_law(spec: &ProcessSpec, hidden: &[f64], table: &[Vec<f64>]) -> Vec<f64> {
    let k = spec.num_classes;
    let alphabet = table.first().map_or(0, Vec::len);
    let mut law = vec![0.0; alphabet * k];
    for (s, &ps) in hidden.iter().enumerate() {
        if ps == 0.0 {
            continue;
        }
        let y = spec.label_map[s] - 1;
        for (a, &e) in table[s].iter().enumerate() {
            law[a * k + y] += ps * e;
        }
    }
    law
}

/// Exact laws of `(X_i, Y_i)` for `i = 1..=n` and of the target Π, over the
/// finite support `(alphabet index a, label y)` flattened as `a * K + (y - 1)`.
pub fn discrete_joint_laws(spec: &ProcessSpec, n: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    spec.validate()?;
    if !spec.emission.is_discrete() {
        return Err(Error::NotDiscrete);
    }
    let pi = stationary_distribution(&spec.markov)?;
    let tables = ChainTables::new(&spec.markov, n);
    let laws = (1..=n)
        .map(|i| {
            let table = spec.emission.discrete_table_at(Some(i)).expect("discrete");
            joint_law(spec, &tables.marginals[i], &table)
        })
        .collect();
    let limit = spec.emission.discrete_table_at(None).expect("discrete");
    Ok((laws, joint_law(spec, &pi, &limit)))
}

/// TV between two isotropic Gaussians with common `sigma` and mean gap `shift`.
pub fn gaussian_shift_tv(shift: f64, sigma: f64) -> f64 {
    libm::erf(shift.abs() / (2.0 * std::f64::consts::SQRT_2 * sigma))
}

fn mu_from_marginal(spec: &ProcessSpec, i: usize, hidden: &[f64], pi: &[f64]) -> f64 {
    match &spec.emission {
        EmissionSpec::Discrete { .. } => {
            let at_i = spec.emission.discrete_table_at(Some(i)).expect("discrete");
            let limit = spec.emission.discrete_table_at(None).expect("discrete");
            tv_unchecked(
                &joint_law(spec, hidden, &at_i),
                &joint_law(spec, pi, &limit),
            )
        }
        EmissionSpec::Gaussian { sigma, .. } => {
            let at_i = spec.emission.gaussian_means_at(Some(i)).expect("gaussian");
            let limit = spec.emission.gaussian_means_at(None).expect("gaussian");
            let emission_drift = at_i
                .iter()
                .zip(&limit)
                .map(|(a, b)| {
                    let gap: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                    gaussian_shift_tv(gap.sqrt(), *sigma)
                })
                .fold(0.0, f64::max);
            (tv_unchecked(hidden, pi) + emission_drift).min(1.0)
        }
    }
}

/// μ_i: total variation between the law of `(X_i, Y_i)` and the target law Π.
///
/// Exact for discrete emissions. For Gaussian emissions returns the bound
/// `TV(hidden_i, π*) + max_s TV(N(m_{i,s}), N(m_{∞,s}))`, clamped to 1.
pub fn mu_at(spec: &ProcessSpec, i: usize) -> Result<f64> {
    assert!(i >= 1, "mu is defined for i >= 1");
    let pi = stationary_distribution(&spec.markov)?;
    let hidden = marginal_at(spec, i);
    Ok(mu_from_marginal(spec, i, &hidden, &pi))
}

/// Whether [`mu_at`] returns the exact drift rather than an upper bound.
pub fn mu_is_exact(spec: &ProcessSpec) -> bool {
    spec.emission.is_discrete() || (!spec.has_drift() && spec.labels_injective())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exactness {
    Exact,
    UpperBound,
}

/// φ(1..n), μ(1..n), and `delta_inf = 1 + 2 Σ φ(k)` for a spec and horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingProfile {
    pub horizon: usize,
    /// `phi[k-1] = φ(k)`.
    pub phi: Vec<f64>,
    /// `mu[i-1] = μ_i`.
    pub mu: Vec<f64>,
    pub delta_inf: f64,
    pub phi_exactness: Exactness,
    pub mu_exactness: Exactness,
}

impl MixingProfile {
    /// Profile of an iid, identically distributed sample: φ ≡ 0, μ ≡ 0.
    pub fn iid(n: usize) -> Self {
        Self::from_parts(
            vec![0.0; n],
            vec![0.0; n],
            Exactness::Exact,
            Exactness::Exact,
        )
    }

    pub fn from_parts(
        phi: Vec<f64>,
        mu: Vec<f64>,
        phi_exactness: Exactness,
        mu_exactness: Exactness,
    ) -> Self {
        debug_assert_eq!(phi.len(), mu.len());
        let delta_inf = 1.0 + 2.0 * phi.iter().sum::<f64>();
        Self {
            horizon: phi.len(),
            phi,
            mu,
            delta_inf,
            phi_exactness,
            mu_exactness,
        }
    }

    /// `(1/n) Σ μ_i`.
    pub fn mu_mean(&self) -> f64 {
        self.mu.iter().sum::<f64>() / self.horizon as f64
    }
}

/// Computes the full mixing profile of `spec` up to horizon `n`.
pub fn mixing_profile(spec: &ProcessSpec, n: usize) -> Result<MixingProfile> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidSpec("horizon must be positive".into()));
    }
    let pi = stationary_distribution(&spec.markov)?;
    let tables = ChainTables::new(&spec.markov, 2 * n);
    let p = kernel(&spec.markov);

    let mut powers = Vec::with_capacity(n);
    let mut acc = p.clone();
    for _ in 0..n {
        let next = acc.matmul(&p).expect("square kernel");
        powers.push(std::mem::replace(&mut acc, next));
    }
    let mut phi: Vec<f64> = powers
        .par_iter()
        .enumerate()
        .map(|(idx, rows_k)| tables.phi(rows_k, idx + 1, n, true))
        .collect();
    // φ is nonincreasing; strip rounding-level violations of that
    for k in 1..phi.len() {
        phi[k] = phi[k].min(phi[k - 1]);
    }

    let mu: Vec<f64> = (1..=n)
        .into_par_iter()
        .map(|i| mu_from_marginal(spec, i, &tables.marginals[i], &pi))
        .collect();

    let phi_exactness = if spec.is_injective() {
        Exactness::Exact
    } else {
        Exactness::UpperBound
    };
    let mu_exactness = if mu_is_exact(spec) {
        Exactness::Exact
    } else {
        Exactness::UpperBound
    };
    Ok(MixingProfile::from_parts(
        phi,
        mu,
        phi_exactness,
        mu_exactness,
    ))
}
