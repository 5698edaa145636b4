//! Certificate assembly and empirical checks of the inequalities behind it.
//!
//! The general bound for a loss class `F_ℓ` with values in `[0, 1]`:
//!
//! ```text
//! E_Π ℓ ≤ (1/n) Σ ℓ(Z_i) + 2 R_Z(F_ℓ) + (1/n) Σ μ_i + 3 ‖Δ_n‖∞ sqrt(ln(2/δ) / (2n))
//! ```
//!
//! with `‖Δ_n‖∞ = 1 + 2 Σ_{k ≤ n} φ(k)`. For networks, `R_Z` is replaced by
//! the covering bound, giving the per-configuration certificate.

mod pipeline;
mod validate;

use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetKind, LabeledDataset};
use crate::error::{Error, Result};
use crate::network::{empirical_loss, zero_one_loss, NetworkParams, PopulationEstimate};
use crate::norms::{layer_norms, spectral_complexity_of, LayerNorms};
use crate::process::{Exactness, MixingProfile};
use crate::rademacher::covering_terms;

pub use pipeline::{run_certification, CertificationConfig, DEFAULT_DELTA_EST};
pub use validate::{
    validate_marginal_shift, validate_mcdiarmid, validate_ramp_dominance, validate_symmetrization,
    MarginalShiftReport, McDiarmidConfig, RampDominanceReport, SymmetrizationReport, TailReport,
    DEFAULT_EPSILON_GRID,
};

/// Relative gap above which the two readings of `‖Δ_n‖²∞` are flagged.
const CONVENTION_GAP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RademacherSource {
    CoveringBound,
    MonteCarlo,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    /// General bounded-loss bound with a supplied Rademacher value.
    BoundedLoss,
    /// Network bound with observed norms plugged in; valid for this
    /// configuration of norms and margin, not uniformly over them.
    PerConfigurationCertificate,
}

/// Itemized bound. `total_bound` is the sum of the terms returned by
/// [`BoundReport::terms`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: CertificateKind,
    pub n: usize,
    pub gamma: Option<f64>,
    pub delta: f64,
    pub seed: Option<u64>,
    pub empirical_ramp_loss: f64,
    pub empirical_zero_one: Option<f64>,
    /// Value of (an upper bound on) `R_Z`; enters the total as `2 R_Z`.
    pub rademacher_term: f64,
    pub rademacher_source: RademacherSource,
    pub mu_mean: f64,
    pub delta_inf: f64,
    /// `3 ‖Δ_n‖∞ sqrt(ln(2/δ) / (2n))`.
    pub concentration_term: f64,
    /// Same term if `1 + 2Σφ` is read as the squared norm: `3 sqrt((1 + 2Σφ) ln(2/δ) / (2n))`.
    pub concentration_term_alt: f64,
    pub conventions_differ: bool,
    /// `8 / n^{3/2}` (network certificate only).
    pub small_term: Option<f64>,
    /// `72 B ln(2W) ln(n) / (γ n) · (Σ (b_i/s_i)^{2/3})^{3/2} · ∏ s_i p_i` (network certificate only).
    pub complexity_term: Option<f64>,
    pub input_norm: Option<f64>,
    pub max_width: Option<usize>,
    pub layer_norms: Option<LayerNorms>,
    pub spectral_complexity: Option<f64>,
    /// All layers nonzero was false; the network is the zero map and its
    /// loss class is a single constant function.
    pub degenerate_zero_network: bool,
    pub total_bound: f64,
    pub population_ramp_estimate: Option<f64>,
    pub population_zero_one_estimate: Option<f64>,
    pub population_halfwidth: Option<f64>,
    pub bound_holds: Option<bool>,
    pub phi_exactness: Exactness,
    pub mu_exactness: Exactness,
}

impl BoundReport {
    /// The additive pieces of `total_bound`, in summation order.
    pub fn terms(&self) -> Vec<f64> {
        match self.kind {
            CertificateKind::BoundedLoss => vec![
                self.empirical_ramp_loss,
                2.0 * self.rademacher_term,
                self.mu_mean,
                self.concentration_term,
            ],
            CertificateKind::PerConfigurationCertificate => vec![
                self.empirical_ramp_loss,
                self.mu_mean,
                self.concentration_term,
                self.small_term.unwrap_or(0.0),
                self.complexity_term.unwrap_or(0.0),
            ],
        }
    }

    pub fn recomposed_total(&self) -> f64 {
        self.terms().iter().sum()
    }

    /// Records the population estimate and whether the certificate covers it.
    pub fn attach_population(&mut self, est: &PopulationEstimate) {
        self.population_ramp_estimate = Some(est.ramp);
        self.population_zero_one_estimate = Some(est.zero_one);
        self.population_halfwidth = Some(est.halfwidth);
        self.bound_holds = Some(self.total_bound >= est.zero_one - est.halfwidth);
    }
}

pub fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::BadDelta(delta))
    }
}

/// `3 ‖Δ_n‖∞ sqrt(ln(2/δ) / (2n))`.
pub fn concentration_term(delta_inf: f64, delta: f64, n: usize) -> f64 {
    3.0 * delta_inf * ((2.0 / delta).ln() / (2.0 * n as f64)).sqrt()
}

fn concentration_term_alt(delta_inf: f64, delta: f64, n: usize) -> f64 {
    3.0 * (delta_inf * (2.0 / delta).ln() / (2.0 * n as f64)).sqrt()
}

fn mean_mu(profile: &MixingProfile, n: usize) -> Result<f64> {
    if profile.horizon < n || n == 0 {
        return Err(Error::InvalidSpec(format!(
            "mixing profile horizon {} does not cover n = {n}",
            profile.horizon
        )));
    }
    Ok(profile.mu[..n].iter().sum::<f64>() / n as f64)
}

/// `empirical + 2 rademacher + (1/n) Σ μ_i + 3 ‖Δ_n‖∞ sqrt(ln(2/δ) / (2n))`.
pub fn bounded_loss_bound(
    empirical: f64,
    rademacher: f64,
    profile: &MixingProfile,
    delta: f64,
    n: usize,
) -> Result<f64> {
    check_delta(delta)?;
    if !(0.0..=1.0).contains(&empirical) || !(rademacher >= 0.0) {
        return Err(Error::InvalidSpec(
            "need empirical loss in [0, 1] and a non-negative Rademacher value".into(),
        ));
    }
    Ok(empirical
        + 2.0 * rademacher
        + mean_mu(profile, n)?
        + concentration_term(profile.delta_inf, delta, n))
}

/// Bounded-loss report for a supplied Rademacher value.
pub fn bounded_loss_report(
    empirical: f64,
    rademacher: f64,
    source: RademacherSource,
    profile: &MixingProfile,
    delta: f64,
    n: usize,
) -> Result<BoundReport> {
    let total_bound = bounded_loss_bound(empirical, rademacher, profile, delta, n)?;
    let concentration = concentration_term(profile.delta_inf, delta, n);
    let alt = concentration_term_alt(profile.delta_inf, delta, n);
    Ok(BoundReport {
        kind: CertificateKind::BoundedLoss,
        n,
        gamma: None,
        delta,
        seed: None,
        empirical_ramp_loss: empirical,
        empirical_zero_one: None,
        rademacher_term: rademacher,
        rademacher_source: source,
        mu_mean: mean_mu(profile, n)?,
        delta_inf: profile.delta_inf,
        concentration_term: concentration,
        concentration_term_alt: alt,
        conventions_differ: concentration > alt * (1.0 + CONVENTION_GAP),
        small_term: None,
        complexity_term: None,
        input_norm: None,
        max_width: None,
        layer_norms: None,
        spectral_complexity: None,
        degenerate_zero_network: false,
        total_bound,
        population_ramp_estimate: None,
        population_zero_one_estimate: None,
        population_halfwidth: None,
        bound_holds: None,
        phi_exactness: profile.phi_exactness,
        mu_exactness: profile.mu_exactness,
    })
}

/// `8 / n^{3/2}`.
pub fn certificate_small_term(n: usize) -> f64 {
    8.0 / (n as f64).powf(1.5)
}

/// `72 B ln(2W) ln(n) / (γ n) · (Σ (b_i/s_i)^{2/3})^{3/2} · ∏ s_i p_i`.
pub fn certificate_complexity_term(
    input_norm: f64,
    gamma: f64,
    max_width: usize,
    n: usize,
    norms: &LayerNorms,
) -> f64 {
    let nf = n as f64;
    72.0 * input_norm * (2.0 * max_width as f64).ln() * nf.ln() / (gamma * nf)
        * norms.ratio_aggregate()
        * norms.lipschitz_product()
}

/// Per-configuration certificate for a trained network on one sequence.
pub fn network_certificate(
    data: &LabeledDataset,
    params: &NetworkParams,
    gamma: f64,
    profile: &MixingProfile,
    delta: f64,
) -> Result<BoundReport> {
    check_delta(delta)?;
    if !(gamma > 0.0) {
        return Err(Error::NonpositiveGamma(gamma));
    }
    if data.kind != DatasetKind::Sequence {
        return Err(Error::WrongKind {
            expected: DatasetKind::Sequence.as_str(),
            actual: data.kind.as_str(),
        });
    }
    let n = data.len();
    if profile.horizon != n {
        return Err(Error::InvalidSpec(format!(
            "profile horizon {} differs from n = {n}",
            profile.horizon
        )));
    }
    if n < 2 {
        return Err(Error::InvalidSpec("certificate needs n >= 2".into()));
    }
    let empirical = empirical_loss(params, data, gamma)?;
    let zero_one = zero_one_loss(params, data)?;
    let norms = layer_norms(params);
    let input_norm = data.input_norm();
    let max_width = params.max_width();

    let (rademacher, small, complexity, degenerate) = match norms.first_zero_layer() {
        Some(_) => (0.0, 0.0, 0.0, true),
        None => {
            let covering = covering_terms(input_norm, gamma, max_width, n, &norms)?;
            let small = certificate_small_term(n);
            let complexity = certificate_complexity_term(input_norm, gamma, max_width, n, &norms);
            assert!(
                (small - 2.0 * covering.small).abs() <= 1e-12 * small
                    && (complexity - 2.0 * covering.complexity).abs() <= 1e-12 * complexity,
                "certificate terms must equal twice the covering bound"
            );
            (covering.total(), small, complexity, false)
        }
    };

    let mu_mean = mean_mu(profile, n)?;
    let concentration = concentration_term(profile.delta_inf, delta, n);
    let alt = concentration_term_alt(profile.delta_inf, delta, n);
    let total_bound = empirical + mu_mean + concentration + small + complexity;
    Ok(BoundReport {
        kind: CertificateKind::PerConfigurationCertificate,
        n,
        gamma: Some(gamma),
        delta,
        seed: Some(data.seed),
        empirical_ramp_loss: empirical,
        empirical_zero_one: Some(zero_one),
        rademacher_term: rademacher,
        rademacher_source: RademacherSource::CoveringBound,
        mu_mean,
        delta_inf: profile.delta_inf,
        concentration_term: concentration,
        concentration_term_alt: alt,
        conventions_differ: concentration > alt * (1.0 + CONVENTION_GAP),
        small_term: Some(small),
        complexity_term: Some(complexity),
        input_norm: Some(input_norm),
        max_width: Some(max_width),
        spectral_complexity: Some(spectral_complexity_of(&norms)),
        layer_norms: Some(norms),
        degenerate_zero_network: degenerate,
        total_bound,
        population_ramp_estimate: None,
        population_zero_one_estimate: None,
        population_halfwidth: None,
        bound_holds: None,
        phi_exactness: profile.phi_exactness,
        mu_exactness: profile.mu_exactness,
    })
}

/// `2 exp(-2ε² / (n c² ‖Δ_n‖²∞))` with `‖Δ_n‖∞ = delta_inf`.
pub fn mcdiarmid_tail_bound(epsilon: f64, n: usize, c: f64, delta_inf: f64) -> f64 {
    2.0 * (-2.0 * epsilon * epsilon / (n as f64 * c * c * delta_inf * delta_inf)).exp()
}
