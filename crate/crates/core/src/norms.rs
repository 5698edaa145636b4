//! Spectral and (2,1) norms of weight matrices and the spectral complexity
//! `T_A = (∏ p_i ‖A_i‖_S) (Σ (‖A_iᵀ‖_{2,1} / ‖A_i‖_S)^{2/3})^{3/2}`.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg::{norm2, Matrix};
use crate::network::NetworkParams;
use crate::rng::{stream_rng, tags};

pub const MAX_POWER_ITERATIONS: usize = 10_000;
pub const DEFAULT_SPECTRAL_TOL: f64 = 1e-10;
const START_SEED: u64 = 0x5eed_5bec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralEstimate {
    pub value: f64,
    pub iterations: usize,
    /// False when the iteration cap was hit; `value` is then the best estimate.
    pub converged: bool,
}

/// Largest singular value by power iteration on `AᵀA`.
///
/// Stops once successive estimates differ by less than `tol` relative and the
/// geometric extrapolation of the remaining change is also below `tol`.
/// The start vector is a fixed seeded Gaussian; if the iterate collapses into
/// the null space the run restarts once from a second stream.
pub fn spectral_norm(a: &Matrix, tol: f64) -> SpectralEstimate {
    if a.as_slice().iter().all(|&v| v == 0.0) || a.rows() == 0 || a.cols() == 0 {
        return SpectralEstimate {
            value: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    let first = power_iteration(a, tol, 0);
    match first {
        Some(est) => est,
        None => power_iteration(a, tol, 1).unwrap_or(SpectralEstimate {
            value: 0.0,
            iterations: 2 * MAX_POWER_ITERATIONS,
            converged: false,
        }),
    }
}

fn power_iteration(a: &Matrix, tol: f64, attempt: u64) -> Option<SpectralEstimate> {
    let mut rng = stream_rng(START_SEED ^ tags::SPECTRAL, attempt);
    let mut v: Vec<f64> = (0..a.cols())
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let n0 = norm2(&v);
    v.iter_mut().for_each(|x| *x /= n0);

    let mut estimate = 0.0f64;
    let mut prev_diff = 0.0f64;
    for it in 1..=MAX_POWER_ITERATIONS {
        let av = a.mul_vec(&v);
        let sigma = norm2(&av);
        let u = a.t_mul_vec(&av);
        let nu = norm2(&u);
        if sigma == 0.0 || nu == 0.0 {
            return None;
        }
        let diff = (sigma - estimate).abs();
        let done = diff < tol * sigma && {
            // successive differences shrink geometrically; bound what is left
            let q = if prev_diff > 0.0 {
                (diff / prev_diff).min(0.999_999)
            } else {
                1.0
            };
            diff <= 4.0 * f64::EPSILON * sigma || diff * q / (1.0 - q) < tol * sigma
        };
        prev_diff = diff;
        estimate = estimate.max(sigma);
        if done {
            return Some(SpectralEstimate {
                value: estimate,
                iterations: it,
                converged: true,
            });
        }
        v = u.into_iter().map(|x| x / nu).collect();
    }
    Some(SpectralEstimate {
        value: estimate,
        iterations: MAX_POWER_ITERATIONS,
        converged: false,
    })
}

/// `‖Aᵀ‖_{2,1}`: the sum of the Euclidean norms of the rows of `A`.
pub fn norm_2_1_of_transpose(a: &Matrix) -> f64 {
    (0..a.rows()).map(|i| norm2(a.row(i))).sum()
}

/// Per-layer `s_i = ‖A_i‖_S`, `b_i = ‖A_iᵀ‖_{2,1}`, and Lipschitz constants `p_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerNorms {
    pub spectral: Vec<f64>,
    pub two_one: Vec<f64>,
    pub lipschitz: Vec<f64>,
    /// Every power iteration converged.
    pub converged: bool,
}

impl LayerNorms {
    pub fn len(&self) -> usize {
        self.spectral.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spectral.is_empty()
    }

    pub fn first_zero_layer(&self) -> Option<usize> {
        self.spectral.iter().position(|&s| s == 0.0)
    }

    /// `∏ p_i s_i`.
    pub fn lipschitz_product(&self) -> f64 {
        self.spectral
            .iter()
            .zip(&self.lipschitz)
            .map(|(s, p)| s * p)
            .product()
    }

    /// `(Σ (b_i / s_i)^{2/3})^{3/2}`; requires every `s_i > 0`.
    pub fn ratio_aggregate(&self) -> f64 {
        self.two_one
            .iter()
            .zip(&self.spectral)
            .map(|(b, s)| (b / s).powf(2.0 / 3.0))
            .sum::<f64>()
            .powf(1.5)
    }
}

pub fn layer_norms(params: &NetworkParams) -> LayerNorms {
    let mut converged = true;
    let spectral = params
        .layers()
        .iter()
        .map(|a| {
            let est = spectral_norm(a, DEFAULT_SPECTRAL_TOL);
            converged &= est.converged;
            est.value
        })
        .collect();
    LayerNorms {
        spectral,
        two_one: params.layers().iter().map(norm_2_1_of_transpose).collect(),
        lipschitz: params.activations().iter().map(|a| a.lipschitz()).collect(),
        converged,
    }
}

/// `T_A` of a network; 0 when some layer is identically zero.
pub fn spectral_complexity(params: &NetworkParams) -> f64 {
    spectral_complexity_of(&layer_norms(params))
}

pub fn spectral_complexity_of(norms: &LayerNorms) -> f64 {
    if norms.first_zero_layer().is_some() {
        return 0.0;
    }
    norms.lipschitz_product() * norms.ratio_aggregate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Activation;

    #[test]
    fn spectral_examples() {
        let d = Matrix::from_rows(&[vec![3.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!((spectral_norm(&d, 1e-12).value - 3.0).abs() < 1e-10);
        let n = Matrix::from_rows(&[vec![0.0, 2.0], vec![0.0, 0.0]]).unwrap();
        let est = spectral_norm(&n, 1e-12);
        assert!((est.value - 2.0).abs() < 1e-12);
        assert!(est.converged);
        assert_eq!(spectral_norm(&Matrix::zeros(3, 4), 1e-10).value, 0.0);
    }

    #[test]
    fn spectral_matches_closed_form_2x2() {
        // σ_max² is the top eigenvalue of AᵀA
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let (p, q, r) = (10.0f64, 14.0, 20.0); // AᵀA = [[10,14],[14,20]]
        let top = 0.5 * (p + r + ((p - r).powi(2) + 4.0 * q * q).sqrt());
        let est = spectral_norm(&a, 1e-12);
        assert!((est.value - top.sqrt()).abs() < 1e-10 * top.sqrt());
    }

    #[test]
    fn two_one_examples() {
        let a = Matrix::from_rows(&[vec![3.0, 4.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(norm_2_1_of_transpose(&a), 5.0);
        assert_eq!(norm_2_1_of_transpose(&Matrix::identity(5)), 5.0);
        assert_eq!(norm_2_1_of_transpose(&Matrix::zeros(2, 3)), 0.0);
    }

    #[test]
    fn complexity_examples() {
        let single = NetworkParams::new(vec![Matrix::identity(2)], vec![Activation::Relu]).unwrap();
        assert!((spectral_complexity(&single) - 2.0).abs() < 1e-12);

        let zeroed = NetworkParams::new(
            vec![Matrix::identity(2), Matrix::zeros(2, 2)],
            vec![Activation::Relu, Activation::Identity],
        )
        .unwrap();
        assert_eq!(spectral_complexity(&zeroed), 0.0);
    }
}
