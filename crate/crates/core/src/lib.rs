//! Generalization certificates for feed-forward networks trained on
//! non-stationary phi-mixing sequences.
//!
//! The crate computes, for a known data-generating process, the itemized
//! upper bound
//!
//! ```text
//! P_Π[argmax F(X) ≠ Y] ≤ L_Z(F) + (1/n) Σ μ_i + 3 ‖Δ_n‖∞ sqrt(ln(2/δ) / 2n)
//!                        + 8 / n^{3/2} + 72 B ln(2W) ln(n) / (γ n) · T_A
//! ```
//!
//! and checks the supporting inequalities empirically on synthetic hidden
//! Markov processes whose mixing coefficients φ(k) and marginal drift μ_i are
//! computable in closed form.
//!
//! Modules:
//! - [`process`]: hidden Markov sources, φ(k), μ_i, sampling.
//! - [`network`]: forward pass, margin, ramp loss, SGD training.
//! - [`norms`]: spectral and (2,1) norms, spectral complexity `T_A`.
//! - [`rademacher`]: exact and Monte Carlo Rademacher complexity, covering bound.
//! - [`bounds`]: certificate assembly and the validators.
//! - [`harness`]: configuration files and the CLI commands.

// `!(x > 0.0)` is used deliberately so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod network;
pub mod norms;
pub mod process;
pub mod rademacher;
pub mod rng;

pub use dataset::{DatasetKind, LabeledDataset};
pub use error::{Error, Result};
pub use linalg::Matrix;
