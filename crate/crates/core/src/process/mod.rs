//! Non-stationary phi-mixing label sequences from finite hidden Markov
//! chains, with exact (or certified upper-bound) mixing quantities.

mod brute;
mod mixing;
mod sampling;
mod spec;

pub use brute::{brute_force_phi, DEFAULT_BUDGET as BRUTE_FORCE_BUDGET};
pub use mixing::{
    discrete_joint_laws, gaussian_shift_tv, marginal_at, mixing_profile, mu_at, mu_is_exact,
    phi_coefficient, phi_coefficient_window, stationary_distribution, tv_distance, Exactness,
    MixingProfile,
};
pub(crate) use sampling::simulate;
pub use sampling::{sample_sequence, sample_sequence_stream, sample_target};
pub use spec::{presets, DriftSchedule, EmissionSpec, MarkovSpec, ProcessSpec, STOCHASTIC_TOL};
