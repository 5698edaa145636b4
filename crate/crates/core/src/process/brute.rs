//! Literal evaluation of the phi-mixing supremum by enumerating events.
//!
//! Only feasible for tiny chains. Past events are the cylinder sets of
//! `σ(Z_0..Z_n)` (the supremum over a union of atoms is attained at an atom);
//! future events are *all* subsets of the cylinder atoms over
//! `Z_{n+k}..Z_{n+k+future_len-1}`.

use super::spec::ProcessSpec;
use crate::error::{Error, Result};

pub const MAX_STATES: usize = 3;
pub const MAX_PAST: usize = 4;
pub const MAX_FUTURE: usize = 3;
/// Default cap on (past atom, future event) pairs examined.
pub const DEFAULT_BUDGET: u128 = 100_000_000;

/// `max_{n <= n_max, B, A} |P[A | B] - P[A]|` by exhaustive enumeration.
pub fn brute_force_phi(
    spec: &ProcessSpec,
    k: usize,
    n_max: usize,
    future_len: usize,
    budget: u128,
) -> Result<f64> {
    spec.validate()?;
    if !spec.is_deterministic() {
        return Err(Error::NotDeterministic);
    }
    let s = spec.num_states();
    if s > MAX_STATES || n_max > MAX_PAST || future_len > MAX_FUTURE || k == 0 || future_len == 0 {
        return Err(Error::InvalidSpec(format!(
            "brute force needs S <= {MAX_STATES}, n_max <= {MAX_PAST}, 1 <= future_len <= {MAX_FUTURE}, k >= 1"
        )));
    }
    let future_atoms = s.pow(future_len as u32);
    let events: u128 = 1u128 << future_atoms;
    let required: u128 = (0..=n_max)
        .map(|n| (s as u128).pow(n as u32 + 1) * events)
        .sum();
    if required > budget {
        return Err(Error::TooLarge { required, budget });
    }

    let p = &spec.markov.transition;
    let pi0 = &spec.markov.initial;
    let mut best = 0.0f64;
    for n in 0..=n_max {
        let len = n + k + future_len;
        let past_atoms = s.pow(n as u32 + 1);
        let mut joint = vec![vec![0.0; future_atoms]; past_atoms];
        let mut path = vec![0usize; len];
        for code in 0..s.pow(len as u32) {
            let mut c = code;
            for x in path.iter_mut() {
                *x = c % s;
                c /= s;
            }
            let mut prob = pi0[path[0]];
            for t in 1..len {
                prob *= p[path[t - 1]][path[t]];
            }
            if prob == 0.0 {
                continue;
            }
            let past = encode(&path[..=n], s);
            let future = encode(&path[n + k..], s);
            joint[past][future] += prob;
        }
        let future_law: Vec<f64> = (0..future_atoms)
            .map(|f| joint.iter().map(|row| row[f]).sum())
            .collect();

        let mut gap = vec![0.0f64; future_atoms];
        let mut subset = vec![0.0f64; 1 << future_atoms];
        for row in &joint {
            let pb: f64 = row.iter().sum();
            if pb <= 0.0 {
                continue;
            }
            for f in 0..future_atoms {
                gap[f] = row[f] / pb - future_law[f];
            }
            // subset[A] = Σ_{f ∈ A} gap[f] = P[A | B] - P[A]
            for mask in 1usize..(1 << future_atoms) {
                let low = mask.trailing_zeros() as usize;
                subset[mask] = subset[mask & (mask - 1)] + gap[low];
                best = best.max(subset[mask].abs());
            }
        }
    }
    Ok(best.min(1.0))
}

fn encode(states: &[usize], s: usize) -> usize {
    states.iter().rev().fold(0, |acc, &x| acc * s + x)
}

#[cfg(test)]
mod tests {
    use super::super::mixing::phi_coefficient_window;
    use super::super::spec::presets::*;
    use super::super::spec::MarkovSpec;
    use super::*;

    #[test]
    fn iid_kernel_is_independent() {
        let spec = with_point_emissions(MarkovSpec::iid(&[0.2, 0.8], &[0.5, 0.5]));
        let v = brute_force_phi(&spec, 1, 2, 2, DEFAULT_BUDGET).unwrap();
        assert!(v < 1e-15);
    }

    #[test]
    fn symmetric_chain_matches_closed_form() {
        let spec = with_point_emissions(symmetric_chain(0.9, [0.5, 0.5]));
        let v = brute_force_phi(&spec, 1, 2, 1, DEFAULT_BUDGET).unwrap();
        assert!((v - 0.4).abs() < 1e-12);
        assert!((v - phi_coefficient_window(&spec, 1, 2)).abs() < 1e-12);
    }

    #[test]
    fn frozen_chain_pins_the_path() {
        let spec = with_point_emissions(symmetric_chain(1.0, [0.5, 0.5]));
        let v = brute_force_phi(&spec, 1, 2, 2, DEFAULT_BUDGET).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn budget_and_size_limits() {
        let spec = with_point_emissions(MarkovSpec::iid(
            &[0.2, 0.3, 0.5],
            &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        ));
        assert!(matches!(
            brute_force_phi(&spec, 1, 4, 3, DEFAULT_BUDGET),
            Err(Error::TooLarge { .. })
        ));
        assert!(brute_force_phi(&spec, 1, 5, 1, DEFAULT_BUDGET).is_err());
        assert!(matches!(
            brute_force_phi(&drifted_three_state(), 1, 1, 1, DEFAULT_BUDGET),
            Err(Error::NotDeterministic)
        ));
    }
}
