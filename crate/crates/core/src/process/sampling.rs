use rand::Rng;
use rand_distr::StandardNormal;

use super::mixing::stationary_distribution;
use super::spec::{EmissionSpec, ProcessSpec};
use crate::dataset::{DatasetKind, LabeledDataset};
use crate::error::Result;
use crate::linalg::Matrix;
use crate::rng::stream_rng;

fn categorical<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // u landed in the rounding gap above the cumulative sum
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Draws an emission for `state` at time `t` (`None` = the limit law).
fn emit<R: Rng>(
    spec: &ProcessSpec,
    state: usize,
    t: Option<usize>,
    rng: &mut R,
    out: &mut Vec<f64>,
) {
    let (w, pert) = match (spec.emission.drift(), t) {
        (Some(d), Some(t)) if d.amplitude > 0.0 => (d.weight(t), Some(&d.perturbation[state])),
        _ => (0.0, None),
    };
    match &spec.emission {
        EmissionSpec::Discrete {
            alphabet, table, ..
        } => {
            let base = &table[state];
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = None;
            let mut last_positive = 0;
            for a in 0..base.len() {
                let p = match pert {
                    Some(q) => (1.0 - w) * base[a] + w * q[a],
                    None => base[a],
                };
                if p > 0.0 {
                    last_positive = a;
                }
                acc += p;
                if pick.is_none() && u < acc {
                    pick = Some(a);
                }
            }
            out.extend_from_slice(&alphabet[pick.unwrap_or(last_positive)]);
        }
        EmissionSpec::Gaussian { means, sigma, .. } => {
            for (j, &m) in means[state].iter().enumerate() {
                let mean = match pert {
                    Some(q) => (1.0 - w) * m + w * q[j],
                    None => m,
                };
                let z: f64 = rng.sample(StandardNormal);
                out.push(mean + sigma * z);
            }
        }
    }
}

/// Runs the process for `n` steps on `rng`, calling `visit(t, x_t, y_t)`.
/// The spec must already be validated.
pub(crate) fn simulate<R: Rng>(
    spec: &ProcessSpec,
    n: usize,
    rng: &mut R,
    mut visit: impl FnMut(usize, &[f64], usize),
) {
    let mut buf = Vec::with_capacity(spec.input_dim);
    let mut state = categorical(rng, &spec.markov.initial);
    for t in 1..=n {
        state = categorical(rng, &spec.markov.transition[state]);
        buf.clear();
        emit(spec, state, Some(t), rng, &mut buf);
        visit(t, &buf, spec.label_map[state]);
    }
}

/// One run `(X_1, Y_1) .. (X_n, Y_n)` of the process, hidden chain started
/// from the initial law at time 0.
pub fn sample_sequence(spec: &ProcessSpec, n: usize, seed: u64) -> Result<LabeledDataset> {
    sample_sequence_stream(spec, n, seed, 0)
}

/// [`sample_sequence`] on an explicit substream of `seed`.
pub fn sample_sequence_stream(
    spec: &ProcessSpec,
    n: usize,
    seed: u64,
    stream: u64,
) -> Result<LabeledDataset> {
    spec.validate()?;
    let mut rng = stream_rng(seed, stream);
    let mut data = Vec::with_capacity(n * spec.input_dim);
    let mut labels = Vec::with_capacity(n);
    simulate(spec, n, &mut rng, |_, x, y| {
        data.extend_from_slice(x);
        labels.push(y);
    });
    let inputs = Matrix::from_row_major(n, spec.input_dim, data)?;
    let mut ds = LabeledDataset::new(
        inputs,
        labels,
        spec.num_classes,
        seed,
        DatasetKind::Sequence,
    )?;
    ds.spec_digest = Some(spec.digest());
    Ok(ds)
}

/// `m` independent draws from the target law: stationary hidden state and
/// limit emissions.
pub fn sample_target(spec: &ProcessSpec, m: usize, seed: u64) -> Result<LabeledDataset> {
    spec.validate()?;
    let pi = stationary_distribution(&spec.markov)?;
    let mut rng = stream_rng(seed, 0);
    let mut data = Vec::with_capacity(m * spec.input_dim);
    let mut labels = Vec::with_capacity(m);
    for _ in 0..m {
        let state = categorical(&mut rng, &pi);
        emit(spec, state, None, &mut rng, &mut data);
        labels.push(spec.label_map[state]);
    }
    let inputs = Matrix::from_row_major(m, spec.input_dim, data)?;
    let mut ds = LabeledDataset::new(
        inputs,
        labels,
        spec.num_classes,
        seed,
        DatasetKind::TargetIid,
    )?;
    ds.spec_digest = Some(spec.digest());
    Ok(ds)
}
