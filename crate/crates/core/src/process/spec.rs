use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Absolute tolerance for row-stochastic and normalization checks.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Finite hidden Markov chain: kernel `transition` and initial law `initial`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovSpec {
    pub num_states: usize,
    pub transition: Vec<Vec<f64>>,
    pub initial: Vec<f64>,
}

impl MarkovSpec {
    pub fn validate(&self) -> Result<()> {
        let s = self.num_states;
        if s == 0 {
            return Err(Error::InvalidSpec("num_states must be positive".into()));
        }
        if self.transition.len() != s {
            return Err(Error::InvalidSpec(format!(
                "transition has {} rows, expected {s}",
                self.transition.len()
            )));
        }
        for (i, row) in self.transition.iter().enumerate() {
            if row.len() != s {
                return Err(Error::InvalidSpec(format!(
                    "transition row {i} has {} entries, expected {s}",
                    row.len()
                )));
            }
            check_probability_vector(row, &format!("transition row {i}"))?;
        }
        if self.initial.len() != s {
            return Err(Error::InvalidSpec(format!(
                "initial has {} entries, expected {s}",
                self.initial.len()
            )));
        }
        check_probability_vector(&self.initial, "initial")
    }

    /// Chain whose rows are all `row`; the sequence of states is then iid.
    pub fn iid(row: &[f64], initial: &[f64]) -> Self {
        Self {
            num_states: row.len(),
            transition: vec![row.to_vec(); row.len()],
            initial: initial.to_vec(),
        }
    }
}

pub(crate) fn check_probability_vector(p: &[f64], what: &str) -> Result<()> {
    if p.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::InvalidSpec(format!(
            "{what} has entries outside [0, 1]"
        )));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::InvalidSpec(format!("{what} sums to {total}, not 1")));
    }
    Ok(())
}

/// Polynomially decaying perturbation of the emission law.
///
/// At time `t >= 1` the emission of state `s` mixes the limit emission with
/// `perturbation[s]` at weight `amplitude * t^(-exponent)`. For discrete
/// emissions the perturbation rows are probability tables over the alphabet;
/// for Gaussian emissions they are mean vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSchedule {
    pub amplitude: f64,
    #[serde(default = "DriftSchedule::default_exponent")]
    pub exponent: f64,
    pub perturbation: Vec<Vec<f64>>,
}

impl DriftSchedule {
    fn default_exponent() -> f64 {
        0.5
    }

    pub fn weight(&self, t: usize) -> f64 {
        debug_assert!(t >= 1);
        self.amplitude * (t as f64).powf(-self.exponent)
    }

    fn is_active(&self) -> bool {
        self.amplitude > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum EmissionSpec {
    Discrete {
        /// Distinct points in input space.
        alphabet: Vec<Vec<f64>>,
        /// Limit table: `table[s][a]` is the probability of emitting `alphabet[a]` from state `s`.
        table: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        drift: Option<DriftSchedule>,
    },
    Gaussian {
        /// Limit mean per state.
        means: Vec<Vec<f64>>,
        sigma: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        drift: Option<DriftSchedule>,
    },
}

impl EmissionSpec {
    pub fn drift(&self) -> Option<&DriftSchedule> {
        match self {
            EmissionSpec::Discrete { drift, .. } | EmissionSpec::Gaussian { drift, .. } => {
                drift.as_ref()
            }
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, EmissionSpec::Discrete { .. })
    }

    fn drift_weight(&self, t: Option<usize>) -> f64 {
        match (self.drift(), t) {
            (Some(d), Some(t)) => d.weight(t),
            _ => 0.0,
        }
    }

    /// Emission table at time `t` (`None` = the limit). Discrete only.
    pub fn discrete_table_at(&self, t: Option<usize>) -> Option<Vec<Vec<f64>>> {
        let EmissionSpec::Discrete { table, drift, .. } = self else {
            return None;
        };
        let w = self.drift_weight(t);
        Some(match drift {
            Some(d) if w > 0.0 => mix_rows(table, &d.perturbation, w),
            _ => table.clone(),
        })
    }

    /// Per-state mean vectors at time `t` (`None` = the limit). Gaussian only.
    pub fn gaussian_means_at(&self, t: Option<usize>) -> Option<Vec<Vec<f64>>> {
        let EmissionSpec::Gaussian { means, drift, .. } = self else {
            return None;
        };
        let w = self.drift_weight(t);
        Some(match drift {
            Some(d) if w > 0.0 => mix_rows(means, &d.perturbation, w),
            _ => means.clone(),
        })
    }
}

fn mix_rows(base: &[Vec<f64>], pert: &[Vec<f64>], w: f64) -> Vec<Vec<f64>> {
    base.iter()
        .zip(pert)
        .map(|(b, p)| {
            b.iter()
                .zip(p)
                .map(|(x, y)| (1.0 - w) * x + w * y)
                .collect()
        })
        .collect()
}

/// A non-stationary labelled sequence: hidden chain, emissions, and labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub markov: MarkovSpec,
    pub emission: EmissionSpec,
    /// 1-based class label of each hidden state.
    pub label_map: Vec<usize>,
    pub num_classes: usize,
    pub input_dim: usize,
}

impl ProcessSpec {
    pub fn validate(&self) -> Result<()> {
        self.markov.validate()?;
        let s = self.markov.num_states;
        let d = self.input_dim;
        if self.num_classes == 0 {
            return Err(Error::InvalidSpec("num_classes must be positive".into()));
        }
        if self.label_map.len() != s {
            return Err(Error::InvalidSpec(format!(
                "label_map has {} entries, expected {s}",
                self.label_map.len()
            )));
        }
        if let Some(&bad) = self
            .label_map
            .iter()
            .find(|&&y| y == 0 || y > self.num_classes)
        {
            return Err(Error::BadLabel {
                label: bad,
                num_classes: self.num_classes,
            });
        }
        if let Some(drift) = self.emission.drift() {
            if !(0.0..=1.0).contains(&drift.amplitude) {
                return Err(Error::InvalidSpec(
                    "drift amplitude must lie in [0, 1] so the weight stays in [0, 1]".into(),
                ));
            }
            if !(drift.exponent > 0.0 && drift.exponent.is_finite()) {
                return Err(Error::InvalidSpec("drift exponent must be positive".into()));
            }
            if drift.perturbation.len() != s {
                return Err(Error::InvalidSpec(format!(
                    "drift perturbation has {} rows, expected {s}",
                    drift.perturbation.len()
                )));
            }
        }
        match &self.emission {
            EmissionSpec::Discrete {
                alphabet,
                table,
                drift,
            } => {
                if alphabet.is_empty() {
                    return Err(Error::InvalidSpec("alphabet is empty".into()));
                }
                for (a, point) in alphabet.iter().enumerate() {
                    if point.len() != d || point.iter().any(|v| !v.is_finite()) {
                        return Err(Error::InvalidSpec(format!(
                            "alphabet point {a} must be a finite {d}-vector"
                        )));
                    }
                    if alphabet[..a].contains(point) {
                        return Err(Error::InvalidSpec(format!(
                            "alphabet point {a} duplicates an earlier point"
                        )));
                    }
                }
                check_table(table, s, alphabet.len(), "emission table")?;
                if let Some(drift) = drift {
                    check_table(&drift.perturbation, s, alphabet.len(), "drift perturbation")?;
                }
            }
            EmissionSpec::Gaussian {
                means,
                sigma,
                drift,
            } => {
                if !(*sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::InvalidSpec("sigma must be positive".into()));
                }
                let rows = means
                    .iter()
                    .chain(drift.iter().flat_map(|d| d.perturbation.iter()));
                if means.len() != s {
                    return Err(Error::InvalidSpec(format!(
                        "means has {} rows, expected {s}",
                        means.len()
                    )));
                }
                for m in rows {
                    if m.len() != d || m.iter().any(|v| !v.is_finite()) {
                        return Err(Error::InvalidSpec(format!(
                            "every mean must be a finite {d}-vector"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.markov.num_states
    }

    /// Every emission law is a point mass at every time step.
    pub fn is_deterministic(&self) -> bool {
        let EmissionSpec::Discrete { table, drift, .. } = &self.emission else {
            return false;
        };
        table.iter().enumerate().all(|(s, row)| {
            let Some(a) = point_mass_index(row) else {
                return false;
            };
            match drift {
                Some(d) if d.is_active() => point_mass_index(&d.perturbation[s]) == Some(a),
                _ => true,
            }
        })
    }

    /// Deterministic emissions with distinct `(point, label)` per state, so the
    /// observed sequence determines the hidden one.
    pub fn is_injective(&self) -> bool {
        if !self.is_deterministic() {
            return false;
        }
        let EmissionSpec::Discrete { table, .. } = &self.emission else {
            return false;
        };
        let keys: Vec<(usize, usize)> = table
            .iter()
            .zip(&self.label_map)
            .filter_map(|(row, &y)| point_mass_index(row).map(|a| (a, y)))
            .collect();
        keys.iter().enumerate().all(|(i, k)| !keys[..i].contains(k))
    }

    pub fn labels_injective(&self) -> bool {
        let l = &self.label_map;
        l.iter().enumerate().all(|(i, y)| !l[..i].contains(y))
    }

    /// Emission law changes with time.
    pub fn has_drift(&self) -> bool {
        self.emission.drift().is_some_and(DriftSchedule::is_active)
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("spec serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

fn point_mass_index(row: &[f64]) -> Option<usize> {
    let mut hit = None;
    for (a, &p) in row.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        if (p - 1.0).abs() > STOCHASTIC_TOL || hit.is_some() {
            return None;
        }
        hit = Some(a);
    }
    hit
}

fn check_table(table: &[Vec<f64>], rows: usize, cols: usize, what: &str) -> Result<()> {
    if table.len() != rows {
        return Err(Error::InvalidSpec(format!(
            "{what} has {} rows, expected {rows}",
            table.len()
        )));
    }
    for (s, row) in table.iter().enumerate() {
        if row.len() != cols {
            return Err(Error::InvalidSpec(format!(
                "{what} row {s} has {} entries, expected {cols}",
                row.len()
            )));
        }
        check_probability_vector(row, &format!("{what} row {s}"))?;
    }
    Ok(())
}

/// Ready-made specs used by the CLI defaults, tests, and acceptance runs.
pub mod presets {
    use super::*;

    /// 2-state chain staying put with probability `stay`.
    pub fn symmetric_chain(stay: f64, initial: [f64; 2]) -> MarkovSpec {
        MarkovSpec {
            num_states: 2,
            transition: vec![vec![stay, 1.0 - stay], vec![1.0 - stay, stay]],
            initial: initial.to_vec(),
        }
    }

    /// Each state emits its own 1-d point and its own label.
    pub fn with_point_emissions(markov: MarkovSpec) -> ProcessSpec {
        let s = markov.num_states;
        let alphabet = (0..s).map(|i| vec![i as f64]).collect();
        let table = (0..s)
            .map(|i| (0..s).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        ProcessSpec {
            markov,
            emission: EmissionSpec::Discrete {
                alphabet,
                table,
                drift: None,
            },
            label_map: (1..=s).collect(),
            num_classes: s,
            input_dim: 1,
        }
    }

    /// Default certification process: sticky 2-state chain started in state 1,
    /// Gaussian class clouds in 2-d whose means drift in from the origin at
    /// rate `t^(-1/2)`.
    pub fn drifted_two_state() -> ProcessSpec {
        ProcessSpec {
            markov: MarkovSpec {
                num_states: 2,
                transition: vec![vec![0.9, 0.1], vec![0.1, 0.9]],
                initial: vec![1.0, 0.0],
            },
            emission: EmissionSpec::Gaussian {
                means: vec![vec![1.0, 1.0], vec![-1.0, -1.0]],
                sigma: 0.75,
                drift: Some(DriftSchedule {
                    amplitude: 0.5,
                    exponent: 0.5,
                    perturbation: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
                }),
            },
            label_map: vec![1, 2],
            num_classes: 2,
            input_dim: 2,
        }
    }

    /// 3-state chain with one-hot 3-d point emissions and a drifting table.
    pub fn drifted_three_state() -> ProcessSpec {
        let markov = MarkovSpec {
            num_states: 3,
            transition: vec![
                vec![0.7, 0.2, 0.1],
                vec![0.1, 0.8, 0.1],
                vec![0.25, 0.25, 0.5],
            ],
            initial: vec![0.0, 0.0, 1.0],
        };
        let alphabet = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        ProcessSpec {
            markov,
            emission: EmissionSpec::Discrete {
                alphabet,
                table: vec![
                    vec![0.8, 0.1, 0.1],
                    vec![0.1, 0.8, 0.1],
                    vec![0.1, 0.1, 0.8],
                ],
                drift: Some(DriftSchedule {
                    amplitude: 0.6,
                    exponent: 0.5,
                    perturbation: vec![
                        vec![0.0, 0.0, 1.0],
                        vec![1.0, 0.0, 0.0],
                        vec![0.0, 1.0, 0.0],
                    ],
                }),
            },
            label_map: vec![1, 2, 2],
            num_classes: 2,
            input_dim: 3,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::presets::*;
    use super::*;

    #[test]
    fn presets_validate() {
        drifted_two_state().validate().unwrap();
        drifted_three_state().validate().unwrap();
        with_point_emissions(symmetric_chain(0.9, [0.5, 0.5]))
            .validate()
            .unwrap();
    }

    #[test]
    fn non_stochastic_rows_rejected() {
        let mut m = symmetric_chain(0.9, [0.5, 0.5]);
        m.transition[0][1] = 0.1 + 1e-9;
        assert!(m.validate().is_err());
        let mut m = symmetric_chain(0.9, [0.5, 0.5]);
        m.initial = vec![0.6, 0.6];
        assert!(m.validate().is_err());
    }

    #[test]
    fn labels_must_be_in_range() {
        let mut spec = with_point_emissions(symmetric_chain(0.9, [0.5, 0.5]));
        spec.label_map = vec![1, 3];
        assert!(matches!(
            spec.validate(),
            Err(Error::BadLabel { label: 3, .. })
        ));
    }

    #[test]
    fn drift_amplitude_bounded() {
        let mut spec = drifted_two_state();
        if let EmissionSpec::Gaussian { drift: Some(d), .. } = &mut spec.emission {
            d.amplitude = 1.5;
        }
        assert!(spec.validate().is_err());
    }

    #[test]
    fn determinism_flags() {
        let spec = with_point_emissions(symmetric_chain(0.9, [0.5, 0.5]));
        assert!(spec.is_deterministic());
        assert!(spec.is_injective());
        assert!(!drifted_three_state().is_deterministic());
        assert!(!drifted_two_state().is_deterministic());
    }

    #[test]
    fn drifted_table_mixes_towards_perturbation() {
        let spec = drifted_three_state();
        let t1 = spec.emission.discrete_table_at(Some(1)).unwrap();
        // weight 0.6 at t = 1
        assert!((t1[0][0] - 0.4 * 0.8).abs() < 1e-15);
        assert!((t1[0][2] - (0.4 * 0.1 + 0.6)).abs() < 1e-15);
        let limit = spec.emission.discrete_table_at(None).unwrap();
        assert_eq!(limit[0], vec![0.8, 0.1, 0.1]);
    }

    #[test]
    fn json_round_trip_and_digest() {
        let spec = drifted_two_state();
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"mode\":\"gaussian\""));
        let back: ProcessSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        assert_eq!(back.digest(), spec.digest());
        assert_ne!(drifted_three_state().digest(), spec.digest());
    }
}
