//! Sample, train, certify, and check against fresh target draws.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_delta, network_certificate, BoundReport};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::network::{population_estimate, train_sgd, Architecture, NetworkParams, TrainConfig};
use crate::process::{mixing_profile, sample_sequence, sample_target, ProcessSpec};
use crate::rng::{derive_seed, tags};

/// Confidence level of the Hoeffding interval around the population estimate.
pub const DEFAULT_DELTA_EST: f64 = 0.01;

fn default_delta_est() -> f64 {
    DEFAULT_DELTA_EST
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationConfig {
    pub process: ProcessSpec,
    pub arch: Architecture,
    pub train: TrainConfig,
    pub n_train: usize,
    pub m_target: usize,
    pub gamma_list: Vec<f64>,
    pub delta: f64,
    #[serde(default = "default_delta_est")]
    pub delta_est: f64,
    pub seeds: Vec<u64>,
}

impl CertificationConfig {
    pub fn validate(&self) -> Result<()> {
        self.process.validate()?;
        self.arch.validate()?;
        self.train.validate()?;
        check_delta(self.delta)?;
        check_delta(self.delta_est)?;
        if self.n_train < 2 || self.m_target == 0 {
            return Err(Error::InvalidSpec(
                "need n_train >= 2 and m_target >= 1".into(),
            ));
        }
        if self.gamma_list.is_empty() || self.seeds.is_empty() {
            return Err(Error::InvalidSpec(
                "gamma_list and seeds must be nonempty".into(),
            ));
        }
        if let Some(&g) = self.gamma_list.iter().find(|g| !(**g > 0.0)) {
            return Err(Error::NonpositiveGamma(g));
        }
        if self.arch.dims[0] != self.process.input_dim
            || *self.arch.dims.last().expect("validated") != self.process.num_classes
        {
            return Err(Error::DimensionMismatch {
                expected: self.process.input_dim,
                actual: self.arch.dims[0],
            });
        }
        Ok(())
    }

    /// SGD seed for one experiment seed.
    pub fn train_seed(&self, seed: u64) -> u64 {
        derive_seed(seed ^ self.train.seed, tags::TRAIN)
    }

    pub fn target_seed(&self, seed: u64) -> u64 {
        derive_seed(seed, tags::TARGET)
    }

    /// The training sequence for one experiment seed and the network fit to it.
    pub fn sample_and_train(&self, seed: u64) -> Result<(LabeledDataset, NetworkParams)> {
        let data = sample_sequence(&self.process, self.n_train, seed)?;
        let train = TrainConfig {
            seed: self.train_seed(seed),
            ..self.train.clone()
        };
        let params = train_sgd(&data, &self.arch, &train)?.params;
        Ok((data, params))
    }
}

/// One report per `(seed, γ)`, ordered by seed then γ as listed.
pub fn run_certification(config: &CertificationConfig) -> Result<Vec<BoundReport>> {
    config.validate()?;
    let profile = mixing_profile(&config.process, config.n_train)?;
    let per_seed: Vec<Result<Vec<BoundReport>>> = config
        .seeds
        .par_iter()
        .map(|&seed| {
            let (data, params) = config.sample_and_train(seed)?;
            let target = sample_target(&config.process, config.m_target, config.target_seed(seed))?;
            config
                .gamma_list
                .iter()
                .map(|&gamma| {
                    let mut report =
                        network_certificate(&data, &params, gamma, &profile, config.delta)?;
                    let est = population_estimate(&params, &target, gamma, config.delta_est)?;
                    report.attach_population(&est);
                    Ok(report)
                })
                .collect()
        })
        .collect();
    let mut reports = Vec::with_capacity(config.seeds.len() * config.gamma_list.len());
    for r in per_seed {
        reports.extend(r?);
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Activation;
    use crate::process::presets::drifted_two_state;

    fn small_config(epochs: usize) -> CertificationConfig {
        CertificationConfig {
            process: drifted_two_state(),
            arch: Architecture {
                dims: vec![2, 8, 2],
                activations: vec![Activation::Relu, Activation::Identity],
            },
            train: TrainConfig {
                learning_rate: 0.05,
                epochs,
                batch_size: 16,
                seed: 0,
                init_scale: None,
            },
            n_train: 200,
            m_target: 2000,
            gamma_list: vec![0.5, 1.0],
            delta: 0.05,
            delta_est: DEFAULT_DELTA_EST,
            seeds: vec![1, 2],
        }
    }

    #[test]
    fn ordering_and_gamma_scaling() {
        let reports = run_certification(&small_config(3)).unwrap();
        assert_eq!(reports.len(), 4);
        assert_eq!(reports[0].seed, Some(1));
        assert_eq!(reports[3].seed, Some(2));
        for pair in reports.chunks(2) {
            let (a, b) = (&pair[0], &pair[1]);
            assert_eq!(a.gamma, Some(0.5));
            let ratio = a.complexity_term.unwrap() / b.complexity_term.unwrap();
            assert!((ratio - 2.0).abs() < 1e-12);
            assert!(a.bound_holds.unwrap());
        }
    }

    #[test]
    fn deterministic() {
        let a = run_certification(&small_config(2)).unwrap();
        let b = run_certification(&small_config(2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_config() {
        let mut c = small_config(1);
        c.gamma_list = vec![0.0];
        assert!(run_certification(&c).is_err());
        let mut c = small_config(1);
        c.arch.dims[0] = 3;
        assert!(run_certification(&c).is_err());
    }
}
