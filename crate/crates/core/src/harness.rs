//! Experiment configuration, persistence, and the command implementations
//! behind the CLI.
//!
//! Every output file is listed with its SHA-256 in `MANIFEST.sha256` in the
//! output directory. No output depends on wall-clock time or thread count.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bounds::{
    run_certification, validate_marginal_shift, validate_mcdiarmid, validate_ramp_dominance,
    validate_symmetrization, BoundReport, CertificationConfig, MarginalShiftReport,
    McDiarmidConfig, RampDominanceReport, SymmetrizationReport, TailReport, DEFAULT_DELTA_EST,
    DEFAULT_EPSILON_GRID,
};
use crate::error::{Error, Result};
use crate::network::{Activation, Architecture, TrainConfig};
use crate::process::presets::{
    drifted_three_state, drifted_two_state, symmetric_chain, with_point_emissions,
};
use crate::process::{sample_sequence, sample_target, EmissionSpec, MarkovSpec, ProcessSpec};
use crate::rademacher::{
    empirical_rademacher_exact, empirical_rademacher_mc, FunctionClass, RademacherEstimate,
    MAX_EXACT_POINTS,
};

pub const MANIFEST_FILE: &str = "MANIFEST.sha256";
pub const SUMMARY_FILE: &str = "summary.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Validator {
    /// Tail frequencies of the sample mean against the mixing McDiarmid bound.
    Tail,
    /// Exact expectation gaps against `μ_i` (discrete processes only).
    MarginalShift,
    /// Uniform deviation against twice the Rademacher complexity.
    Symmetrization,
    /// 0-1 loss never exceeds the ramp loss of the negated margin.
    RampDominance,
}

impl Validator {
    pub const ALL: [Validator; 4] = [
        Validator::Tail,
        Validator::MarginalShift,
        Validator::Symmetrization,
        Validator::RampDominance,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidationSettings {
    /// Processes to validate on; empty means [`standard_test_matrix`].
    pub processes: Vec<ProcessSpec>,
    pub seed: u64,
    pub tail_n: usize,
    pub tail_trials: usize,
    pub epsilon_grid: Vec<f64>,
    pub delta_inf_override: Option<f64>,
    pub shift_n: usize,
    pub symmetrization_n: usize,
    pub symmetrization_trials: usize,
    pub ramp_samples: usize,
}

impl Default for ValidationSettings {
    fn default() -> Self {
        Self {
            processes: Vec::new(),
            seed: 0,
            tail_n: 50,
            tail_trials: 10_000,
            epsilon_grid: DEFAULT_EPSILON_GRID.to_vec(),
            delta_inf_override: None,
            shift_n: 30,
            symmetrization_n: 8,
            symmetrization_trials: 1_000,
            ramp_samples: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RademacherSettings {
    pub n: usize,
    pub mc_trials: usize,
    pub seed: u64,
}

impl Default for RademacherSettings {
    fn default() -> Self {
        Self {
            n: 10,
            mc_trials: 4_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
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
    pub output_dir: PathBuf,
    #[serde(default)]
    pub validators: Vec<Validator>,
    #[serde(default)]
    pub validation: ValidationSettings,
    #[serde(default)]
    pub rademacher: RademacherSettings,
}

fn default_delta_est() -> f64 {
    DEFAULT_DELTA_EST
}

impl ExperimentConfig {
    /// The shipped default: drifted two-state process, one hidden layer.
    pub fn default_experiment() -> Self {
        Self {
            process: drifted_two_state(),
            arch: Architecture {
                dims: vec![2, 16, 2],
                activations: vec![Activation::Relu, Activation::Identity],
            },
            train: TrainConfig {
                learning_rate: 0.05,
                epochs: 10,
                batch_size: 32,
                seed: 0,
                init_scale: None,
            },
            n_train: 2000,
            m_target: 20_000,
            gamma_list: vec![0.5, 1.0],
            delta: 0.05,
            delta_est: DEFAULT_DELTA_EST,
            seeds: (1..=20).collect(),
            output_dir: PathBuf::from("out"),
            validators: Validator::ALL.to_vec(),
            validation: ValidationSettings::default(),
            rademacher: RademacherSettings::default(),
        }
    }

    pub fn certification(&self) -> CertificationConfig {
        CertificationConfig {
            process: self.process.clone(),
            arch: self.arch.clone(),
            train: self.train.clone(),
            n_train: self.n_train,
            m_target: self.m_target,
            gamma_list: self.gamma_list.clone(),
            delta: self.delta,
            delta_est: self.delta_est,
            seeds: self.seeds.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.certification().validate()?;
        let v = &self.validation;
        if v.tail_n == 0 || v.shift_n == 0 || v.symmetrization_n == 0 || v.ramp_samples == 0 {
            return Err(Error::InvalidSpec(
                "validation counts must be positive".into(),
            ));
        }
        if v.epsilon_grid.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::InvalidSpec(
                "epsilon grid entries must be positive".into(),
            ));
        }
        v.processes.iter().try_for_each(ProcessSpec::validate)?;
        if self.rademacher.n == 0 {
            return Err(Error::InvalidSpec("rademacher.n must be positive".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}

/// Iid, a sticky two-state chain started off-equilibrium, and a drifting
/// three-state chain.
pub fn standard_test_matrix() -> Vec<ProcessSpec> {
    vec![
        with_point_emissions(MarkovSpec::iid(&[0.5, 0.5], &[0.5, 0.5])),
        with_point_emissions(symmetric_chain(0.9, [1.0, 0.0])),
        drifted_three_state(),
    ]
}

/// Small classes of `[0, 1]`-valued functions used by the validators and
/// the `rademacher` command. Each contains the constant zero function.
pub fn shipped_classes(input_dim: usize, num_classes: usize) -> Vec<FunctionClass> {
    let zero = |_: &[f64], _: usize| 0.0;
    let mut labels = FunctionClass::new("label_indicators").with(zero);
    for k in 1..=num_classes {
        labels = labels.with(move |_, y| f64::from(u8::from(y == k)));
    }
    let mut thresholds = FunctionClass::new("coordinate_thresholds").with(zero);
    for j in 0..input_dim {
        for t in [-0.5, 0.0, 0.5] {
            thresholds = thresholds.with(move |x, _| f64::from(u8::from(x[j] > t)));
        }
    }
    let mut clipped = FunctionClass::new("clipped_linear").with(zero);
    for j in 0..input_dim {
        for sign in [-1.0, 1.0] {
            clipped = clipped.with(move |x, _| (0.5 + 0.5 * sign * x[j]).clamp(0.0, 1.0));
        }
    }
    vec![labels, thresholds, clipped]
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Files written by one command, keyed by name relative to the output
/// directory, with their SHA-256.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommandOutput {
    pub files: BTreeMap<String, String>,
}

impl CommandOutput {
    fn write(&mut self, dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
        std::fs::write(dir.join(name), bytes)?;
        self.files.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, dir: &Path, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(dir, name, text.as_bytes())
    }

    /// Writes `MANIFEST.sha256` listing every file written so far.
    fn finish(mut self, dir: &Path) -> Result<Self> {
        let manifest: String = self
            .files
            .iter()
            .map(|(name, digest)| format!("{digest}  {name}\n"))
            .collect();
        self.write(dir, MANIFEST_FILE, manifest.as_bytes())?;
        Ok(self)
    }
}

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if jobs == 0 {
        return Err(Error::InvalidSpec("--jobs must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidSpec(format!("thread pool: {e}")))?;
    pool.install(f)
}

fn prepare(config: &ExperimentConfig, out: &Path) -> Result<()> {
    config.validate()?;
    std::fs::create_dir_all(out)?;
    Ok(())
}

fn gamma_tag(gamma: f64) -> String {
    format!("{gamma}")
}

/// Writes the training sequence and target sample for every seed.
pub fn cmd_generate(config: &ExperimentConfig, out: &Path, jobs: usize) -> Result<CommandOutput> {
    prepare(config, out)?;
    let files = with_pool(jobs, || {
        config
            .seeds
            .par_iter()
            .map(|&seed| {
                let train = sample_sequence(&config.process, config.n_train, seed)?;
                let cert = config.certification();
                let target =
                    sample_target(&config.process, config.m_target, cert.target_seed(seed))?;
                Ok(vec![
                    (format!("sequence_seed{seed}.txt"), train.to_text()),
                    (format!("target_seed{seed}.txt"), target.to_text()),
                ])
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut output = CommandOutput::default();
    for (name, text) in files.into_iter().flatten() {
        output.write(out, &name, text.as_bytes())?;
    }
    output.finish(out)
}

/// Trains one network per seed on its sequence.
pub fn cmd_train(config: &ExperimentConfig, out: &Path, jobs: usize) -> Result<CommandOutput> {
    prepare(config, out)?;
    let cert = config.certification();
    let nets = with_pool(jobs, || {
        config
            .seeds
            .par_iter()
            .map(|&seed| Ok((seed, cert.sample_and_train(seed)?.1)))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut output = CommandOutput::default();
    for (seed, params) in nets {
        output.write(
            out,
            &format!("network_seed{seed}.txt"),
            params.to_text().as_bytes(),
        )?;
    }
    output.finish(out)
}

#[derive(Debug, Serialize)]
struct SummaryRow {
    seed: u64,
    gamma: f64,
    n: usize,
    delta: f64,
    empirical_ramp_loss: f64,
    empirical_zero_one: f64,
    mu_mean: f64,
    delta_inf: f64,
    concentration_term: f64,
    small_term: f64,
    complexity_term: f64,
    spectral_complexity: f64,
    total_bound: f64,
    population_zero_one_estimate: f64,
    population_halfwidth: f64,
    bound_holds: bool,
}

impl From<&BoundReport> for SummaryRow {
    fn from(r: &BoundReport) -> Self {
        Self {
            seed: r.seed.unwrap_or_default(),
            gamma: r.gamma.unwrap_or(f64::NAN),
            n: r.n,
            delta: r.delta,
            empirical_ramp_loss: r.empirical_ramp_loss,
            empirical_zero_one: r.empirical_zero_one.unwrap_or(f64::NAN),
            mu_mean: r.mu_mean,
            delta_inf: r.delta_inf,
            concentration_term: r.concentration_term,
            small_term: r.small_term.unwrap_or(0.0),
            complexity_term: r.complexity_term.unwrap_or(0.0),
            spectral_complexity: r.spectral_complexity.unwrap_or(f64::NAN),
            total_bound: r.total_bound,
            population_zero_one_estimate: r.population_zero_one_estimate.unwrap_or(f64::NAN),
            population_halfwidth: r.population_halfwidth.unwrap_or(f64::NAN),
            bound_holds: r.bound_holds.unwrap_or(false),
        }
    }
}

pub fn summary_csv(reports: &[BoundReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in reports {
        w.serialize(SummaryRow::from(r))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// One JSON report per seed×γ, then the summary table.
pub fn cmd_certify(
    config: &ExperimentConfig,
    out: &Path,
    jobs: usize,
) -> Result<(Vec<BoundReport>, CommandOutput)> {
    prepare(config, out)?;
    let cert = config.certification();
    let reports = with_pool(jobs, || run_certification(&cert))?;
    let mut output = CommandOutput::default();
    for r in &reports {
        let name = format!(
            "report_seed{}_gamma{}.json",
            r.seed.unwrap_or_default(),
            gamma_tag(r.gamma.unwrap_or_default())
        );
        output.write_json(out, &name, r)?;
    }
    output.write(out, SUMMARY_FILE, summary_csv(&reports)?.as_bytes())?;
    Ok((reports, output.finish(out)?))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationSummary {
    pub tail: Vec<TailReport>,
    pub marginal_shift: Vec<MarginalShiftReport>,
    pub symmetrization: Vec<SymmetrizationReport>,
    pub ramp_dominance: Option<RampDominanceReport>,
}

impl ValidationSummary {
    /// Number of flagged violations across all validators that ran.
    pub fn violations(&self) -> usize {
        self.tail.iter().map(TailReport::violations).sum::<usize>()
            + self.marginal_shift.iter().filter(|r| !r.passed).count()
            + self.symmetrization.iter().filter(|r| r.violation).count()
            + self.ramp_dominance.as_ref().map_or(0, |r| r.failures)
    }
}

fn label_one_indicator(_: &[f64], y: usize) -> f64 {
    f64::from(u8::from(y == 1))
}

/// Indicator of the first alphabet point (any label), and of label 1.
fn shift_tables(spec: &ProcessSpec) -> Vec<Vec<Vec<f64>>> {
    let EmissionSpec::Discrete { alphabet, .. } = &spec.emission else {
        return Vec::new();
    };
    let k = spec.num_classes;
    let first_point = (0..alphabet.len())
        .map(|a| vec![f64::from(u8::from(a == 0)); k])
        .collect();
    let label_one = (0..alphabet.len())
        .map(|_| (1..=k).map(|y| f64::from(u8::from(y == 1))).collect())
        .collect();
    vec![first_point, label_one]
}

pub fn run_validators(config: &ExperimentConfig) -> Result<ValidationSummary> {
    let v = &config.validation;
    let processes = if v.processes.is_empty() {
        standard_test_matrix()
    } else {
        v.processes.clone()
    };
    let mut summary = ValidationSummary::default();
    let mut selected = config.validators.clone();
    selected.sort();
    selected.dedup();
    for validator in selected {
        match validator {
            Validator::Tail => {
                let tail = McDiarmidConfig {
                    epsilon_grid: v.epsilon_grid.clone(),
                    delta_inf_override: v.delta_inf_override,
                };
                for spec in &processes {
                    summary.tail.push(validate_mcdiarmid(
                        spec,
                        &label_one_indicator,
                        v.tail_n,
                        v.tail_trials,
                        v.seed,
                        &tail,
                    )?);
                }
            }
            Validator::MarginalShift => {
                for spec in &processes {
                    for table in shift_tables(spec) {
                        summary
                            .marginal_shift
                            .push(validate_marginal_shift(spec, &table, v.shift_n)?);
                    }
                }
            }
            Validator::Symmetrization => {
                for spec in &processes {
                    for class in shipped_classes(spec.input_dim, spec.num_classes) {
                        summary.symmetrization.push(validate_symmetrization(
                            &class,
                            spec,
                            v.symmetrization_n,
                            v.symmetrization_trials,
                            v.seed,
                        )?);
                    }
                }
            }
            Validator::RampDominance => {
                summary.ramp_dominance = Some(validate_ramp_dominance(v.ramp_samples, v.seed)?);
            }
        }
    }
    Ok(summary)
}

/// Runs the configured validators; an empty list writes nothing.
pub fn cmd_validate(
    config: &ExperimentConfig,
    out: &Path,
    jobs: usize,
) -> Result<(ValidationSummary, CommandOutput)> {
    config.validate()?;
    if config.validators.is_empty() {
        return Ok((ValidationSummary::default(), CommandOutput::default()));
    }
    std::fs::create_dir_all(out)?;
    let summary = with_pool(jobs, || run_validators(config))?;
    let mut output = CommandOutput::default();
    if config.validators.contains(&Validator::Tail) {
        output.write_json(out, "tail.json", &summary.tail)?;
    }
    if config.validators.contains(&Validator::MarginalShift) {
        output.write_json(out, "marginal_shift.json", &summary.marginal_shift)?;
    }
    if config.validators.contains(&Validator::Symmetrization) {
        output.write_json(out, "symmetrization.json", &summary.symmetrization)?;
    }
    if let Some(r) = &summary.ramp_dominance {
        output.write_json(out, "ramp_dominance.json", r)?;
    }
    Ok((summary, output.finish(out)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RademacherRecord {
    pub class_label: String,
    pub members: usize,
    pub seed: u64,
    pub n: usize,
    pub exact: Option<RademacherEstimate>,
    pub monte_carlo: RademacherEstimate,
}

/// Empirical Rademacher complexity of the shipped classes on the first
/// `rademacher.n` points of each seed's sequence.
pub fn cmd_rademacher(
    config: &ExperimentConfig,
    out: &Path,
    jobs: usize,
) -> Result<(Vec<RademacherRecord>, CommandOutput)> {
    prepare(config, out)?;
    let settings = &config.rademacher;
    let records = with_pool(jobs, || {
        let mut records = Vec::new();
        for &seed in &config.seeds {
            let data = sample_sequence(&config.process, settings.n, seed)?;
            for class in shipped_classes(config.process.input_dim, config.process.num_classes) {
                let exact = if settings.n <= MAX_EXACT_POINTS {
                    Some(empirical_rademacher_exact(&class, &data)?)
                } else {
                    None
                };
                let monte_carlo = empirical_rademacher_mc(
                    &class,
                    &data,
                    settings.mc_trials,
                    settings.seed ^ seed,
                )?;
                records.push(RademacherRecord {
                    class_label: class.label.clone(),
                    members: class.len(),
                    seed,
                    n: settings.n,
                    exact,
                    monte_carlo,
                });
            }
        }
        Ok(records)
    })?;
    let mut output = CommandOutput::default();
    output.write_json(out, "rademacher.json", &records)?;
    Ok((records, output.finish(out)?))
}
