//! Python bindings: processes, datasets, networks, and the certificate
//! pipeline. Structured results (profiles, reports) are returned as JSON
//! strings.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use mixcert::bounds;
use mixcert::linalg::Matrix;
use mixcert::network::{self, Architecture, TrainConfig};
use mixcert::process::{self, presets, ProcessSpec};
use mixcert::{norms, rademacher};

fn to_py<T>(r: mixcert::Result<T>) -> PyResult<T> {
    r.map_err(|e| PyValueError::new_err(e.to_string()))
}

fn json<T: serde::Serialize>(value: &T) -> PyResult<String> {
    serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn from_json<T: serde::de::DeserializeOwned>(text: &str) -> PyResult<T> {
    serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Matrix> {
    to_py(Matrix::from_rows(&rows))
}

/// A hidden Markov process with (possibly drifting) emissions.
#[pyclass(name = "Process", frozen)]
struct PyProcess {
    inner: ProcessSpec,
}

#[pymethods]
impl PyProcess {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner: ProcessSpec = from_json(text)?;
        to_py(inner.validate())?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn drifted_two_state() -> Self {
        Self {
            inner: presets::drifted_two_state(),
        }
    }

    #[staticmethod]
    fn drifted_three_state() -> Self {
        Self {
            inner: presets::drifted_three_state(),
        }
    }

    /// Two states with 1-d point emissions `0`, `1` and labels `1`, `2`.
    #[staticmethod]
    fn symmetric_chain(stay: f64, initial: [f64; 2]) -> PyResult<Self> {
        let inner = presets::with_point_emissions(presets::symmetric_chain(stay, initial));
        to_py(inner.validate())?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        json(&self.inner)
    }

    fn digest(&self) -> String {
        self.inner.digest()
    }

    fn stationary(&self) -> PyResult<Vec<f64>> {
        to_py(process::stationary_distribution(&self.inner.markov))
    }

    fn phi(&self, k: usize, horizon: usize) -> PyResult<f64> {
        if k == 0 {
            return Err(PyValueError::new_err("k must be at least 1"));
        }
        Ok(process::phi_coefficient(&self.inner, k, horizon))
    }

    fn mu(&self, i: usize) -> PyResult<f64> {
        if i == 0 {
            return Err(PyValueError::new_err("i must be at least 1"));
        }
        to_py(process::mu_at(&self.inner, i))
    }

    /// JSON with `phi`, `mu`, `delta_inf`, and exactness flags.
    fn mixing_profile(&self, n: usize) -> PyResult<String> {
        json(&to_py(process::mixing_profile(&self.inner, n))?)
    }

    fn sample_sequence(&self, n: usize, seed: u64) -> PyResult<PyDataset> {
        Ok(PyDataset {
            inner: to_py(process::sample_sequence(&self.inner, n, seed))?,
        })
    }

    fn sample_target(&self, m: usize, seed: u64) -> PyResult<PyDataset> {
        Ok(PyDataset {
            inner: to_py(process::sample_target(&self.inner, m, seed))?,
        })
    }
}

#[pyclass(name = "Dataset", frozen)]
struct PyDataset {
    inner: mixcert::LabeledDataset,
}

#[pymethods]
impl PyDataset {
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: to_py(mixcert::LabeledDataset::from_text(text))?,
        })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn inputs(&self) -> Vec<Vec<f64>> {
        self.inner.inputs.to_rows()
    }

    fn labels(&self) -> Vec<usize> {
        self.inner.labels.clone()
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind.as_str()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    fn digest(&self) -> String {
        self.inner.digest()
    }
}

#[pyclass(name = "Network", frozen)]
struct PyNetwork {
    inner: network::NetworkParams,
}

#[pymethods]
impl PyNetwork {
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: to_py(network::NetworkParams::from_text(text))?,
        })
    }

    /// Layers as row-major nested lists; activations as in the text format
    /// (`relu`, `leaky_relu:<slope>`, `tanh`, `identity`).
    #[staticmethod]
    fn from_layers(layers: Vec<Vec<Vec<f64>>>, activations: Vec<String>) -> PyResult<Self> {
        let layers = layers
            .into_iter()
            .map(matrix)
            .collect::<PyResult<Vec<_>>>()?;
        let activations = activations
            .iter()
            .map(|t| {
                network::Activation::parse_token(t)
                    .ok_or_else(|| PyValueError::new_err(format!("unknown activation {t:?}")))
            })
            .collect::<PyResult<Vec<_>>>()?;
        Ok(Self {
            inner: to_py(network::NetworkParams::new(layers, activations))?,
        })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn forward(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        to_py(self.inner.forward(&x))
    }

    fn spectral_complexity(&self) -> f64 {
        norms::spectral_complexity(&self.inner)
    }

    /// JSON with per-layer `spectral`, `two_one`, `lipschitz`.
    fn layer_norms(&self) -> PyResult<String> {
        json(&norms::layer_norms(&self.inner))
    }

    fn empirical_loss(&self, data: &PyDataset, gamma: f64) -> PyResult<f64> {
        to_py(network::empirical_loss(&self.inner, &data.inner, gamma))
    }

    fn zero_one_loss(&self, data: &PyDataset) -> PyResult<f64> {
        to_py(network::zero_one_loss(&self.inner, &data.inner))
    }
}

/// Trains by minibatch SGD; `arch_json` and `train_json` follow the
/// `arch` and `train` sections of the experiment config.
#[pyfunction]
fn train(data: &PyDataset, arch_json: &str, train_json: &str) -> PyResult<PyNetwork> {
    let arch: Architecture = from_json(arch_json)?;
    let config: TrainConfig = from_json(train_json)?;
    let trained = to_py(network::train_sgd(&data.inner, &arch, &config))?;
    Ok(PyNetwork {
        inner: trained.params,
    })
}

#[pyfunction]
fn spectral_norm(rows: Vec<Vec<f64>>) -> PyResult<f64> {
    Ok(norms::spectral_norm(&matrix(rows)?, norms::DEFAULT_SPECTRAL_TOL).value)
}

#[pyfunction]
fn norm_2_1_of_transpose(rows: Vec<Vec<f64>>) -> PyResult<f64> {
    Ok(norms::norm_2_1_of_transpose(&matrix(rows)?))
}

#[pyfunction]
fn margin(v: Vec<f64>, label: usize) -> PyResult<f64> {
    to_py(network::margin(&v, label))
}

#[pyfunction]
fn ramp_loss(r: f64, gamma: f64) -> PyResult<f64> {
    to_py(network::ramp_loss(r, gamma))
}

#[pyfunction]
fn mcdiarmid_tail_bound(epsilon: f64, n: usize, c: f64, delta_inf: f64) -> f64 {
    bounds::mcdiarmid_tail_bound(epsilon, n, c, delta_inf)
}

/// Exact empirical Rademacher complexity of a value table
/// `values[member][point]`, `n <= 20`.
#[pyfunction]
fn rademacher_exact(values: Vec<Vec<f64>>) -> PyResult<f64> {
    let n = values.first().map_or(0, Vec::len);
    Ok(to_py(rademacher::exact_from_values(&values, n))?.mean)
}

/// `(mean, stderr)` over `trials` seeded sign draws.
#[pyfunction]
fn rademacher_mc(values: Vec<Vec<f64>>, trials: usize, seed: u64) -> PyResult<(f64, f64)> {
    let n = values.first().map_or(0, Vec::len);
    let est = to_py(rademacher::mc_from_values(&values, n, trials, seed))?;
    Ok((est.mean, est.stderr))
}

/// Per-configuration certificate as a JSON report.
#[pyfunction]
fn network_certificate(
    data: &PyDataset,
    net: &PyNetwork,
    gamma: f64,
    process: &PyProcess,
    delta: f64,
) -> PyResult<String> {
    let profile = to_py(process::mixing_profile(&process.inner, data.inner.len()))?;
    json(&to_py(bounds::network_certificate(
        &data.inner,
        &net.inner,
        gamma,
        &profile,
        delta,
    ))?)
}

/// Full sample-train-certify pipeline from an experiment config (JSON);
/// returns the list of reports as JSON.
#[pyfunction]
fn run_certification(config_json: &str) -> PyResult<String> {
    let config = to_py(mixcert::harness::ExperimentConfig::from_json(config_json))?;
    json(&to_py(bounds::run_certification(&config.certification()))?)
}

#[pyfunction]
fn default_config() -> String {
    mixcert::harness::ExperimentConfig::default_experiment().to_json()
}

#[pymodule]
fn pymixcert(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProcess>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyNetwork>()?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_norm, m)?)?;
    m.add_function(wrap_pyfunction!(norm_2_1_of_transpose, m)?)?;
    m.add_function(wrap_pyfunction!(margin, m)?)?;
    m.add_function(wrap_pyfunction!(ramp_loss, m)?)?;
    m.add_function(wrap_pyfunction!(mcdiarmid_tail_bound, m)?)?;
    m.add_function(wrap_pyfunction!(rademacher_exact, m)?)?;
    m.add_function(wrap_pyfunction!(rademacher_mc, m)?)?;
    m.add_function(wrap_pyfunction!(network_certificate, m)?)?;
    m.add_function(wrap_pyfunction!(run_certification, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    Ok(())
}
