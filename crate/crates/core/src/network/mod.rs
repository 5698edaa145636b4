//! Bias-free feed-forward networks `x ↦ σ_L(A_L σ_{L-1}(… σ_1(A_1 x)))`,
//! the margin operator, the ramp loss, and the losses built from them.

mod train;

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetKind, LabeledDataset};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub use train::{
    gradient, init_params, train_sgd, Architecture, Surrogate, TrainConfig, TrainedNetwork,
};

/// Activations fixing 0 and 1-Lipschitz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    LeakyRelu { slope: f64 },
    Tanh,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::LeakyRelu { slope } => {
                if x > 0.0 {
                    x
                } else {
                    slope * x
                }
            }
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative at a pre-activation value; kinks take the left slope.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu { slope } => {
                if x > 0.0 {
                    1.0
                } else {
                    slope
                }
            }
            Activation::Tanh => 1.0 - x.tanh().powi(2),
            Activation::Identity => 1.0,
        }
    }

    pub fn lipschitz(self) -> f64 {
        1.0
    }

    /// Token used in the network text format.
    pub fn token(self) -> String {
        match self {
            Activation::Relu => "relu".into(),
            Activation::LeakyRelu { slope } => format!("leaky_relu:{slope}"),
            Activation::Tanh => "tanh".into(),
            Activation::Identity => "identity".into(),
        }
    }

    pub fn parse_token(tok: &str) -> Option<Self> {
        match tok {
            "relu" => Some(Activation::Relu),
            "tanh" => Some(Activation::Tanh),
            "identity" => Some(Activation::Identity),
            _ => {
                let slope: f64 = tok.strip_prefix("leaky_relu:")?.parse().ok()?;
                Some(Activation::LeakyRelu { slope })
            }
        }
    }

    pub fn validate(self) -> Result<()> {
        match self {
            Activation::LeakyRelu { slope } if !(slope > 0.0 && slope < 1.0) => Err(
                Error::InvalidSpec(format!("leaky relu slope {slope} must lie in (0, 1)")),
            ),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    layers: Vec<Matrix>,
    activations: Vec<Activation>,
}

impl NetworkParams {
    pub fn new(layers: Vec<Matrix>, activations: Vec<Activation>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidSpec(
                "network needs at least one layer".into(),
            ));
        }
        if layers.len() != activations.len() {
            return Err(Error::DimensionMismatch {
                expected: layers.len(),
                actual: activations.len(),
            });
        }
        for w in layers.windows(2) {
            if w[1].cols() != w[0].rows() {
                return Err(Error::DimensionMismatch {
                    expected: w[0].rows(),
                    actual: w[1].cols(),
                });
            }
        }
        if layers.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidSpec("weights must be finite".into()));
        }
        for a in &activations {
            a.validate()?;
        }
        Ok(Self {
            layers,
            activations,
        })
    }

    pub fn layers(&self) -> &[Matrix] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Matrix] {
        &mut self.layers
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].cols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].rows()
    }

    /// W: the largest dimension along any axis of any weight matrix.
    pub fn max_width(&self) -> usize {
        self.layers
            .iter()
            .map(|a| a.rows().max(a.cols()))
            .max()
            .unwrap_or(0)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        Ok(self.forward_unchecked(x))
    }

    pub(crate) fn forward_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let mut h = x.to_vec();
        for (a, act) in self.layers.iter().zip(&self.activations) {
            h = a.mul_vec(&h);
            h.iter_mut().for_each(|v| *v = act.apply(*v));
        }
        h
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.layers.len());
        for a in &self.layers {
            writeln!(out, "{} {}", a.rows(), a.cols()).unwrap();
            for i in 0..a.rows() {
                let row: Vec<String> = a.row(i).iter().map(|v| v.to_string()).collect();
                writeln!(out, "{}", row.join(" ")).unwrap();
            }
        }
        let acts: Vec<String> = self.activations.iter().map(|a| a.token()).collect();
        writeln!(out, "{}", acts.join(" ")).unwrap();
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| {
            lines.next().ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("unexpected end of file, expected {what}"),
            })
        };
        let bad = |line: usize, msg: String| Error::Parse { line, msg };

        let (ln, first) = next("layer count")?;
        let depth: usize = first
            .trim()
            .parse()
            .map_err(|_| bad(ln, "bad layer count".into()))?;
        let mut layers = Vec::with_capacity(depth);
        for _ in 0..depth {
            let (ln, dims) = next("layer shape")?;
            let dims: Vec<usize> = dims
                .split_whitespace()
                .map(|t| {
                    t.parse()
                        .map_err(|_| bad(ln, format!("bad dimension `{t}`")))
                })
                .collect::<Result<_>>()?;
            let [rows, cols] = dims[..] else {
                return Err(bad(ln, "expected `rows cols`".into()));
            };
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let (ln, row) = next("matrix row")?;
                let before = data.len();
                for t in row.split_whitespace() {
                    data.push(
                        t.parse::<f64>()
                            .map_err(|_| bad(ln, format!("bad number `{t}`")))?,
                    );
                }
                if data.len() - before != cols {
                    return Err(bad(ln, format!("expected {cols} entries")));
                }
            }
            layers.push(Matrix::from_row_major(rows, cols, data)?);
        }
        let (ln, acts) = next("activation line")?;
        let activations = acts
            .split_whitespace()
            .map(|t| {
                Activation::parse_token(t)
                    .ok_or_else(|| bad(ln, format!("unknown activation `{t}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers, activations)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// `v_j - max_{i != j} v_i` for a 1-based label `j`.
pub fn margin(v: &[f64], j: usize) -> Result<f64> {
    if v.len() < 2 || j == 0 || j > v.len() {
        return Err(Error::BadLabel {
            label: j,
            num_classes: v.len(),
        });
    }
    let rival = v
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != j - 1)
        .map(|(_, &x)| x)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(v[j - 1] - rival)
}

/// Ramp loss `(1 + min(r, 0)/γ)⁺`: 1 for `r >= 0`, 0 for `r <= -γ`.
pub fn ramp_loss(r: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::NonpositiveGamma(gamma));
    }
    Ok(ramp_unchecked(r, gamma))
}

pub(crate) fn ramp_unchecked(r: f64, gamma: f64) -> f64 {
    (1.0 + r.min(0.0) / gamma).clamp(0.0, 1.0)
}

/// Misclassification indicator with ties counted as errors.
pub fn is_error(v: &[f64], y: usize) -> Result<bool> {
    Ok(margin(v, y)? <= 0.0)
}

/// Ramp loss of one point, `ℓ_γ(-M(F(x), y))`.
pub fn point_ramp_loss(params: &NetworkParams, x: &[f64], y: usize, gamma: f64) -> Result<f64> {
    let v = params.forward(x)?;
    ramp_loss(-margin(&v, y)?, gamma)
}

pub fn empirical_loss(params: &NetworkParams, data: &LabeledDataset, gamma: f64) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(gamma > 0.0) {
        return Err(Error::NonpositiveGamma(gamma));
    }
    let mut total = 0.0;
    for (x, y) in data.iter() {
        total += point_ramp_loss(params, x, y, gamma)?;
    }
    Ok(total / data.len() as f64)
}

pub fn zero_one_loss(params: &NetworkParams, data: &LabeledDataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut errors = 0usize;
    for (x, y) in data.iter() {
        if is_error(&params.forward(x)?, y)? {
            errors += 1;
        }
    }
    Ok(errors as f64 / data.len() as f64)
}

/// Sample estimate of the population losses on fresh target draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationEstimate {
    pub ramp: f64,
    pub zero_one: f64,
    /// Hoeffding half-width `sqrt(ln(2/δ_est) / (2m))`.
    pub halfwidth: f64,
}

pub fn population_estimate(
    params: &NetworkParams,
    target: &LabeledDataset,
    gamma: f64,
    delta_est: f64,
) -> Result<PopulationEstimate> {
    if target.kind != DatasetKind::TargetIid {
        return Err(Error::WrongKind {
            expected: DatasetKind::TargetIid.as_str(),
            actual: target.kind.as_str(),
        });
    }
    if !(delta_est > 0.0 && delta_est < 1.0) {
        return Err(Error::BadDelta(delta_est));
    }
    Ok(PopulationEstimate {
        ramp: empirical_loss(params, target, gamma)?,
        zero_one: zero_one_loss(params, target)?,
        halfwidth: hoeffding_halfwidth(target.len(), delta_est),
    })
}

pub fn hoeffding_halfwidth(m: usize, delta: f64) -> f64 {
    ((2.0 / delta).ln() / (2.0 * m as f64)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_net(act: Activation) -> NetworkParams {
        NetworkParams::new(vec![Matrix::identity(2)], vec![act]).unwrap()
    }

    fn dataset(points: &[(Vec<f64>, usize)], kind: DatasetKind) -> LabeledDataset {
        let rows: Vec<Vec<f64>> = points.iter().map(|p| p.0.clone()).collect();
        LabeledDataset::new(
            Matrix::from_rows(&rows).unwrap(),
            points.iter().map(|p| p.1).collect(),
            2,
            0,
            kind,
        )
        .unwrap()
    }

    #[test]
    fn forward_examples() {
        let net = identity_net(Activation::Relu);
        assert_eq!(net.forward(&[1.0, -1.0]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(net.forward(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);

        let two = NetworkParams::new(
            vec![
                Matrix::identity(2).scaled(2.0),
                Matrix::identity(2).scaled(3.0),
            ],
            vec![Activation::Identity, Activation::Identity],
        )
        .unwrap();
        assert_eq!(two.forward(&[1.0, 0.0]).unwrap(), vec![6.0, 0.0]);
        assert!(matches!(
            two.forward(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn activations_fix_zero() {
        for a in [
            Activation::Relu,
            Activation::LeakyRelu { slope: 0.1 },
            Activation::Tanh,
            Activation::Identity,
        ] {
            assert_eq!(a.apply(0.0), 0.0);
        }
        assert!(Activation::LeakyRelu { slope: 1.5 }.validate().is_err());
    }

    #[test]
    fn mismatched_layers_rejected() {
        let r = NetworkParams::new(
            vec![Matrix::zeros(3, 2), Matrix::zeros(2, 2)],
            vec![Activation::Relu, Activation::Identity],
        );
        assert!(r.is_err());
    }

    #[test]
    fn margin_examples() {
        assert_eq!(margin(&[3.0, 1.0, 0.0], 1).unwrap(), 2.0);
        assert_eq!(margin(&[1.0, 1.0, 0.0], 1).unwrap(), 0.0);
        assert_eq!(margin(&[0.0, 2.0, 1.0], 1).unwrap(), -2.0);
        assert!(margin(&[0.0, 2.0, 1.0], 4).is_err());
        assert!(margin(&[0.0, 2.0], 0).is_err());
    }

    #[test]
    fn ramp_examples() {
        assert_eq!(ramp_loss(0.0, 1.0).unwrap(), 1.0);
        assert_eq!(ramp_loss(-2.0, 1.0).unwrap(), 0.0);
        assert_eq!(ramp_loss(-1.0, 2.0).unwrap(), 0.5);
        assert_eq!(ramp_loss(5.0, 2.0).unwrap(), 1.0);
        assert!(matches!(
            ramp_loss(1.0, 0.0),
            Err(Error::NonpositiveGamma(_))
        ));
    }

    #[test]
    fn empirical_loss_examples() {
        let net = identity_net(Activation::Identity);
        // margins 2 and 3, both >= γ = 1
        let good = dataset(
            &[(vec![2.0, 0.0], 1), (vec![0.0, 3.0], 2)],
            DatasetKind::Sequence,
        );
        assert_eq!(empirical_loss(&net, &good, 1.0).unwrap(), 0.0);
        assert_eq!(zero_one_loss(&net, &good).unwrap(), 0.0);

        let bad = dataset(
            &[(vec![0.0, 1.0], 1), (vec![1.0, 1.0], 2)],
            DatasetKind::Sequence,
        );
        assert_eq!(empirical_loss(&net, &bad, 1.0).unwrap(), 1.0);
        assert_eq!(zero_one_loss(&net, &bad).unwrap(), 1.0);

        let half = dataset(&[(vec![0.5, 0.0], 1)], DatasetKind::Sequence);
        assert_eq!(empirical_loss(&net, &half, 1.0).unwrap(), 0.5);

        let mixed = dataset(
            &[(vec![2.0, 0.0], 1), (vec![2.0, 0.0], 2)],
            DatasetKind::Sequence,
        );
        assert_eq!(zero_one_loss(&net, &mixed).unwrap(), 0.5);
    }

    #[test]
    fn zero_logits_count_as_errors() {
        let net = NetworkParams::new(vec![Matrix::zeros(2, 2)], vec![Activation::Relu]).unwrap();
        let ds = dataset(
            &[(vec![1.0, 2.0], 1), (vec![-1.0, 0.5], 2)],
            DatasetKind::Sequence,
        );
        assert_eq!(zero_one_loss(&net, &ds).unwrap(), 1.0);
    }

    #[test]
    fn empty_data_rejected() {
        let net = identity_net(Activation::Identity);
        let empty =
            LabeledDataset::new(Matrix::zeros(0, 2), vec![], 2, 0, DatasetKind::Sequence).unwrap();
        assert!(matches!(
            empirical_loss(&net, &empty, 1.0),
            Err(Error::EmptyDataset)
        ));
        assert!(matches!(
            zero_one_loss(&net, &empty),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn population_estimate_checks_kind_and_halfwidth() {
        let net = identity_net(Activation::Identity);
        let seq = dataset(&[(vec![1.0, 0.0], 1)], DatasetKind::Sequence);
        assert!(matches!(
            population_estimate(&net, &seq, 1.0, 0.01),
            Err(Error::WrongKind { .. })
        ));
        assert!((hoeffding_halfwidth(10_000, 0.01) - 0.016_276).abs() < 1e-6);

        let tgt = dataset(
            &[(vec![0.0, 1.0], 1), (vec![3.0, 0.0], 2)],
            DatasetKind::TargetIid,
        );
        let est = population_estimate(&net, &tgt, 1.0, 0.01).unwrap();
        assert_eq!(est.ramp, 1.0);
        assert_eq!(est.zero_one, 1.0);
        assert_eq!(est.ramp, empirical_loss(&net, &tgt, 1.0).unwrap());
    }

    #[test]
    fn text_round_trip() {
        let net = NetworkParams::new(
            vec![
                Matrix::from_rows(&[vec![0.1, -0.2], vec![1e-17, 3.5], vec![0.0, 1.0]]).unwrap(),
                Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![-1.0, -2.0, -3.0]]).unwrap(),
            ],
            vec![Activation::LeakyRelu { slope: 0.01 }, Activation::Identity],
        )
        .unwrap();
        let text = net.to_text();
        assert!(text.starts_with("2\n3 2\n0.1 -0.2\n"));
        assert!(text.ends_with("leaky_relu:0.01 identity\n"));
        assert_eq!(NetworkParams::from_text(&text).unwrap(), net);
        assert!(NetworkParams::from_text("1\n2 2\n1 0\n").is_err());
    }
}
