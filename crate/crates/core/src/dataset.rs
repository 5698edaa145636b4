//! Labelled samples and their plain-text file format.
//!
//! ```text
//! n d K kind seed
//! x_11 ... x_1d y_1
//! ...
//! ```

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    /// One run of the non-stationary process.
    Sequence,
    /// Independent draws from the target law.
    TargetIid,
}

impl DatasetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetKind::Sequence => "sequence",
            DatasetKind::TargetIid => "target_iid",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "sequence" => Some(DatasetKind::Sequence),
            "target_iid" => Some(DatasetKind::TargetIid),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    /// `n × d`, one input per row.
    pub inputs: Matrix,
    /// 1-based class labels.
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub seed: u64,
    /// Digest of the generating spec; not part of the file format.
    pub spec_digest: Option<String>,
    pub kind: DatasetKind,
}

impl LabeledDataset {
    pub fn new(
        inputs: Matrix,
        labels: Vec<usize>,
        num_classes: usize,
        seed: u64,
        kind: DatasetKind,
    ) -> Result<Self> {
        if inputs.rows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: inputs.rows(),
                actual: labels.len(),
            });
        }
        if !inputs.is_finite() {
            return Err(Error::InvalidSpec("dataset inputs must be finite".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y == 0 || y > num_classes) {
            return Err(Error::BadLabel {
                label: bad,
                num_classes,
            });
        }
        Ok(Self {
            inputs,
            labels,
            num_classes,
            seed,
            spec_digest: None,
            kind,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.cols()
    }

    pub fn input(&self, i: usize) -> &[f64] {
        self.inputs.row(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], usize)> + '_ {
        (0..self.len()).map(move |i| (self.input(i), self.labels[i]))
    }

    /// `sqrt(Σ ||x_i||²)`, the data radius entering the complexity term.
    pub fn input_norm(&self) -> f64 {
        self.inputs
            .as_slice()
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// First `m` points, keeping metadata.
    pub fn prefix(&self, m: usize) -> Self {
        let m = m.min(self.len());
        let d = self.input_dim();
        Self {
            inputs: Matrix::from_row_major(m, d, self.inputs.as_slice()[..m * d].to_vec())
                .expect("prefix shape"),
            labels: self.labels[..m].to_vec(),
            ..self.clone()
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "{} {} {} {} {}",
            self.len(),
            self.input_dim(),
            self.num_classes,
            self.kind.as_str(),
            self.seed
        )
        .unwrap();
        for (x, y) in self.iter() {
            for v in x {
                write!(out, "{v} ").unwrap();
            }
            writeln!(out, "{y}").unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::Parse {
                line: 1,
                msg: "header must be `n d K kind seed`".into(),
            });
        }
        let num = |i: usize| -> Result<usize> {
            fields[i].parse().map_err(|_| Error::Parse {
                line: 1,
                msg: format!("bad integer `{}`", fields[i]),
            })
        };
        let (n, d, k) = (num(0)?, num(1)?, num(2)?);
        let kind = DatasetKind::parse(fields[3]).ok_or(Error::Parse {
            line: 1,
            msg: format!("unknown kind `{}`", fields[3]),
        })?;
        let seed: u64 = fields[4].parse().map_err(|_| Error::Parse {
            line: 1,
            msg: "bad seed".into(),
        })?;

        let mut data = Vec::with_capacity(n * d);
        let mut labels = Vec::with_capacity(n);
        for (idx, line) in lines.take(n) {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != d + 1 {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("expected {} fields, found {}", d + 1, toks.len()),
                });
            }
            for t in &toks[..d] {
                data.push(t.parse::<f64>().map_err(|_| Error::Parse {
                    line: idx + 1,
                    msg: format!("bad number `{t}`"),
                })?);
            }
            labels.push(toks[d].parse::<usize>().map_err(|_| Error::Parse {
                line: idx + 1,
                msg: format!("bad label `{}`", toks[d]),
            })?);
        }
        if labels.len() != n {
            return Err(Error::Parse {
                line: labels.len() + 2,
                msg: format!("expected {n} rows, found {}", labels.len()),
            });
        }
        Self::new(Matrix::from_row_major(n, d, data)?, labels, k, seed, kind)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    /// SHA-256 of the file encoding.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> LabeledDataset {
        let inputs = Matrix::from_rows(&[vec![0.1, -2.5], vec![1e-20, 3.0]]).unwrap();
        LabeledDataset::new(inputs, vec![2, 1], 2, 42, DatasetKind::Sequence).unwrap()
    }

    #[test]
    fn text_layout() {
        let text = tiny().to_text();
        assert!(text.starts_with("2 2 2 sequence 42\n0.1 -2.5 2\n"));
    }

    #[test]
    fn text_round_trip_is_exact() {
        let ds = tiny();
        let back = LabeledDataset::from_text(&ds.to_text()).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn malformed_files_rejected() {
        assert!(LabeledDataset::from_text("").is_err());
        assert!(LabeledDataset::from_text("1 1 2 bogus 0\n0.5 1\n").is_err());
        assert!(LabeledDataset::from_text("2 1 2 sequence 0\n0.5 1\n").is_err());
        assert!(matches!(
            LabeledDataset::from_text("1 1 2 sequence 0\n0.5 3\n"),
            Err(Error::BadLabel { .. })
        ));
    }

    #[test]
    fn empty_dataset_round_trips() {
        let ds =
            LabeledDataset::new(Matrix::zeros(0, 3), vec![], 2, 0, DatasetKind::TargetIid).unwrap();
        assert_eq!(LabeledDataset::from_text(&ds.to_text()).unwrap(), ds);
    }
}
