#![allow(dead_code)]

use mixcert::linalg::Matrix;
use mixcert::process::presets::with_point_emissions;
use mixcert::process::{MarkovSpec, ProcessSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Singular values by one-sided Jacobi rotations, descending.
pub fn jacobi_singular_values(a: &Matrix) -> Vec<f64> {
    // work on columns of the taller orientation
    let m = if a.rows() >= a.cols() {
        a.clone()
    } else {
        a.transpose()
    };
    let (rows, cols) = (m.rows(), m.cols());
    let mut c: Vec<Vec<f64>> = (0..cols)
        .map(|j| (0..rows).map(|i| m[(i, j)]).collect())
        .collect();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha: f64 = c[p].iter().map(|x| x * x).sum();
                let beta: f64 = c[q].iter().map(|x| x * x).sum();
                let gamma: f64 = c[p].iter().zip(&c[q]).map(|(x, y)| x * y).sum();
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                let (left, right) = c.split_at_mut(q);
                for (x, y) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    let (a, b) = (*x, *y);
                    *x = cs * a - sn * b;
                    *y = sn * a + cs * b;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s: Vec<f64> = c
        .iter()
        .map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let data = (0..rows * cols)
        .map(|_| StandardNormal.sample(rng))
        .collect();
    Matrix::from_row_major(rows, cols, data).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Row-stochastic matrix with entries bounded away from zero.
pub fn random_kernel(s: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..s)
        .map(|_| {
            let row: Vec<f64> = (0..s).map(|_| rng.random_range(0.05..1.0)).collect();
            let total: f64 = row.iter().sum();
            row.into_iter().map(|v| v / total).collect()
        })
        .collect()
}

pub fn random_simplex(s: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let row: Vec<f64> = (0..s).map(|_| rng.random_range(0.0..1.0)).collect();
    let total: f64 = row.iter().sum();
    row.into_iter().map(|v| v / total).collect()
}

pub fn point_chain(transition: Vec<Vec<f64>>, initial: Vec<f64>) -> ProcessSpec {
    with_point_emissions(MarkovSpec {
        num_states: initial.len(),
        transition,
        initial,
    })
}
