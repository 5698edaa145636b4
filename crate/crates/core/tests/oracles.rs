mod common;

use common::*;
use mixcert::dataset::{DatasetKind, LabeledDataset};
use mixcert::linalg::Matrix;
use mixcert::network::{gradient, Activation, NetworkParams, Surrogate};
use mixcert::norms::{norm_2_1_of_transpose, spectral_norm, DEFAULT_SPECTRAL_TOL};
use mixcert::process::presets::{symmetric_chain, with_point_emissions};
use mixcert::process::{
    brute_force_phi, phi_coefficient, phi_coefficient_window, BRUTE_FORCE_BUDGET,
};
use mixcert::rademacher::{
    empirical_rademacher_exact, empirical_rademacher_mc, exact_from_values, FunctionClass,
};
use rand::Rng;

#[test]
fn phi_window_matches_event_enumeration() {
    let mut r = rng(11);
    for trial in 0..8 {
        let s = 2 + trial % 2;
        let spec = point_chain(random_kernel(s, &mut r), random_simplex(s, &mut r));
        for k in 1..=3 {
            let n_max = if s == 3 { 2 } else { 3 };
            let brute = brute_force_phi(&spec, k, n_max, 1, BRUTE_FORCE_BUDGET).unwrap();
            let fast = phi_coefficient_window(&spec, k, n_max);
            assert!(
                (brute - fast).abs() <= 1e-12,
                "S={s} k={k}: {brute} vs {fast}"
            );
        }
    }
}

#[test]
fn longer_future_windows_add_nothing_for_markov_chains() {
    let spec = with_point_emissions(symmetric_chain(0.8, [0.9, 0.1]));
    let one = brute_force_phi(&spec, 2, 2, 1, BRUTE_FORCE_BUDGET).unwrap();
    let three = brute_force_phi(&spec, 2, 2, 3, BRUTE_FORCE_BUDGET).unwrap();
    assert!((one - three).abs() <= 1e-12);
}

#[test]
fn stationary_start_needs_no_limit_point() {
    let spec = with_point_emissions(symmetric_chain(0.9, [0.5, 0.5]));
    for k in 1..=3 {
        let brute = brute_force_phi(&spec, k, 3, 1, BRUTE_FORCE_BUDGET).unwrap();
        assert!((brute - phi_coefficient(&spec, k, 3)).abs() <= 1e-12);
        // closed form for the symmetric chain: |2·stay - 1|^k / 2
        assert!((brute - 0.8f64.powi(k as i32) / 2.0).abs() <= 1e-12);
    }
}

#[test]
fn spectral_norm_matches_jacobi_svd() {
    let mut r = rng(3);
    for &(m, n) in &[(4, 4), (7, 3), (3, 9), (16, 16), (64, 64)] {
        for _ in 0..10 {
            let a = gaussian_matrix(m, n, &mut r);
            let oracle = jacobi_singular_values(&a)[0];
            let est = spectral_norm(&a, DEFAULT_SPECTRAL_TOL);
            assert!(est.converged);
            assert!(
                (est.value - oracle).abs() <= 1e-9 * oracle,
                "{m}x{n}: {} vs {oracle}",
                est.value
            );
            assert!(est.value <= norm_2_1_of_transpose(&a) * (1.0 + 1e-12));
        }
    }
}

#[test]
fn jacobi_oracle_on_known_matrices() {
    let s = jacobi_singular_values(&Matrix::from_rows(&[vec![3.0, 0.0], vec![0.0, 1.0]]).unwrap());
    assert!((s[0] - 3.0).abs() < 1e-15 && (s[1] - 1.0).abs() < 1e-15);
    let s = jacobi_singular_values(&Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap());
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    assert!((s[0] - golden).abs() < 1e-14 && (s[1] - 1.0 / golden).abs() < 1e-14);
}

#[test]
fn rank_deficient_spectral_norm() {
    let mut r = rng(5);
    for _ in 0..10 {
        let u: Vec<f64> = (0..6).map(|_| r.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..4).map(|_| r.random_range(-1.0..1.0)).collect();
        let data = u
            .iter()
            .flat_map(|a| v.iter().map(move |b| a * b))
            .collect();
        let a = Matrix::from_row_major(6, 4, data).unwrap();
        let expected = mixcert::linalg::norm2(&u) * mixcert::linalg::norm2(&v);
        let est = spectral_norm(&a, DEFAULT_SPECTRAL_TOL).value;
        assert!((est - expected).abs() <= 1e-12 * expected);
    }
}

fn smooth_net(dims: &[usize], r: &mut rand_chacha::ChaCha8Rng) -> NetworkParams {
    let layers: Vec<Matrix> = dims
        .windows(2)
        .map(|w| gaussian_matrix(w[1], w[0], r).scaled(0.5))
        .collect();
    let mut activations = vec![Activation::Tanh; layers.len() - 1];
    activations.push(Activation::Identity);
    NetworkParams::new(layers, activations).unwrap()
}

#[test]
fn gradient_matches_central_differences() {
    let mut r = rng(17);
    let inputs = gaussian_matrix(12, 3, &mut r);
    let labels = (0..12).map(|i| 1 + i % 4).collect();
    let data = LabeledDataset::new(inputs, labels, 4, 0, DatasetKind::Sequence).unwrap();
    let batch: Vec<usize> = (0..12).collect();
    let surrogate = Surrogate::default();
    for dims in [&[3, 4][..], &[3, 5, 4], &[3, 8, 8, 4]] {
        let params = smooth_net(dims, &mut r);
        let (_, grads) = gradient(&params, &data, &batch, surrogate).unwrap();
        let h = 1e-5;
        for (l, g) in grads.iter().enumerate() {
            for idx in 0..g.as_slice().len() {
                let mut plus = params.clone();
                plus.layers_mut()[l].as_mut_slice()[idx] += h;
                let mut minus = params.clone();
                minus.layers_mut()[l].as_mut_slice()[idx] -= h;
                let fp = gradient(&plus, &data, &batch, surrogate).unwrap().0;
                let fm = gradient(&minus, &data, &batch, surrogate).unwrap().0;
                let fd = (fp - fm) / (2.0 * h);
                let an = g.as_slice()[idx];
                let scale = an.abs().max(fd.abs()).max(1e-3);
                assert!(
                    (fd - an).abs() <= 1e-5 * scale,
                    "{dims:?} layer {l} entry {idx}: {an} vs {fd}"
                );
            }
        }
    }
}

fn grid(n: usize) -> LabeledDataset {
    let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 / n as f64 - 0.5]).collect();
    let labels = (0..n).map(|i| 1 + i % 2).collect();
    LabeledDataset::new(
        Matrix::from_rows(&rows).unwrap(),
        labels,
        2,
        0,
        DatasetKind::Sequence,
    )
    .unwrap()
}

#[test]
fn constant_pair_class_small_n() {
    let class = FunctionClass::new("zero and one")
        .with(|_, _| 0.0)
        .with(|_, _| 1.0);
    assert_eq!(
        empirical_rademacher_exact(&class, &grid(1)).unwrap().mean,
        0.5
    );
    assert_eq!(
        empirical_rademacher_exact(&class, &grid(2)).unwrap().mean,
        0.25
    );
}

#[test]
fn full_cube_class_is_one_half() {
    for n in 1..=6 {
        // all 2^n binary labelings of n points
        let values: Vec<Vec<f64>> = (0u32..1 << n)
            .map(|mask| (0..n).map(|i| f64::from(mask >> i & 1)).collect())
            .collect();
        let r = exact_from_values(&values, n).unwrap().mean;
        assert!((r - 0.5).abs() < 1e-15, "n={n}: {r}");
    }
}

#[test]
fn monte_carlo_agrees_with_enumeration() {
    let class = FunctionClass::new("thresholds")
        .with(|x, _| f64::from(u8::from(x[0] > 0.0)))
        .with(|x, _| f64::from(u8::from(x[0] > -0.25)))
        .with(|x, _| (x[0] + 0.5).clamp(0.0, 1.0))
        .with(|_, y| f64::from(u8::from(y == 1)));
    for n in [3, 6, 10] {
        let data = grid(n);
        let exact = empirical_rademacher_exact(&class, &data).unwrap().mean;
        let mc = empirical_rademacher_mc(&class, &data, 20_000, 1).unwrap();
        assert!(
            (mc.mean - exact).abs() <= 3.0 * mc.stderr,
            "n={n}: {exact} vs {mc:?}"
        );
    }
}

#[test]
fn massart_finite_class_bound() {
    let mut r = rng(2);
    for n in [4, 8, 12] {
        let members = 5;
        let values: Vec<Vec<f64>> = (0..members)
            .map(|_| (0..n).map(|_| r.random_range(0.0..1.0)).collect())
            .collect();
        let radius = values
            .iter()
            .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let bound = radius * (2.0 * (members as f64).ln()).sqrt() / n as f64;
        assert!(exact_from_values(&values, n).unwrap().mean <= bound);
    }
}

#[test]
fn enlarging_the_class_never_lowers_complexity() {
    let data = grid(8);
    let small = FunctionClass::new("a").with(|x, _| (x[0] + 0.5).clamp(0.0, 1.0));
    let other = FunctionClass::new("b").with(|_, y| f64::from(u8::from(y == 2)));
    let r_small = empirical_rademacher_exact(&small, &data).unwrap().mean;
    let r_union = empirical_rademacher_exact(&small.union(&other), &data)
        .unwrap()
        .mean;
    assert!(r_union + 1e-15 >= r_small);
}
