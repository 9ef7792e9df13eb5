//! Ridge solutions checked against an explicit inverse of the normal
//! equations computed with nalgebra's LU.

use abloc_core::ridge::{ridge_fit, ridge_predict};
use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn oracle(x: &Array2<f64>, y: &Array1<f64>, alpha: f64) -> Vec<f64> {
    let (n, p) = x.dim();
    let xm = DMatrix::from_fn(n, p, |i, j| x[[i, j]]);
    let yv = DVector::from_iterator(n, y.iter().copied());
    let a = xm.transpose() * &xm + DMatrix::<f64>::identity(p, p) * alpha;
    let inv = a.try_inverse().expect("oracle system invertible");
    (inv * xm.transpose() * yv).iter().copied().collect()
}

fn random_problem(rng: &mut ChaCha8Rng, n: usize, p: usize) -> (Array2<f64>, Array1<f64>) {
    let x = Array2::from_shape_simple_fn((n, p), || rng.random_range(-1.0..1.0));
    let y = Array1::from_shape_simple_fn(n, || rng.random_range(-2.0..2.0));
    (x, y)
}

#[test]
fn matches_explicit_inverse_50x10() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (x, y) = random_problem(&mut rng, 50, 10);
    let got = ridge_fit(x.view(), y.view(), 0.1).unwrap();
    for (g, w) in got.iter().zip(oracle(&x, &y, 0.1)) {
        assert!((g - w).abs() < 1e-8);
    }
}

#[test]
fn least_squares_residual_is_orthogonal_to_design() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (x, y) = random_problem(&mut rng, 120, 6);
    let c = ridge_fit(x.view(), y.view(), 1e-14).unwrap();
    let resid = &y - &ridge_predict(c.view(), x.view()).unwrap();
    let xt_r = x.t().dot(&resid);
    assert!(xt_r.iter().all(|v| v.abs() < 1e-8), "{xt_r:?}");
}

#[test]
fn huge_penalty_drives_coefficients_to_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (x, y) = random_problem(&mut rng, 40, 5);
    let c = ridge_fit(x.view(), y.view(), 1e12).unwrap();
    assert!(c.iter().all(|v| v.abs() < 1e-9));
}

fn objective(x: &Array2<f64>, y: &Array1<f64>, c: &Array1<f64>, alpha: f64) -> f64 {
    let r = y - &x.dot(c);
    r.dot(&r) + alpha * c.dot(c)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn coefficient_norm_shrinks_with_penalty(seed in 0u64..10_000, a1 in 0.0f64..5.0, extra in 0.0f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y) = random_problem(&mut rng, 30, 4);
        let n1 = ridge_fit(x.view(), y.view(), a1).unwrap().mapv(|v| v * v).sum().sqrt();
        let n2 = ridge_fit(x.view(), y.view(), a1 + extra).unwrap().mapv(|v| v * v).sum().sqrt();
        prop_assert!(n2 <= n1 + 1e-10);
    }

    #[test]
    fn perturbations_never_improve_objective(seed in 0u64..10_000, alpha in 0.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y) = random_problem(&mut rng, 25, 5);
        let c = ridge_fit(x.view(), y.view(), alpha).unwrap();
        let base = objective(&x, &y, &c, alpha);
        for _ in 0..20 {
            let dir = Array1::<f64>::from_shape_simple_fn(5, || rng.random_range(-1.0..1.0));
            let norm: f64 = dir.dot(&dir).sqrt();
            let moved = &c + &(dir * (1e-3 / norm));
            prop_assert!(objective(&x, &y, &moved, alpha) >= base - 1e-9);
        }
    }
}
