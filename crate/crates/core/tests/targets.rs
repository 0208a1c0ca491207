use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use zoslice::targets::{generate_logistic_data, generate_sv_data, StochasticVolatilityTarget};
use zoslice::{GaussianTarget, GradientOracle, Potential};

fn normals(rng: &mut ChaCha8Rng, n: usize, sd: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            sd * z
        })
        .collect()
}

fn unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let v = normals(rng, n, 1.0);
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / norm).collect()
}

fn axpy(x: &[f64], a: f64, v: &[f64]) -> Vec<f64> {
    x.iter().zip(v).map(|(xi, vi)| xi + a * vi).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// `|vᵀ∇²U(x)v|` from a central second difference.
fn local_curvature(t: &dyn Potential, x: &[f64], v: &[f64]) -> f64 {
    let h = 1e-3;
    let c = (t.value(&axpy(x, h, v)) - 2.0 * t.value(x) + t.value(&axpy(x, -h, v))) / (h * h);
    c.abs()
}

/// Forward-difference error against `gᵀv` over 100 points and 10 directions
/// each, relative to `10·ε·L_local`.
fn check_forward_differences<T: GradientOracle>(t: &T, spread: f64, seed: u64) {
    let eps = 1e-5;
    let d = t.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let x = normals(&mut rng, d, spread);
        let g = t.gradient(&x).unwrap();
        let u = t.value(&x);
        for _ in 0..10 {
            let v = unit(&mut rng, d);
            let fd = (t.value(&axpy(&x, eps, &v)) - u) / eps;
            let err = (fd - dot(&g, &v)).abs();
            // floor the curvature so pure rounding noise cannot fail the check
            let bound = 10.0 * eps * local_curvature(t, &x, &v).max(1e-2);
            worst = worst.max(err / bound);
        }
    }
    assert!(worst <= 1.0, "worst error / bound = {worst}");
}

#[test]
fn forward_differences_gaussian() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let a = DMatrix::from_fn(6, 6, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z
    });
    let precision = &a * a.transpose() + DMatrix::identity(6, 6);
    let t = GaussianTarget::new(vec![0.5; 6], precision).unwrap();
    check_forward_differences(&t, 2.0, 1);
}

#[test]
fn forward_differences_logistic() {
    let t = generate_logistic_data(4, 25, 25).unwrap().target().unwrap();
    check_forward_differences(&t, 0.5, 2);
}

#[test]
fn forward_differences_stochastic_volatility() {
    let data = generate_sv_data(3, 30, 1.0, 0.5f64.atanh(), 0.0).unwrap();
    let t = data.target().unwrap();
    check_forward_differences(&t, 0.3, 3);
}

#[test]
fn forward_difference_error_is_first_order() {
    let t = generate_logistic_data(8, 25, 10).unwrap().target().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = normals(&mut rng, 10, 0.5);
    let v = unit(&mut rng, 10);
    let exact = dot(&t.gradient(&x).unwrap(), &v);
    let err = |eps: f64| ((t.value(&axpy(&x, eps, &v)) - t.value(&x)) / eps - exact).abs();
    let ratio = err(1e-3) / err(5e-4);
    assert!((ratio - 2.0).abs() < 0.1, "Richardson ratio {ratio}");
}

#[test]
fn logistic_data_term_is_convex() {
    let t = generate_logistic_data(2, 50, 20).unwrap().target().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let beta = normals(&mut rng, 20, 1.0);
        let h = t.data_hessian(&beta);
        let min = h.symmetric_eigen().eigenvalues.min();
        assert!(min >= -1e-10, "smallest eigenvalue {min}");
    }
    let c = t.curvature().unwrap();
    assert_eq!(c.convexity, 1.0 / t.prior_variance());
    assert!(c.smoothness >= c.convexity);
}

#[test]
fn logistic_curvature_bounds_hessian() {
    let t = generate_logistic_data(6, 40, 8).unwrap().target().unwrap();
    let c = t.curvature().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let beta = normals(&mut rng, 8, 1.0);
        let full = t.data_hessian(&beta) + DMatrix::identity(8, 8) / t.prior_variance();
        let eig = full.symmetric_eigen().eigenvalues;
        assert!(eig.min() >= c.convexity - 1e-10);
        assert!(eig.max() <= c.smoothness + 1e-10);
    }
}

#[test]
fn gaussian_matches_quadratic_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let d = 7;
    let a = DMatrix::from_fn(d, d, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z
    });
    let precision = &a * a.transpose() + DMatrix::identity(d, d) * 0.1;
    let mean = normals(&mut rng, d, 1.0);
    let t = GaussianTarget::new(mean.clone(), precision.clone()).unwrap();
    for _ in 0..50 {
        let x = normals(&mut rng, d, 3.0);
        let r = nalgebra::DVector::from_iterator(d, x.iter().zip(&mean).map(|(a, b)| a - b));
        let expect = 0.5 * (r.transpose() * &precision * &r)[(0, 0)];
        let got = t.value(&x);
        assert!((got - expect).abs() <= 1e-12 * expect.abs().max(1e-300));
    }
}

#[test]
fn evaluation_is_deterministic_and_checked() {
    let t = generate_logistic_data(1, 25, 25).unwrap().target().unwrap();
    let x = vec![0.1; 25];
    assert_eq!(t.value(&x).to_bits(), t.value(&x).to_bits());
    assert!(zoslice::targets::evaluate_potential(&t, &[0.0; 3]).is_err());
    let mut bad = x.clone();
    bad[4] = f64::NAN;
    assert!(matches!(
        zoslice::targets::evaluate_potential(&t, &bad),
        Err(zoslice::Error::NonFiniteInput { index: 4 })
    ));
}

#[test]
fn stochastic_volatility_minimal_series() {
    let data = generate_sv_data(1, 2, 1.0, 0.5f64.atanh(), 0.0).unwrap();
    assert_eq!(data.y.len(), 2);
    let t = StochasticVolatilityTarget::new(data.y.clone()).unwrap();
    assert_eq!(t.dim(), 5);
    assert!(t.value(&[0.0; 5]).is_finite());
    assert!(generate_sv_data(1, 1, 1.0, 0.0, 0.0).is_err());
}
