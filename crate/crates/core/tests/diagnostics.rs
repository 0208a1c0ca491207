use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use zoslice::samplers::SliceGradientMode;
use zoslice::{
    esjd, moment_stationarity_check, relative_gain, run_chain, w2_contraction_estimate, DirectionLaw,
    GaussianTarget, KernelKind, SamplerConfig, Trajectory, TrajectoryMeta,
};

fn meta() -> TrajectoryMeta {
    TrajectoryMeta {
        kernel: "fixture".into(),
        directions: 1,
        leapfrog_steps: 1,
        law: None,
    }
}

fn random_walk(d: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; d];
    (0..n)
        .map(|_| {
            for xi in x.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *xi += z;
            }
            x.clone()
        })
        .collect()
}

#[test]
fn esjd_is_invariant_to_relabeling_and_translation() {
    let rows = random_walk(4, 200, 1);
    let base = esjd(&Trajectory::from_states(4, &rows, meta()).unwrap()).unwrap();
    let permuted: Vec<Vec<f64>> = rows.iter().map(|r| vec![r[2], r[0], r[3], r[1]]).collect();
    let shifted: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().zip([3.0, -1.0, 0.5, 8.0]).map(|(a, c)| a + c).collect())
        .collect();
    let p = esjd(&Trajectory::from_states(4, &permuted, meta()).unwrap()).unwrap();
    let s = esjd(&Trajectory::from_states(4, &shifted, meta()).unwrap()).unwrap();
    assert!((p - base).abs() <= 1e-12 * base);
    assert!((s - base).abs() <= 1e-9 * base);
}

#[test]
fn esjd_is_additive_over_segments() {
    let rows = random_walk(3, 301, 2);
    let whole = esjd(&Trajectory::from_states(3, &rows, meta()).unwrap()).unwrap();
    // segments share their boundary state so every jump is counted once
    let cuts = [0, 100, 250, 300];
    let mut weighted = 0.0;
    for w in cuts.windows(2) {
        let seg = Trajectory::from_states(3, &rows[w[0]..=w[1]], meta()).unwrap();
        weighted += esjd(&seg).unwrap() * (w[1] - w[0]) as f64;
    }
    assert!((weighted / 300.0 - whole).abs() <= 1e-12 * whole);
}

#[test]
fn gain_is_one_for_self_comparison() {
    for x in [1e-6, 0.3, 17.0] {
        for m0 in [1, 10, 25] {
            assert_eq!(relative_gain(x, x, 1, m0, m0).unwrap(), 1.0);
        }
    }
}

#[test]
fn coupling_contracts_at_the_step_bound() {
    let (d, m) = (20, 5);
    let t = GaussianTarget::standard(d);
    let gamma = m as f64 / d as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let est = w2_contraction_estimate(
        &t,
        gamma,
        m,
        DirectionLaw::CanonicalSubset,
        200,
        20,
        SliceGradientMode::FiniteDifference { epsilon: 1e-5 },
        &mut rng,
    )
    .unwrap();
    let bound = est.bound.unwrap();
    assert!((bound - 0.75f64.sqrt()).abs() < 1e-15);
    assert!(est.factor <= bound + 3.0 * est.std_error, "{est:?}");
    assert!(est.warning.is_none());
}

#[test]
fn coupling_is_deterministic_at_full_dimension() {
    let d = 6;
    let t = GaussianTarget::standard(d);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for gamma in [0.1, 0.3] {
        let est = w2_contraction_estimate(&t, gamma, d, DirectionLaw::UniformStiefel, 10, 15, SliceGradientMode::Analytic, &mut rng)
            .unwrap();
        assert!((est.factor - (1.0 - gamma)).abs() <= 1e-12, "{est:?}");
    }
}

#[test]
fn coupling_without_step_barely_contracts() {
    let t = GaussianTarget::standard(10);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let est = w2_contraction_estimate(&t, 1e-6, 2, DirectionLaw::UniformStiefel, 20, 10, SliceGradientMode::Analytic, &mut rng)
        .unwrap();
    assert!((est.factor - 1.0).abs() < 1e-5);
    let too_big = w2_contraction_estimate(&t, 0.5, 2, DirectionLaw::UniformStiefel, 5, 5, SliceGradientMode::Analytic, &mut rng)
        .unwrap();
    assert!(too_big.warning.is_some());
}

#[test]
fn exact_draws_pass_the_moment_check() {
    let t = GaussianTarget::diagonal(vec![1.0, -2.0], vec![1.0, 4.0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let rows: Vec<Vec<f64>> = (0..1_000_000)
        .map(|_| {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            vec![1.0 + a, -2.0 + 0.5 * b]
        })
        .collect();
    let traj = Trajectory::from_states(2, &rows, meta()).unwrap();
    let report = moment_stationarity_check(&traj, &t, None).unwrap();
    assert!(report.pass, "{report:?}");
}

#[test]
fn biased_ula_fails_the_moment_check() {
    let t = GaussianTarget::diagonal(vec![0.0; 2], vec![1.0, 4.0]).unwrap();
    let cfg = SamplerConfig {
        ula_step: 0.4,
        ..SamplerConfig::new(KernelKind::ZoUla, 2)
    };
    let run = run_chain(&t, &cfg, 100_000, &[0.0; 2], 7).unwrap();
    let report = moment_stationarity_check(&run.post_burn_in(), &t, None).unwrap();
    assert!(!report.pass, "{report:?}");
    assert!(!run.diagnostics.warnings.is_empty());
}

#[test]
fn rs_hmc_passes_the_moment_check() {
    let t = GaussianTarget::diagonal(vec![0.0; 2], vec![1.0, 4.0]).unwrap();
    let cfg = SamplerConfig {
        leapfrog_steps: 5,
        leapfrog_step: 0.3,
        adaptation: zoslice::AdaptationConfig {
            burn_in_fraction: 0.1,
            ..Default::default()
        },
        ..SamplerConfig::new(KernelKind::RsHmc, 1)
    };
    let run = run_chain(&t, &cfg, 300_000, &[0.0; 2], 8).unwrap();
    let report = moment_stationarity_check(&run.post_burn_in(), &t, None).unwrap();
    assert!(report.pass, "{report:?}");
}
