//! Fast property battery and the Gaussian verification experiment.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use zoslice::directions::sample_uniform_stiefel;
use zoslice::samplers::{leapfrog_involution_check, SliceGradientMode};
use zoslice::targets::generate_logistic_data;
use zoslice::{
    esjd, moment_stationarity_check, run_chain_with, w2_contraction_estimate, DirectionLaw, DirectionMatrix,
    FiniteDiffConfig, GaussianTarget, GradientOracle, MomentThresholds, Potential, RoundLedger, Trajectory,
    TrajectoryMeta, ZoEngine,
};

use crate::error::{CliError, CliResult};
use crate::experiment::sampler_config;
use crate::spec::{ExperimentSpec, TargetSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    pub value: String,
    pub threshold: String,
    pub pass: bool,
}

impl PropertyCheck {
    fn new(name: impl Into<String>, value: impl Into<String>, threshold: impl Into<String>, pass: bool) -> Self {
        Self {
            name: name.into(),
            value: value.into(),
            threshold: threshold.into(),
            pass,
        }
    }

    fn errored(name: impl Into<String>, e: impl fmt::Display) -> Self {
        Self::new(name, format!("error: {e}"), "-", false)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PropertyTable {
    pub checks: Vec<PropertyCheck>,
}

impl PropertyTable {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect()
    }

    fn push(&mut self, check: CliResult<PropertyCheck>, name: &str) {
        self.checks.push(check.unwrap_or_else(|e| PropertyCheck::errored(name, e)));
    }

    pub fn write_csv(&self, path: &std::path::Path) -> CliResult<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))?;
        for c in &self.checks {
            w.serialize(c).map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))?;
        }
        w.flush().map_err(CliError::io(path.display().to_string()))
    }
}

impl fmt::Display for PropertyTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(8).max(8);
        writeln!(f, "{:<width$}  {:<6}  {:<28}  threshold", "property", "result", "value")?;
        for c in &self.checks {
            let status = if c.pass { "pass" } else { "FAIL" };
            writeln!(f, "{:<width$}  {:<6}  {:<28}  {}", c.name, status, c.value, c.threshold)?;
        }
        Ok(())
    }
}

/// Sampler used for the Haar-uniform law; replaceable so that a broken
/// implementation can be shown to fail the battery.
pub type StiefelSampler = fn(&mut dyn RngCore, usize, usize) -> zoslice::Result<DirectionMatrix>;

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub workers: usize,
    pub stiefel: StiefelSampler,
    pub draws: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            stiefel: sample_uniform_stiefel,
            draws: 20_000,
        }
    }
}

impl VerifyOptions {
    fn sample(&self, law: DirectionLaw, rng: &mut dyn RngCore, d: usize, m: usize) -> zoslice::Result<DirectionMatrix> {
        match law {
            DirectionLaw::UniformStiefel => (self.stiefel)(rng, d, m),
            DirectionLaw::CanonicalSubset => law.sample(rng, d, m),
        }
    }
}

const LAWS: [(DirectionLaw, &str); 2] = [(DirectionLaw::UniformStiefel, "unif"), (DirectionLaw::CanonicalSubset, "canonical")];

fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(&mut *rng)).collect()
}

fn orthonormality(opts: &VerifyOptions) -> CliResult<PropertyCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for (law, _) in LAWS {
        for _ in 0..200 {
            worst = worst.max(opts.sample(law, &mut rng, 20, 7)?.orthonormality_error());
        }
    }
    Ok(PropertyCheck::new("orthonormality", format!("{worst:.2e}"), "<= 1e-10", worst <= 1e-10))
}

/// `(d/m)·E[VVᵀ] = I`, plus `E[V] = 0` for the Haar law: the projector alone
/// cannot see column-sign errors, the first moment can.
fn projector_identity(opts: &VerifyOptions, law: DirectionLaw, tag: &str) -> CliResult<PropertyCheck> {
    let (d, m) = (6, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut proj = DMatrix::<f64>::zeros(d, d);
    let mut first = DMatrix::<f64>::zeros(d, m);
    for _ in 0..opts.draws {
        let v = opts.sample(law, &mut rng, d, m)?;
        proj += v.projector();
        first += v.to_matrix();
    }
    let n = opts.draws as f64;
    let dev = (proj * (DirectionLaw::scaling(d, m) / n) - DMatrix::identity(d, d)).amax();
    let mut pass = dev <= 0.05;
    let mut value = format!("{dev:.4}");
    let mut threshold = "<= 0.05".to_string();
    if law == DirectionLaw::UniformStiefel {
        // Haar entries have variance 1/d
        let se = (1.0 / d as f64 / n).sqrt();
        let mean = (first / n).amax() / se;
        pass &= mean <= 4.0;
        value = format!("{value}, |E V| {mean:.1} SE");
        threshold = format!("{threshold}, <= 4 SE");
    }
    Ok(PropertyCheck::new(format!("projector identity ({tag})"), value, threshold, pass))
}

/// `E‖a + VVᵀb‖² = ((d−m)/d)‖a‖² + (m/d)‖a+b‖²`.
fn norm_identity(opts: &VerifyOptions, law: DirectionLaw, tag: &str) -> CliResult<PropertyCheck> {
    let (d, m) = (6, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let a = DVector::from_vec(normals(&mut rng, d));
    let b = DVector::from_vec(normals(&mut rng, d));
    let expect = (d - m) as f64 / d as f64 * a.norm_squared() + m as f64 / d as f64 * (&a + &b).norm_squared();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..opts.draws {
        let v = opts.sample(law, &mut rng, d, m)?.to_matrix();
        let val = (&a + &v * (v.transpose() * &b)).norm_squared();
        sum += val;
        sum_sq += val * val;
    }
    let n = opts.draws as f64;
    let mean = sum / n;
    let se = ((sum_sq / n - mean * mean) / n).sqrt();
    let z = (mean - expect).abs() / se;
    Ok(PropertyCheck::new(format!("norm identity ({tag})"), format!("{z:.2} SE"), "<= 3 SE", z <= 3.0))
}

fn unbiasedness(opts: &VerifyOptions, engine: &ZoEngine, law: DirectionLaw, tag: &str) -> CliResult<PropertyCheck> {
    let (d, m) = (6, 2);
    let target = generate_logistic_data(3, 20, d)?.target()?;
    let x = [0.3, -0.2, 0.1, 0.5, -0.4, 0.2];
    let exact = target.gradient(&x)?;
    let base = target.value(&x);
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut ledger = RoundLedger::default();
    let mut sum = vec![0.0; d];
    let mut sum_sq = vec![0.0; d];
    for _ in 0..opts.draws {
        let v = opts.sample(law, &mut rng, d, m)?;
        let est = engine.estimate_along(&target, &x, Some(base), v, &mut ledger)?;
        for j in 0..d {
            sum[j] += est.full[j];
            sum_sq[j] += est.full[j] * est.full[j];
        }
    }
    let n = opts.draws as f64;
    let worst = (0..d)
        .map(|j| {
            let mean = sum[j] / n;
            let se = ((sum_sq[j] / n - mean * mean) / n).sqrt();
            (mean - exact[j]).abs() / se
        })
        .fold(0.0, f64::max);
    Ok(PropertyCheck::new(
        format!("gradient unbiasedness ({tag})"),
        format!("{worst:.2} SE"),
        "<= 3 SE",
        worst <= 3.0,
    ))
}

fn involution(opts: &VerifyOptions) -> CliResult<Vec<PropertyCheck>> {
    let target = generate_logistic_data(2, 30, 4)?.target()?;
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let v = opts.sample(DirectionLaw::UniformStiefel, &mut rng, 4, 2)?;
    let x = normals(&mut rng, 4);
    let (s0, k) = ([0.1, -0.3], [0.8, 0.5]);
    let exact = leapfrog_involution_check(&target, &x, &v, &s0, &k, 0.2, 3, SliceGradientMode::Analytic)?;
    let fd = leapfrog_involution_check(
        &target,
        &x,
        &v,
        &s0,
        &k,
        0.2,
        3,
        SliceGradientMode::FiniteDifference {
            epsilon: zoslice::DEFAULT_EPSILON,
        },
    )?;
    Ok(vec![
        PropertyCheck::new(
            "leapfrog involution (analytic)",
            format!("{:.2e}", exact.involution_deviation),
            "<= 1e-8",
            exact.involution_deviation <= 1e-8,
        ),
        PropertyCheck::new(
            "leapfrog involution (finite-diff)",
            format!("{:.2e}", fd.involution_deviation),
            "<= 1e-4",
            fd.involution_deviation <= 1e-4,
        ),
        PropertyCheck::new(
            "leapfrog volume",
            format!("{:.2e}", exact.log_abs_det),
            "<= 1e-6",
            exact.log_abs_det <= 1e-6,
        ),
    ])
}

/// Forward differences against the analytic gradient, relative to
/// `10·ε·|vᵀ∇²U v|`.
fn finite_difference_accuracy(engine: &ZoEngine) -> CliResult<PropertyCheck> {
    let target = generate_logistic_data(4, 25, 25)?.target()?;
    let eps = engine.epsilon();
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let mut worst: f64 = 0.0;
    let mut ledger = RoundLedger::default();
    for _ in 0..20 {
        let x: Vec<f64> = normals(&mut rng, 25).into_iter().map(|z| 0.5 * z).collect();
        let g = target.gradient(&x)?;
        let v = DirectionLaw::UniformStiefel.sample(&mut rng, 25, 5)?;
        let sd = engine.directional_derivatives(&target, &x, None, &v, &mut ledger)?;
        let exact = v.project(&g)?;
        for (i, exact_i) in exact.iter().enumerate() {
            let mut dir = vec![0.0; 25];
            v.add_column(i, 1.0, &mut dir);
            let h = 1e-3;
            let plus: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + h * b).collect();
            let minus: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a - h * b).collect();
            let curv = ((target.value(&plus) - 2.0 * sd.base + target.value(&minus)) / (h * h)).abs();
            worst = worst.max((sd.values[i] - exact_i).abs() / (10.0 * eps * curv.max(1e-2)));
        }
    }
    Ok(PropertyCheck::new(
        "finite-difference accuracy",
        format!("{worst:.3} of bound"),
        "<= 1",
        worst <= 1.0,
    ))
}

fn esjd_hand_cases() -> CliResult<PropertyCheck> {
    let meta = TrajectoryMeta {
        kernel: "hand".into(),
        directions: 1,
        leapfrog_steps: 1,
        law: None,
    };
    let one = esjd(&Trajectory::from_states(1, &[vec![0.0], vec![1.0], vec![3.0]], meta.clone())?)?;
    let two = esjd(&Trajectory::from_states(2, &[vec![0.0, 0.0], vec![1.0, 1.0]], meta.clone())?)?;
    let flat = esjd(&Trajectory::from_states(2, &vec![vec![4.0, 1.0]; 5], meta)?)?;
    let pass = one == 2.5 && two == 1.0 && flat == 0.0;
    Ok(PropertyCheck::new(
        "esjd hand cases",
        format!("{one}, {two}, {flat}"),
        "2.5, 1, 0",
        pass,
    ))
}

/// Rounds must give bit-identical results on the configured pool and on a
/// single worker.
fn round_determinism(engine: &ZoEngine) -> CliResult<PropertyCheck> {
    let target = generate_logistic_data(5, 60, 40)?.target()?;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let x = normals(&mut rng, 40);
    let v = DirectionLaw::UniformStiefel.sample(&mut rng, 40, 17)?;
    let mut ledger = RoundLedger::default();
    let a = engine.directional_derivatives(&target, &x, None, &v, &mut ledger)?;
    let b = ZoEngine::new(FiniteDiffConfig {
        epsilon: engine.epsilon(),
        workers: 1,
    })?
    .directional_derivatives(&target, &x, None, &v, &mut ledger)?;
    let same = a.values.iter().zip(&b.values).all(|(p, q)| p.to_bits() == q.to_bits()) && a.base.to_bits() == b.base.to_bits();
    Ok(PropertyCheck::new(
        "round determinism",
        if same { "bit-identical" } else { "differs" },
        "bit-identical",
        same,
    ))
}

/// The fast battery behind `zoslice verify`.
pub fn property_battery(opts: &VerifyOptions) -> CliResult<PropertyTable> {
    let engine = ZoEngine::new(FiniteDiffConfig {
        epsilon: zoslice::DEFAULT_EPSILON,
        workers: opts.workers,
    })?;
    let mut table = PropertyTable::default();
    table.push(orthonormality(opts), "orthonormality");
    for (law, tag) in LAWS {
        table.push(projector_identity(opts, law, tag), "projector identity");
    }
    for (law, tag) in LAWS {
        table.push(norm_identity(opts, law, tag), "norm identity");
    }
    for (law, tag) in LAWS {
        table.push(unbiasedness(opts, &engine, law, tag), "gradient unbiasedness");
    }
    match involution(opts) {
        Ok(checks) => table.checks.extend(checks),
        Err(e) => table.checks.push(PropertyCheck::errored("leapfrog involution", e)),
    }
    table.push(finite_difference_accuracy(&engine), "finite-difference accuracy");
    table.push(esjd_hand_cases(), "esjd hand cases");
    table.push(round_determinism(&engine), "round determinism");
    Ok(table)
}

/// The `gaussian-verify` experiment: stationarity of every configured kernel
/// on the spec's Gaussian, coupling contraction and leapfrog structure.
pub fn gaussian_suite(spec: &ExperimentSpec) -> CliResult<PropertyTable> {
    spec.validate()?;
    let TargetSpec::Gaussian { mean, precisions } = &spec.target else {
        return Err(CliError::Usage("gaussian-verify needs a gaussian target".into()));
    };
    let target = GaussianTarget::diagonal(mean.clone(), precisions.clone())?;
    let engine = crate::experiment::engine_for(spec)?;
    let thresholds = MomentThresholds {
        mean: 0.02,
        covariance: 0.03,
    };
    let mut table = PropertyTable::default();
    let m = spec.m[0];
    for (i, &kernel) in spec.kernels.iter().enumerate() {
        let name = format!("stationarity ({kernel}, m={m})");
        let l = if kernel == zoslice::KernelKind::RsHmc {
            spec.leapfrog.get(&m).copied().unwrap_or(5)
        } else {
            1
        };
        let cfg = sampler_config(spec, kernel, m, l);
        let check = run_chain_with(&engine, &target, &cfg, spec.t, mean, spec.seeds[0] + i as u64)
            .map_err(CliError::from)
            .and_then(|run| Ok(moment_stationarity_check(&run.post_burn_in(), &target, Some(thresholds))?))
            .map(|r| {
                PropertyCheck::new(
                    name.clone(),
                    format!("mean {:.4}, cov {:.4}", r.mean_error, r.covariance_error),
                    "mean <= 0.02, cov <= 3%",
                    r.pass,
                )
            });
        table.push(check, &name);
    }

    let iso = GaussianTarget::standard(20);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seeds[0]);
    let contraction = w2_contraction_estimate(
        &iso,
        0.25,
        5,
        DirectionLaw::CanonicalSubset,
        200,
        20,
        SliceGradientMode::FiniteDifference { epsilon: spec.epsilon },
        &mut rng,
    )
    .map_err(CliError::from)
    .map(|c| {
        let bound = c.bound.unwrap_or(f64::NAN);
        PropertyCheck::new(
            "contraction (d=20, m=5, step 0.25)",
            format!("{:.4} ± {:.4}", c.factor, c.std_error),
            format!("<= {bound:.4} + 3 SE"),
            c.factor <= bound + 3.0 * c.std_error,
        )
    });
    table.push(contraction, "contraction");
    let full = w2_contraction_estimate(
        &GaussianTarget::standard(6),
        0.3,
        6,
        DirectionLaw::UniformStiefel,
        10,
        15,
        SliceGradientMode::Analytic,
        &mut rng,
    )
    .map_err(CliError::from)
    .map(|c| {
        let dev = (c.factor - 0.7).abs();
        PropertyCheck::new("contraction (m=d, exact)", format!("{dev:.2e} from 1-step"), "<= 1e-12", dev <= 1e-12)
    });
    table.push(full, "contraction (m=d)");
    match involution(&VerifyOptions::default()) {
        Ok(checks) => table.checks.extend(checks),
        Err(e) => table.checks.push(PropertyCheck::errored("leapfrog involution", e)),
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn battery_passes() {
        let table = property_battery(&VerifyOptions::default()).unwrap();
        assert!(table.all_pass(), "{table}");
    }

    #[test]
    fn display_lists_every_check() {
        let table = PropertyTable {
            checks: vec![PropertyCheck::new("a", "1", "<= 2", true), PropertyCheck::new("b", "3", "<= 2", false)],
        };
        let text = table.to_string();
        assert!(text.contains("pass") && text.contains("FAIL"));
        assert_eq!(table.failed(), vec!["b"]);
    }
}
