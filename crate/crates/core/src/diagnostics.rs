//! Efficiency metrics and verification estimators.
//!
//! ESJD is the per-coordinate mean squared jump between consecutive kept
//! states, rejections included. Gains against RWM and `Eff(m)` are
//! normalized by the parallel rounds one iteration costs on `m₀` workers,
//! `⌈m/m₀⌉·L`.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::directions::DirectionLaw;
use crate::engine::{exact_slice_gradient, RoundLedger, ZoEngine};
use crate::error::{check_dim, Error, Result};
use crate::samplers::{standard_normals, SliceGradientMode};
use crate::targets::{GaussianTarget, GradientOracle, Potential};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub kernel: String,
    pub directions: usize,
    pub leapfrog_steps: usize,
    pub law: Option<DirectionLaw>,
}

/// Kept chain states, stored row-major, with per-iteration acceptance flags.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    d: usize,
    states: Vec<f64>,
    pub accepted: Vec<bool>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn new(d: usize, meta: TrajectoryMeta) -> Self {
        Self {
            d,
            states: Vec::new(),
            accepted: Vec::new(),
            meta,
        }
    }

    pub fn from_states(d: usize, rows: &[Vec<f64>], meta: TrajectoryMeta) -> Result<Self> {
        let mut t = Self::new(d, meta);
        for r in rows {
            t.push(r)?;
        }
        Ok(t)
    }

    pub fn push(&mut self, x: &[f64]) -> Result<()> {
        check_dim(self.d, x.len())?;
        self.states.extend_from_slice(x);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.states.len().checked_div(self.d).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.d..(i + 1) * self.d]
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.states.chunks_exact(self.d.max(1))
    }

    /// States from index `from` onwards, keeping the matching flags.
    pub fn tail(&self, from: usize) -> Trajectory {
        let from = from.min(self.len());
        let flags_from = from.min(self.accepted.len());
        Trajectory {
            d: self.d,
            states: self.states[from * self.d..].to_vec(),
            accepted: self.accepted[flags_from..].to_vec(),
            meta: self.meta.clone(),
        }
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.accepted.is_empty() {
            return 0.0;
        }
        self.accepted.iter().filter(|&&a| a).count() as f64 / self.accepted.len() as f64
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut mu = vec![0.0; self.d];
        for s in self.states() {
            for (m, v) in mu.iter_mut().zip(s) {
                *m += v;
            }
        }
        let n = self.len() as f64;
        mu.iter_mut().for_each(|m| *m /= n);
        mu
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        let mu = self.mean();
        let mut c = DMatrix::zeros(self.d, self.d);
        for s in self.states() {
            for i in 0..self.d {
                let a = s[i] - mu[i];
                for j in 0..self.d {
                    c[(i, j)] += a * (s[j] - mu[j]);
                }
            }
        }
        c / (self.len() as f64 - 1.0)
    }

    /// One row per kept state, columns `x_1..x_d`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        let header: Vec<String> = (1..=self.d).map(|j| format!("x_{j}")).collect();
        writeln!(f, "{}", header.join(","))?;
        for s in self.states() {
            let row: Vec<String> = s.iter().map(|v| format!("{v:e}")).collect();
            writeln!(f, "{}", row.join(","))?;
        }
        f.flush()?;
        Ok(())
    }
}

/// `(1/(d(T−1))) Σᵢ Σⱼ (X_{i+1,j} − X_{i,j})²` over the `T` kept states.
pub fn esjd(traj: &Trajectory) -> Result<f64> {
    let n = traj.len();
    if n < 2 {
        return Err(Error::TooShort { needed: 2, have: n });
    }
    let d = traj.dim();
    let mut total = 0.0;
    for i in 0..n - 1 {
        let a = traj.state(i);
        let b = traj.state(i + 1);
        total += a.iter().zip(b).map(|(p, q)| (q - p) * (q - p)).sum::<f64>();
    }
    Ok(total / (d as f64 * (n - 1) as f64))
}

/// Parallel rounds per iteration relative to one round on `m₀` workers with
/// `L` leapfrog steps: `⌈m/m₀⌉·L`.
pub fn round_cost(leapfrog_steps: usize, m: usize, m0: usize) -> Result<f64> {
    if leapfrog_steps == 0 || m == 0 || m0 == 0 {
        return Err(Error::InvalidConfig("L, m and m₀ must be positive".into()));
    }
    Ok((m.div_ceil(m0) * leapfrog_steps) as f64)
}

/// `Eff(m) = ESJD / (⌈m/m₀⌉·L)`.
pub fn efficiency(esjd: f64, leapfrog_steps: usize, m: usize, m0: usize) -> Result<f64> {
    Ok(esjd / round_cost(leapfrog_steps, m, m0)?)
}

/// `(ESJD_alg / ESJD_rwm) / (⌈m/m₀⌉·L)`.
pub fn relative_gain(esjd_alg: f64, esjd_rwm: f64, leapfrog_steps: usize, m: usize, m0: usize) -> Result<f64> {
    if !(esjd_rwm > 0.0) {
        return Err(Error::Undefined("RWM baseline ESJD is zero"));
    }
    Ok(esjd_alg / esjd_rwm / round_cost(leapfrog_steps, m, m0)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub kernel: String,
    pub d: usize,
    pub m: usize,
    pub m0: usize,
    pub leapfrog_steps: usize,
    pub esjd: f64,
    pub esjd_per_round: f64,
    pub gain_vs_rwm: f64,
    pub eff: f64,
    pub acceptance_rate: f64,
    pub ledger: RoundLedger,
}

/// Result of the synchronous-coupling contraction estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionEstimate {
    /// Mean over pairs of `(‖X_t − Y_t‖/‖x − y‖)^{1/t}`.
    pub factor: f64,
    pub std_error: f64,
    /// `√(1 − γλ)` when `λ` is known.
    pub bound: Option<f64>,
    pub warning: Option<String>,
}

/// Runs `n_pairs` pairs of ZO-ULA chains that share every `V` and `Z`
/// draw, and reports the per-step contraction of their distance.
#[allow(clippy::too_many_arguments)]
pub fn w2_contraction_estimate(
    target: &dyn GradientOracle,
    step: f64,
    m: usize,
    law: DirectionLaw,
    n_pairs: usize,
    n_steps: usize,
    mode: SliceGradientMode,
    rng: &mut dyn RngCore,
) -> Result<ContractionEstimate> {
    if n_pairs == 0 || n_steps == 0 {
        return Err(Error::InvalidConfig("need at least one pair and one step".into()));
    }
    let d = target.dim();
    let scaling = DirectionLaw::scaling(d, m);
    let engine = match mode {
        SliceGradientMode::Analytic => None,
        SliceGradientMode::FiniteDifference { epsilon } => Some(ZoEngine::with_epsilon(epsilon)?),
    };
    let mut ledger = RoundLedger::default();
    let mut full_estimate = |x: &[f64], v: &crate::directions::DirectionMatrix| -> Result<Vec<f64>> {
        let slice = match &engine {
            None => exact_slice_gradient(target, x, v)?,
            Some(e) => e.directional_derivatives(target, x, None, v, &mut ledger)?.values,
        };
        let mut g = vec![0.0; d];
        for (i, si) in slice.iter().enumerate() {
            v.add_column(i, scaling * si, &mut g);
        }
        Ok(g)
    };

    let noise = (2.0 * step).sqrt();
    let mut factors = Vec::with_capacity(n_pairs);
    for _ in 0..n_pairs {
        let mut x = standard_normals(rng, d);
        let mut y = standard_normals(rng, d);
        let initial = dist(&x, &y);
        for _ in 0..n_steps {
            let v = law.sample(rng, d, m)?;
            let z = standard_normals(rng, d);
            let gx = full_estimate(&x, &v)?;
            let gy = full_estimate(&y, &v)?;
            for j in 0..d {
                x[j] += -step * gx[j] + noise * z[j];
                y[j] += -step * gy[j] + noise * z[j];
            }
        }
        factors.push((dist(&x, &y) / initial).powf(1.0 / n_steps as f64));
    }
    let n = factors.len() as f64;
    let factor = factors.iter().sum::<f64>() / n;
    let var = if factors.len() > 1 {
        factors.iter().map(|f| (f - factor).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let curvature = target.curvature();
    let warning = curvature.and_then(|c| {
        let limit = m as f64 / (c.smoothness * d as f64);
        (step > limit).then(|| format!("step {step} exceeds m/(Ld) = {limit}"))
    });
    Ok(ContractionEstimate {
        factor,
        std_error: (var / n).sqrt(),
        bound: curvature.map(|c| (1.0 - step * c.convexity).max(0.0).sqrt()),
        warning,
    })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentThresholds {
    /// Absolute tolerance on each mean coordinate.
    pub mean: f64,
    /// Tolerance on `|Ĉᵢⱼ − Cᵢⱼ| / √(CᵢᵢCⱼⱼ)`.
    pub covariance: f64,
}

impl MomentThresholds {
    /// `0.02·√(tr Λ⁻¹ / d)` for the mean, 3% for covariance entries.
    pub fn defaults_for(target: &GaussianTarget) -> Self {
        let cov = target.covariance();
        let d = cov.nrows() as f64;
        Self {
            mean: 0.02 * (cov.trace() / d).sqrt(),
            covariance: 0.03,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub mean_error: f64,
    pub covariance_error: f64,
    pub thresholds: MomentThresholds,
    pub pass: bool,
}

/// Compares sample moments with the Gaussian's closed form.
pub fn moment_stationarity_check(
    traj: &Trajectory,
    target: &GaussianTarget,
    thresholds: Option<MomentThresholds>,
) -> Result<MomentReport> {
    check_dim(target.dim(), traj.dim())?;
    if traj.len() < 2 {
        return Err(Error::TooShort { needed: 2, have: traj.len() });
    }
    let thresholds = thresholds.unwrap_or_else(|| MomentThresholds::defaults_for(target));
    let mean = traj.mean();
    let mean_error = mean
        .iter()
        .zip(target.mean())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let cov = target.covariance();
    let emp = traj.covariance();
    let d = traj.dim();
    let mut covariance_error: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let scale = (cov[(i, i)] * cov[(j, j)]).sqrt();
            covariance_error = covariance_error.max((emp[(i, j)] - cov[(i, j)]).abs() / scale);
        }
    }
    Ok(MomentReport {
        mean_error,
        covariance_error,
        thresholds,
        pass: mean_error <= thresholds.mean && covariance_error <= thresholds.covariance,
    })
}

/// One measured configuration for [`eff_sweep`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffPoint {
    pub target: String,
    pub kernel: String,
    pub m: usize,
    pub leapfrog_steps: usize,
    pub esjd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffRow {
    pub m0: usize,
    pub m: usize,
    pub eff_ratio: f64,
    pub is_argmax: bool,
}

/// `Eff(m)/Eff(m₀)` for each `m₀` over the measured `m` values. `m₀` must
/// itself be among the measured points; its row has ratio 1.
pub fn eff_sweep(points: &[EffPoint], m0_grid: &[usize]) -> Result<Vec<EffRow>> {
    let first = points
        .first()
        .ok_or_else(|| Error::InvalidConfig("no efficiency points".into()))?;
    if points
        .iter()
        .any(|p| p.target != first.target || p.kernel != first.kernel)
    {
        return Err(Error::InvalidConfig(
            "efficiency points must share target and kernel".into(),
        ));
    }
    let mut rows = Vec::new();
    for &m0 in m0_grid {
        let reference = points
            .iter()
            .find(|p| p.m == m0)
            .ok_or_else(|| Error::InvalidConfig(format!("m₀ = {m0} was not measured")))?;
        let eff0 = efficiency(reference.esjd, reference.leapfrog_steps, m0, m0)?;
        let start = rows.len();
        for p in points {
            let eff = efficiency(p.esjd, p.leapfrog_steps, p.m, m0)?;
            rows.push(EffRow {
                m0,
                m: p.m,
                eff_ratio: eff / eff0,
                is_argmax: false,
            });
        }
        let best = (start..rows.len())
            .max_by(|&a, &b| rows[a].eff_ratio.total_cmp(&rows[b].eff_ratio))
            .expect("at least the reference row");
        rows[best].is_argmax = true;
    }
    Ok(rows)
}
