//! Sweep execution: target construction, start point, leapfrog tuning and
//! the (kernel × m × seed) cells.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use zoslice::targets::{generate_logistic_data, generate_sv_data};
use zoslice::{
    esjd, run_chain_with, zo_sgd_minimize, DirectionLaw, FiniteDiffConfig, GaussianTarget, KernelKind, LearningRate,
    Potential, RoundLedger, SamplerConfig, TargetModel, ZoEngine,
};

use crate::error::{CliError, CliResult};
use crate::spec::{ExperimentSpec, TargetSpec};

pub fn build_target(spec: &TargetSpec) -> CliResult<TargetModel> {
    Ok(match spec {
        TargetSpec::Logistic { n, d, data_seed } => {
            TargetModel::Logistic(generate_logistic_data(*data_seed, *n, *d)?.target()?)
        }
        TargetSpec::Stochvol {
            n,
            data_seed,
            mu,
            phi_raw,
            log_sigma,
        } => TargetModel::StochasticVolatility(generate_sv_data(*data_seed, *n, *mu, *phi_raw, *log_sigma)?.target()?),
        TargetSpec::Gaussian { mean, precisions } => {
            TargetModel::Gaussian(GaussianTarget::diagonal(mean.clone(), precisions.clone())?)
        }
    })
}

pub fn engine_for(spec: &ExperimentSpec) -> CliResult<ZoEngine> {
    Ok(ZoEngine::new(FiniteDiffConfig {
        epsilon: spec.epsilon,
        workers: spec.workers,
    })?)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent stream per cell, stable under reordering of the grids.
pub fn cell_seed(seed: u64, kernel: KernelKind, m: usize) -> u64 {
    let k = KernelKind::ALL.iter().position(|&x| x == kernel).unwrap_or(0) as u64;
    splitmix(splitmix(splitmix(seed) ^ k) ^ m as u64)
}

const PILOT_SALT: u64 = 0x5e_ed0f_1ea9;

/// Approximate mode by ZO-SGD from the origin, or the origin itself.
pub fn find_start(target: &TargetModel, spec: &ExperimentSpec, engine: &ZoEngine) -> CliResult<(Vec<f64>, RoundLedger)> {
    let d = target.dim();
    let origin = vec![0.0; d];
    let Some(st) = spec.start else {
        return Ok((origin, RoundLedger::default()));
    };
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(spec.seeds[0] ^ 0x57a27));
    let (x, ledger) = zo_sgd_minimize(
        target,
        &origin,
        DirectionLaw::CanonicalSubset,
        st.sgd_directions,
        LearningRate::Constant(st.sgd_rate),
        st.sgd_steps,
        engine,
        &mut rng,
    )?;
    Ok((x, ledger))
}

pub fn sampler_config(spec: &ExperimentSpec, kernel: KernelKind, m: usize, leapfrog_steps: usize) -> SamplerConfig {
    SamplerConfig {
        law: spec.law,
        proposal_scale: spec.initial.proposal_scale,
        ula_step: spec.initial.ula_step,
        leapfrog_step: spec.initial.leapfrog_step,
        leapfrog_steps,
        fd: FiniteDiffConfig {
            epsilon: spec.epsilon,
            workers: spec.workers,
        },
        adaptation: spec.adaptation,
        ..SamplerConfig::new(kernel, m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PilotRecord {
    pub m: usize,
    pub leapfrog_steps: usize,
    pub esjd: f64,
    pub esjd_per_step: f64,
}

/// Picks the RS-HMC leapfrog count for `m` by pilot chains over the
/// candidates, stopping once ESJD/L drops below the best so far.
pub fn tune_leapfrog(
    target: &TargetModel,
    spec: &ExperimentSpec,
    m: usize,
    start: &[f64],
    engine: &ZoEngine,
) -> CliResult<(usize, Vec<PilotRecord>)> {
    let mut records = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    for &l in &spec.leapfrog_tuning.candidates {
        let cfg = sampler_config(spec, KernelKind::RsHmc, m, l);
        let seed = cell_seed(spec.seeds[0] ^ PILOT_SALT, KernelKind::RsHmc, m);
        let run = run_chain_with(engine, target, &cfg, spec.leapfrog_tuning.pilot_iterations, start, seed)?;
        let e = esjd(&run.post_burn_in())?;
        let per_step = e / l as f64;
        records.push(PilotRecord {
            m,
            leapfrog_steps: l,
            esjd: e,
            esjd_per_step: per_step,
        });
        match best {
            Some((_, b)) if per_step <= b => break,
            _ => best = Some((l, per_step)),
        }
    }
    Ok((best.map_or(spec.leapfrog_tuning.candidates[0], |b| b.0), records))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub kernel: KernelKind,
    pub m: usize,
    pub leapfrog_steps: usize,
    pub seed: u64,
}

impl Cell {
    pub fn label(&self) -> String {
        format!("{}_m{}_s{}", self.kernel, self.m, self.seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub cell: Cell,
    pub esjd: f64,
    pub acceptance_rate: f64,
    pub final_scale: f64,
    pub divergences: usize,
    pub ledger: RoundLedger,
    pub seconds: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub cell: Cell,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub name: String,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub d: usize,
    pub start_potential: f64,
    pub leapfrog: BTreeMap<usize, usize>,
    pub pilots: Vec<PilotRecord>,
    pub results: Vec<CellResult>,
    pub failures: Vec<CellFailure>,
    pub phases: Vec<Phase>,
    pub ledger: RoundLedger,
}

/// Every cell of the sweep in a fixed order. RWM ignores `m` and runs once
/// per seed.
pub fn plan_cells(spec: &ExperimentSpec, leapfrog: &BTreeMap<usize, usize>) -> Vec<Cell> {
    let mut cells = Vec::new();
    for &kernel in &spec.kernels {
        let grid: Vec<usize> = if kernel.uses_directions() { spec.m.clone() } else { vec![1] };
        for m in grid {
            let leapfrog_steps = if kernel == KernelKind::RsHmc {
                leapfrog.get(&m).copied().unwrap_or(0)
            } else {
                1
            };
            for &seed in &spec.seeds {
                cells.push(Cell {
                    kernel,
                    m,
                    leapfrog_steps,
                    seed,
                });
            }
        }
    }
    cells
}

/// Cells run concurrently only when their worker pools fit on the machine.
pub fn cell_concurrency(workers: usize) -> usize {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    (cores / workers.max(1)).max(1)
}

fn run_cell(
    target: &TargetModel,
    spec: &ExperimentSpec,
    cell: Cell,
    start: &[f64],
    engine: &ZoEngine,
    trajectories: Option<&Path>,
) -> Result<CellResult, CellFailure> {
    let fail = |e: String| CellFailure { cell, error: e };
    let clock = Instant::now();
    let cfg = sampler_config(spec, cell.kernel, cell.m, cell.leapfrog_steps);
    let run = run_chain_with(engine, target, &cfg, spec.t, start, cell_seed(cell.seed, cell.kernel, cell.m))
        .map_err(|e| fail(e.to_string()))?;
    let kept = run.post_burn_in();
    let e = esjd(&kept).map_err(|e| fail(e.to_string()))?;
    if let Some(dir) = trajectories {
        let path = dir.join(format!("{}.csv", cell.label()));
        kept.write_csv(&path).map_err(|e| fail(e.to_string()))?;
    }
    let result = CellResult {
        cell,
        esjd: e,
        acceptance_rate: run.diagnostics.acceptance_rate,
        final_scale: run.diagnostics.final_scale,
        divergences: run.diagnostics.divergences,
        ledger: run.ledger,
        seconds: clock.elapsed().as_secs_f64(),
        warnings: run.diagnostics.warnings,
    };
    info!(
        "{}: esjd {:.3e} acc {:.3} scale {:.3e} ({:.1}s)",
        cell.label(),
        result.esjd,
        result.acceptance_rate,
        result.final_scale,
        result.seconds
    );
    Ok(result)
}

/// Runs the whole sweep. Cell failures are collected, not propagated.
pub fn run_sweep(spec: &ExperimentSpec, trajectories: Option<&Path>) -> CliResult<SweepOutcome> {
    spec.validate()?;
    let engine = engine_for(spec)?;
    let mut phases = Vec::new();
    let mut ledger = RoundLedger::default();

    let clock = Instant::now();
    let target = build_target(&spec.target)?;
    let (start, start_ledger) = find_start(&target, spec, &engine)?;
    ledger.merge(&start_ledger);
    let start_potential = target.value(&start);
    info!("start point U = {start_potential:.4}");
    phases.push(Phase {
        name: "setup".into(),
        seconds: clock.elapsed().as_secs_f64(),
    });

    let clock = Instant::now();
    let mut leapfrog = BTreeMap::new();
    let mut pilots = Vec::new();
    if spec.kernels.contains(&KernelKind::RsHmc) {
        for &m in &spec.m {
            let l = match spec.leapfrog.get(&m) {
                Some(&l) => l,
                None => {
                    let (l, records) = tune_leapfrog(&target, spec, m, &start, &engine)?;
                    info!("m={m}: leapfrog steps {l} from pilots {records:?}");
                    pilots.extend(records);
                    l
                }
            };
            leapfrog.insert(m, l);
        }
    }
    phases.push(Phase {
        name: "leapfrog-tuning".into(),
        seconds: clock.elapsed().as_secs_f64(),
    });

    let clock = Instant::now();
    let cells = plan_cells(spec, &leapfrog);
    let threads = cell_concurrency(spec.workers);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Failed(format!("cell pool: {e}")))?;
    let outcomes: Vec<Result<CellResult, CellFailure>> = pool.install(|| {
        cells
            .par_iter()
            .with_max_len(1)
            .map(|&c| run_cell(&target, spec, c, &start, &engine, trajectories))
            .collect()
    });
    phases.push(Phase {
        name: "cells".into(),
        seconds: clock.elapsed().as_secs_f64(),
    });

    let mut results = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => {
                ledger.merge(&r.ledger);
                results.push(r);
            }
            Err(f) => {
                warn!("{} failed: {}", f.cell.label(), f.error);
                failures.push(f);
            }
        }
    }
    Ok(SweepOutcome {
        d: target.dim(),
        start_potential,
        leapfrog,
        pilots,
        results,
        failures,
        phases,
        ledger,
    })
}
