//! The `run`, `plot` and `verify` subcommands, independent of argument parsing.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;
use zoslice::KernelKind;

use crate::error::{CliError, CliResult};
use crate::experiment::{plan_cells, run_sweep, SweepOutcome};
use crate::manifest::RunManifest;
use crate::plot::SWEEP_CSV;
use crate::report::{build_rows, efficiency_reports, summarize, write_csv, ReportRow};
use crate::spec::{ExperimentSpec, ExperimentTag};
use crate::verify::{gaussian_suite, property_battery, PropertyTable, VerifyOptions};

pub const VERIFY_CSV: &str = "verify.csv";
pub const REPORTS_DIR: &str = "reports";
pub const TRAJECTORIES_DIR: &str = "trajectories";

/// What a `run` produced.
#[derive(Debug)]
pub enum RunOutput {
    DryRun(String),
    Sweep { dir: PathBuf, rows: Vec<ReportRow>, manifest: Box<RunManifest> },
    Verify { dir: PathBuf, table: PropertyTable },
}

/// Human-readable description of what a run would do.
pub fn plan_text(spec: &ExperimentSpec) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "experiment {} (d = {}, T = {}, seeds {:?})", spec.experiment, spec.dim(), spec.t, spec.seeds);
    let _ = writeln!(s, "law {:?}, epsilon {:e}, workers {}", spec.law, spec.epsilon, spec.workers);
    if spec.experiment == ExperimentTag::GaussianVerify {
        let _ = writeln!(s, "stationarity checks for {:?}, contraction and involution checks", names(&spec.kernels));
        let _ = writeln!(s, "writes {}", spec.out.join(VERIFY_CSV).display());
        return s;
    }
    let cells = plan_cells(spec, &spec.leapfrog);
    let _ = writeln!(s, "m grid {:?}, m0 grid {:?}", spec.m, spec.m0);
    for c in &cells {
        let l = if c.kernel == KernelKind::RsHmc && !spec.leapfrog.contains_key(&c.m) {
            "tuned".to_string()
        } else {
            c.leapfrog_steps.to_string()
        };
        let _ = writeln!(s, "  {:<11} m={:<4} L={:<6} seed {}", c.kernel.name(), c.m, l, c.seed);
    }
    let _ = writeln!(s, "{} cells; writes {}", cells.len(), spec.out.join(SWEEP_CSV).display());
    s
}

fn names(kernels: &[KernelKind]) -> Vec<&'static str> {
    kernels.iter().map(|k| k.name()).collect()
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(CliError::io(dir.display().to_string()))
}

fn write_sweep(spec: &ExperimentSpec, outcome: SweepOutcome) -> CliResult<RunOutput> {
    let dir = spec.out.clone();
    let summaries = summarize(&outcome.results);
    let rows = build_rows(outcome.d, &spec.m, &spec.m0, &summaries);
    let csv_path = dir.join(SWEEP_CSV);
    write_csv(&csv_path, &rows)?;

    let reports_dir = dir.join(REPORTS_DIR);
    create_dir(&reports_dir)?;
    let mut reports = Vec::new();
    for r in efficiency_reports(outcome.d, &summaries) {
        let name = format!("{REPORTS_DIR}/{}_m{}.json", r.kernel, r.m);
        let path = dir.join(&name);
        let text = serde_json::to_string_pretty(&r).map_err(|e| CliError::Failed(format!("{name}: {e}")))?;
        std::fs::write(&path, text).map_err(CliError::io(path.display().to_string()))?;
        reports.push(name);
    }
    for f in &outcome.failures {
        let path = dir.join(format!("FAILED_{}.txt", f.cell.label()));
        std::fs::write(&path, format!("{}\n", f.error)).map_err(CliError::io(path.display().to_string()))?;
    }

    // Freeze the tuned leapfrog counts so the manifest repeats the run exactly.
    let mut frozen = spec.clone();
    frozen.leapfrog.extend(outcome.leapfrog.iter().map(|(&m, &l)| (m, l)));
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").into(),
        spec: frozen,
        d: outcome.d,
        start_potential: outcome.start_potential,
        leapfrog: outcome.leapfrog,
        pilots: outcome.pilots,
        phases: outcome.phases,
        ledger: outcome.ledger,
        csv: SWEEP_CSV.into(),
        reports,
        cells: outcome.results,
        failures: outcome.failures,
    };
    manifest.write(&dir)?;
    if !manifest.failures.is_empty() {
        let labels: Vec<String> = manifest.failures.iter().map(|f| f.cell.label()).collect();
        return Err(CliError::Failed(format!(
            "{} cell(s) failed: {}; partial results in {}",
            labels.len(),
            labels.join(", "),
            dir.display()
        )));
    }
    Ok(RunOutput::Sweep { dir, rows, manifest: Box::new(manifest) })
}

/// Runs a normalized, validated spec.
pub fn cmd_run(spec: &ExperimentSpec, dry_run: bool) -> CliResult<RunOutput> {
    spec.validate()?;
    if dry_run {
        return Ok(RunOutput::DryRun(plan_text(spec)));
    }
    create_dir(&spec.out)?;
    if spec.experiment == ExperimentTag::GaussianVerify {
        let table = gaussian_suite(spec)?;
        table.write_csv(&spec.out.join(VERIFY_CSV))?;
        if !table.all_pass() {
            return Err(CliError::Failed(format!("{table}\nfailed checks: {}", table.failed().join(", "))));
        }
        return Ok(RunOutput::Verify { dir: spec.out.clone(), table });
    }
    let trajectories = if spec.save_trajectories {
        let t = spec.out.join(TRAJECTORIES_DIR);
        create_dir(&t)?;
        Some(t)
    } else {
        None
    };
    let outcome = run_sweep(spec, trajectories.as_deref())?;
    info!("writing {}", spec.out.display());
    write_sweep(spec, outcome)
}

/// The property battery; fails when any check fails.
pub fn cmd_verify(opts: &VerifyOptions, out: Option<&Path>) -> CliResult<PropertyTable> {
    let table = property_battery(opts)?;
    if let Some(dir) = out {
        create_dir(dir)?;
        table.write_csv(&dir.join(VERIFY_CSV))?;
    }
    if !table.all_pass() {
        return Err(CliError::Failed(format!("{table}\nfailed checks: {}", table.failed().join(", "))));
    }
    Ok(table)
}
