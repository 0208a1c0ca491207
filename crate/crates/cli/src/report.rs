//! Sweep tables. The CSV schema is fixed:
//! `kernel,d,m,m0,L,esjd,gain,eff_ratio,acc_rate,rounds`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use zoslice::{efficiency, relative_gain, round_cost, EfficiencyReport, KernelKind, RoundLedger};

use crate::error::{CliError, CliResult};
use crate::experiment::{CellResult, SweepOutcome};

pub const CSV_COLUMNS: [&str; 10] = ["kernel", "d", "m", "m0", "L", "esjd", "gain", "eff_ratio", "acc_rate", "rounds"];

/// One line of the sweep table. `gain` and `eff_ratio` are empty when
/// undefined (no RWM baseline, or the kernel was not run at `m₀`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub kernel: String,
    pub d: usize,
    pub m: usize,
    pub m0: usize,
    #[serde(rename = "L")]
    pub leapfrog_steps: usize,
    pub esjd: f64,
    pub gain: Option<f64>,
    pub eff_ratio: Option<f64>,
    pub acc_rate: f64,
    pub rounds: u64,
}

/// Seed-averaged summary of one (kernel, m) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub kernel: KernelKind,
    pub m: usize,
    pub leapfrog_steps: usize,
    pub esjd: f64,
    pub acceptance_rate: f64,
    pub seeds: usize,
    pub ledger: RoundLedger,
}

/// Averages ESJD and acceptance over seeds and sums ledgers.
pub fn summarize(results: &[CellResult]) -> Vec<CellSummary> {
    let mut groups: BTreeMap<(usize, usize), Vec<&CellResult>> = BTreeMap::new();
    for r in results {
        let k = KernelKind::ALL.iter().position(|&x| x == r.cell.kernel).unwrap_or(0);
        groups.entry((k, r.cell.m)).or_default().push(r);
    }
    groups
        .into_values()
        .map(|rs| {
            let n = rs.len() as f64;
            let mut ledger = RoundLedger::default();
            for r in &rs {
                ledger.merge(&r.ledger);
            }
            CellSummary {
                kernel: rs[0].cell.kernel,
                m: rs[0].cell.m,
                leapfrog_steps: rs[0].cell.leapfrog_steps,
                esjd: rs.iter().map(|r| r.esjd).sum::<f64>() / n,
                acceptance_rate: rs.iter().map(|r| r.acceptance_rate).sum::<f64>() / n,
                seeds: rs.len(),
                ledger,
            }
        })
        .collect()
}

pub fn rwm_baseline(summaries: &[CellSummary]) -> Option<f64> {
    summaries.iter().find(|s| s.kernel == KernelKind::Rwm).map(|s| s.esjd)
}

/// Table rows. Each direction kernel gets a row with `m₀ = m` (the
/// per-round gain of the gain-vs-m figures) plus one row per grid `m₀`.
/// RWM is repeated at every `m` as the unit baseline.
pub fn build_rows(d: usize, m_grid: &[usize], m0_grid: &[usize], summaries: &[CellSummary]) -> Vec<ReportRow> {
    let baseline = rwm_baseline(summaries);
    let mut rows = Vec::new();
    for s in summaries {
        if s.kernel == KernelKind::Rwm {
            for &m in m_grid {
                rows.push(ReportRow {
                    kernel: s.kernel.name().into(),
                    d,
                    m,
                    m0: m,
                    leapfrog_steps: 1,
                    esjd: s.esjd,
                    gain: baseline.map(|_| 1.0),
                    eff_ratio: Some(1.0),
                    acc_rate: s.acceptance_rate,
                    rounds: s.ledger.rounds,
                });
            }
            continue;
        }
        let mut m0s = vec![s.m];
        m0s.extend(m0_grid.iter().copied().filter(|&m0| m0 != s.m));
        for m0 in m0s {
            let reference = summaries.iter().find(|r| r.kernel == s.kernel && r.m == m0);
            let eff_ratio = reference.and_then(|r| {
                let own = efficiency(s.esjd, s.leapfrog_steps, s.m, m0).ok()?;
                let at_m0 = efficiency(r.esjd, r.leapfrog_steps, m0, m0).ok()?;
                (at_m0 > 0.0).then(|| own / at_m0)
            });
            rows.push(ReportRow {
                kernel: s.kernel.name().into(),
                d,
                m: s.m,
                m0,
                leapfrog_steps: s.leapfrog_steps,
                esjd: s.esjd,
                gain: baseline.and_then(|b| relative_gain(s.esjd, b, s.leapfrog_steps, s.m, m0).ok()),
                eff_ratio,
                acc_rate: s.acceptance_rate,
                rounds: s.ledger.rounds,
            });
        }
    }
    rows
}

/// Per-cell report at `m₀ = m`.
pub fn efficiency_reports(d: usize, summaries: &[CellSummary]) -> Vec<EfficiencyReport> {
    let baseline = rwm_baseline(summaries);
    summaries
        .iter()
        .map(|s| {
            let m0 = s.m;
            let cost = round_cost(s.leapfrog_steps, s.m, m0).unwrap_or(f64::NAN);
            EfficiencyReport {
                kernel: s.kernel.name().into(),
                d,
                m: s.m,
                m0,
                leapfrog_steps: s.leapfrog_steps,
                esjd: s.esjd,
                esjd_per_round: s.esjd / cost,
                gain_vs_rwm: baseline
                    .and_then(|b| relative_gain(s.esjd, b, s.leapfrog_steps, s.m, m0).ok())
                    .unwrap_or(f64::NAN),
                eff: s.esjd / cost,
                acceptance_rate: s.acceptance_rate,
                ledger: s.ledger,
            }
        })
        .collect()
}

pub fn rows_for(spec_m: &[usize], spec_m0: &[usize], out: &SweepOutcome) -> Vec<ReportRow> {
    build_rows(out.d, spec_m, spec_m0, &summarize(&out.results))
}

pub fn write_csv(path: &Path, rows: &[ReportRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))?;
    if rows.is_empty() {
        w.write_record(CSV_COLUMNS)
            .map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(CliError::io(path.display().to_string()))?;
    Ok(())
}

/// Reads a sweep table, rejecting files whose header deviates from the schema.
pub fn read_csv(path: &Path) -> CliResult<Vec<ReportRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))?;
    let header = r.headers().map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))?;
    if header.iter().ne(CSV_COLUMNS) {
        return Err(CliError::Failed(format!(
            "{}: unexpected columns {:?}, expected {:?}",
            path.display(),
            header.iter().collect::<Vec<_>>(),
            CSV_COLUMNS
        )));
    }
    r.deserialize()
        .collect::<Result<Vec<ReportRow>, _>>()
        .map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))
}
