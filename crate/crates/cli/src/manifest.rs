use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use zoslice::RoundLedger;

use crate::error::{CliError, CliResult};
use crate::experiment::{CellFailure, CellResult, Phase, PilotRecord};
use crate::spec::ExperimentSpec;

/// Everything needed to audit or repeat a run. `spec` is fully resolved,
/// including the tuned leapfrog counts, so running it again reproduces the
/// tables without repeating the pilots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub spec: ExperimentSpec,
    pub d: usize,
    pub start_potential: f64,
    pub leapfrog: BTreeMap<usize, usize>,
    pub pilots: Vec<PilotRecord>,
    pub phases: Vec<Phase>,
    pub ledger: RoundLedger,
    pub csv: String,
    pub reports: Vec<String>,
    pub cells: Vec<CellResult>,
    pub failures: Vec<CellFailure>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl RunManifest {
    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Failed(format!("manifest: {e}")))?;
        std::fs::write(&path, text).map_err(CliError::io(path.display().to_string()))
    }

    pub fn read(dir: &Path) -> CliResult<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(CliError::io(path.display().to_string()))?;
        serde_json::from_str(&text).map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))
    }
}
