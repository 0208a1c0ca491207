//! Experiment specifications: presets per experiment tag, a TOML file
//! format that overrides any preset field, and command-line overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use zoslice::{AdaptationConfig, DirectionLaw, KernelKind, DEFAULT_EPSILON};

use crate::error::CliError;

/// Desk-scale chain length.
pub const DESK_ITERATIONS: usize = 10_000;
/// Chain length of the published experiments.
pub const PAPER_ITERATIONS: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentTag {
    Logistic25,
    Logistic200,
    Stochvol203,
    GaussianVerify,
    Custom,
}

impl ExperimentTag {
    pub const ALL: [ExperimentTag; 5] = [
        ExperimentTag::Logistic25,
        ExperimentTag::Logistic200,
        ExperimentTag::Stochvol203,
        ExperimentTag::GaussianVerify,
        ExperimentTag::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentTag::Logistic25 => "logistic25",
            ExperimentTag::Logistic200 => "logistic200",
            ExperimentTag::Stochvol203 => "stochvol203",
            ExperimentTag::GaussianVerify => "gaussian-verify",
            ExperimentTag::Custom => "custom",
        }
    }
}

impl fmt::Display for ExperimentTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentTag {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown experiment {s:?}"))
    }
}

/// Target definition. Data sets are regenerated from their seed, so the
/// spec alone pins the posterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetSpec {
    Logistic {
        n: usize,
        d: usize,
        data_seed: u64,
    },
    Stochvol {
        n: usize,
        data_seed: u64,
        mu: f64,
        phi_raw: f64,
        log_sigma: f64,
    },
    /// Diagonal Gaussian given by its mean and per-coordinate precisions.
    Gaussian { mean: Vec<f64>, precisions: Vec<f64> },
}

impl TargetSpec {
    pub fn dim(&self) -> usize {
        match self {
            TargetSpec::Logistic { d, .. } => *d,
            TargetSpec::Stochvol { n, .. } => n + 3,
            TargetSpec::Gaussian { mean, .. } => mean.len(),
        }
    }

    fn validate(&self) -> Result<(), String> {
        match self {
            TargetSpec::Logistic { n, d, .. } if *n == 0 || *d == 0 => Err("logistic n and d must be positive".into()),
            TargetSpec::Stochvol { n, .. } if *n < 2 => Err("stochvol series length must be at least 2".into()),
            TargetSpec::Gaussian { mean, precisions } => {
                if mean.is_empty() || mean.len() != precisions.len() {
                    Err("gaussian mean and precisions must be non-empty and of equal length".into())
                } else if precisions.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
                    Err("gaussian precisions must be positive".into())
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// Initial step sizes; adaptation moves them during burn-in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialScales {
    pub proposal_scale: f64,
    pub ula_step: f64,
    pub leapfrog_step: f64,
}

impl Default for InitialScales {
    fn default() -> Self {
        Self {
            proposal_scale: 0.05,
            ula_step: 0.01,
            leapfrog_step: 0.1,
        }
    }
}

/// Chains start at an approximate mode found by ZO-SGD, which removes the
/// transient from the ESJD window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartSpec {
    pub sgd_steps: usize,
    pub sgd_rate: f64,
    pub sgd_directions: usize,
}

/// Leapfrog-count tuning for RS-HMC: short pilot chains over `candidates`,
/// keeping the count with the best ESJD per leapfrog step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeapfrogTuning {
    pub candidates: Vec<usize>,
    pub pilot_iterations: usize,
}

impl Default for LeapfrogTuning {
    fn default() -> Self {
        Self {
            candidates: vec![2, 3, 5, 8],
            pilot_iterations: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub experiment: ExperimentTag,
    pub target: TargetSpec,
    pub kernels: Vec<KernelKind>,
    pub m: Vec<usize>,
    pub m0: Vec<usize>,
    pub t: usize,
    pub seeds: Vec<u64>,
    pub epsilon: f64,
    pub workers: usize,
    pub law: DirectionLaw,
    pub adaptation: AdaptationConfig,
    pub initial: InitialScales,
    pub start: Option<StartSpec>,
    pub leapfrog_tuning: LeapfrogTuning,
    /// Fixed RS-HMC leapfrog counts keyed by `m`; other `m` are tuned.
    pub leapfrog: BTreeMap<usize, usize>,
    pub save_trajectories: bool,
    pub out: PathBuf,
}

impl ExperimentSpec {
    pub fn preset(tag: ExperimentTag) -> Self {
        let base = Self {
            experiment: tag,
            target: TargetSpec::Logistic {
                n: 200,
                d: 200,
                data_seed: 1,
            },
            kernels: vec![
                KernelKind::Rwm,
                KernelKind::NaiveZoMala,
                KernelKind::RsMala,
                KernelKind::RsHmc,
                KernelKind::Mtm,
            ],
            m: vec![5, 10, 25, 50, 75, 100, 150, 200],
            m0: Vec::new(),
            t: DESK_ITERATIONS,
            seeds: vec![1],
            epsilon: DEFAULT_EPSILON,
            workers: 1,
            law: DirectionLaw::CanonicalSubset,
            adaptation: AdaptationConfig::default(),
            initial: InitialScales::default(),
            start: Some(StartSpec {
                sgd_steps: 3000,
                sgd_rate: 0.002,
                sgd_directions: 50,
            }),
            leapfrog_tuning: LeapfrogTuning::default(),
            leapfrog: BTreeMap::new(),
            save_trajectories: false,
            out: PathBuf::from(format!("results/{tag}")),
        };
        match tag {
            ExperimentTag::Logistic200 | ExperimentTag::Custom => base,
            ExperimentTag::Logistic25 => Self {
                target: TargetSpec::Logistic {
                    n: 25,
                    d: 25,
                    data_seed: 1,
                },
                m: vec![1, 2, 5, 10, 15, 20, 25],
                start: Some(StartSpec {
                    sgd_steps: 3000,
                    sgd_rate: 0.01,
                    sgd_directions: 5,
                }),
                ..base
            },
            ExperimentTag::Stochvol203 => Self {
                target: TargetSpec::Stochvol {
                    n: 200,
                    data_seed: 1,
                    mu: 1.0,
                    phi_raw: 0.5f64.atanh(),
                    log_sigma: 0.0,
                },
                kernels: vec![KernelKind::Rwm, KernelKind::RsMala, KernelKind::RsHmc, KernelKind::Mtm],
                m: vec![5, 10, 25, 50, 75, 100, 150, 203],
                start: Some(StartSpec {
                    sgd_steps: 10_000,
                    sgd_rate: 0.0003,
                    sgd_directions: 50,
                }),
                ..base
            },
            ExperimentTag::GaussianVerify => Self {
                target: TargetSpec::Gaussian {
                    mean: vec![0.0, 0.0],
                    precisions: vec![1.0, 4.0],
                },
                kernels: vec![KernelKind::NaiveZoMala, KernelKind::RsMala, KernelKind::RsHmc, KernelKind::Mtm],
                m: vec![1],
                t: 1_000_000,
                initial: InitialScales {
                    proposal_scale: 1.0,
                    ula_step: 0.01,
                    leapfrog_step: 0.5,
                },
                start: None,
                leapfrog: BTreeMap::from([(1, 5)]),
                ..base
            },
        }
    }

    /// Reads a TOML spec file. `experiment` selects the preset that the
    /// remaining keys override.
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let file: SpecFile = toml::from_str(text).map_err(|e| CliError::Usage(format!("invalid spec file: {e}")))?;
        Ok(file.resolve())
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read spec file {}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            let manifest: crate::manifest::RunManifest = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("invalid manifest {}: {e}", path.display())))?;
            return Ok(manifest.spec);
        }
        Self::from_toml_str(&text)
    }

    /// Spec from a preset name, a TOML spec file or an emitted manifest.
    pub fn load(arg: &str) -> Result<Self, CliError> {
        match arg.parse::<ExperimentTag>() {
            Ok(tag) => Ok(Self::preset(tag)),
            Err(_) => {
                let path = Path::new(arg);
                if path.exists() {
                    Self::from_path(path)
                } else {
                    Err(CliError::Usage(format!(
                        "{arg:?} is neither an experiment ({}) nor an existing spec file",
                        ExperimentTag::ALL.map(|t| t.name()).join(", ")
                    )))
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.target.dim()
    }

    /// The RWM baseline is always run because every gain is relative to it.
    pub fn normalize(&mut self) {
        if self.experiment != ExperimentTag::GaussianVerify && !self.kernels.contains(&KernelKind::Rwm) {
            self.kernels.insert(0, KernelKind::Rwm);
        }
        let mut seen = Vec::new();
        self.kernels.retain(|k| {
            let fresh = !seen.contains(k);
            seen.push(*k);
            fresh
        });
        self.m.sort_unstable();
        self.m.dedup();
        self.m0.sort_unstable();
        self.m0.dedup();
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str, msg: String| Err(CliError::Usage(format!("field `{field}`: {msg}")));
        if let Err(e) = self.target.validate() {
            return bad("target", e);
        }
        let d = self.dim();
        if self.kernels.is_empty() {
            return bad("kernels", "must not be empty".into());
        }
        if self.m.is_empty() {
            return bad("m", "grid must not be empty".into());
        }
        if let Some(&m) = self.m.iter().find(|&&m| m == 0 || m > d) {
            return bad("m", format!("value {m} outside 1..={d}"));
        }
        if let Some(&m0) = self.m0.iter().find(|&&m0| m0 == 0) {
            return bad("m0", format!("value {m0} must be positive"));
        }
        if self.t < 4 {
            return bad("t", format!("need at least 4 iterations, got {}", self.t));
        }
        if self.seeds.is_empty() {
            return bad("seeds", "must not be empty".into());
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return bad("seeds", "must be distinct".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon", format!("must be positive, got {}", self.epsilon));
        }
        if self.workers == 0 {
            return bad("workers", "must be positive".into());
        }
        let a = &self.adaptation;
        if !(0.0..1.0).contains(&a.burn_in_fraction) {
            return bad("adaptation.burn_in_fraction", format!("must lie in [0, 1), got {}", a.burn_in_fraction));
        }
        if a.target_acceptance.is_some_and(|p| !(p > 0.0 && p < 1.0)) {
            return bad("adaptation.target_acceptance", "must lie in (0, 1)".into());
        }
        let s = &self.initial;
        for (name, v) in [
            ("initial.proposal_scale", s.proposal_scale),
            ("initial.ula_step", s.ula_step),
            ("initial.leapfrog_step", s.leapfrog_step),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(name, format!("must be positive, got {v}"));
            }
        }
        if let Some(st) = &self.start {
            if st.sgd_directions == 0 || st.sgd_directions > d {
                return bad("start.sgd_directions", format!("must lie in 1..={d}"));
            }
            if !(st.sgd_rate > 0.0 && st.sgd_rate.is_finite()) {
                return bad("start.sgd_rate", "must be positive".into());
            }
        }
        let lt = &self.leapfrog_tuning;
        if self.kernels.contains(&KernelKind::RsHmc) {
            if lt.candidates.is_empty() || lt.candidates.contains(&0) {
                return bad("leapfrog_tuning.candidates", "must be non-empty and positive".into());
            }
            if lt.pilot_iterations < 4 {
                return bad("leapfrog_tuning.pilot_iterations", "need at least 4".into());
            }
        }
        if self.leapfrog.values().any(|&l| l == 0) {
            return bad("leapfrog", "leapfrog counts must be positive".into());
        }
        Ok(())
    }
}

/// On-disk form: every field optional, applied over the preset.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    experiment: ExperimentTag,
    target: Option<TargetSpec>,
    kernels: Option<Vec<KernelKind>>,
    m: Option<Vec<usize>>,
    m0: Option<Vec<usize>>,
    t: Option<usize>,
    seeds: Option<Vec<u64>>,
    epsilon: Option<f64>,
    workers: Option<usize>,
    law: Option<DirectionLaw>,
    adaptation: Option<AdaptationConfig>,
    initial: Option<InitialScales>,
    start: Option<StartSpec>,
    leapfrog_tuning: Option<LeapfrogTuning>,
    leapfrog: Option<BTreeMap<String, usize>>,
    save_trajectories: Option<bool>,
    out: Option<PathBuf>,
}

impl SpecFile {
    fn resolve(self) -> ExperimentSpec {
        let mut s = ExperimentSpec::preset(self.experiment);
        macro_rules! take {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { s.$f = v; })* };
        }
        take!(target, kernels, m, m0, t, seeds, epsilon, workers, law, adaptation, initial, leapfrog_tuning, save_trajectories, out);
        if self.start.is_some() {
            s.start = self.start;
        }
        if let Some(map) = self.leapfrog {
            // TOML keys are strings; unparsable keys surface in validation
            s.leapfrog = map
                .into_iter()
                .map(|(k, v)| (k.parse().unwrap_or(0), v))
                .collect();
        }
        s
    }
}

/// Command-line overrides applied after loading.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub kernels: Option<Vec<KernelKind>>,
    pub m: Option<Vec<usize>>,
    pub m0: Option<Vec<usize>>,
    pub t: Option<usize>,
    pub seed: Option<u64>,
    pub seeds: Option<Vec<u64>>,
    pub epsilon: Option<f64>,
    pub workers: Option<usize>,
    pub law: Option<DirectionLaw>,
    pub paper_scale: bool,
    pub out: Option<PathBuf>,
    pub save_trajectories: bool,
}

impl Overrides {
    pub fn apply(&self, spec: &mut ExperimentSpec) {
        if let Some(k) = &self.kernels {
            spec.kernels = k.clone();
        }
        if let Some(m) = &self.m {
            spec.m = m.clone();
        }
        if let Some(m0) = &self.m0 {
            spec.m0 = m0.clone();
        }
        if self.paper_scale {
            spec.t = PAPER_ITERATIONS;
        }
        if let Some(t) = self.t {
            spec.t = t;
        }
        if let Some(s) = self.seed {
            spec.seeds = vec![s];
        }
        if let Some(s) = &self.seeds {
            spec.seeds = s.clone();
        }
        if let Some(e) = self.epsilon {
            spec.epsilon = e;
        }
        if let Some(w) = self.workers {
            spec.workers = w;
        }
        if let Some(l) = self.law {
            spec.law = l;
        }
        if let Some(o) = &self.out {
            spec.out = o.clone();
        }
        if self.save_trajectories {
            spec.save_trajectories = true;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for tag in ExperimentTag::ALL {
            let mut s = ExperimentSpec::preset(tag);
            s.normalize();
            s.validate().unwrap_or_else(|e| panic!("{tag}: {e}"));
        }
    }

    #[test]
    fn file_overrides_preset() {
        let s = ExperimentSpec::from_toml_str(
            r#"
            experiment = "logistic25"
            kernels = ["rs-mala", "rwm"]
            m = [5, 10]
            t = 200
            [leapfrog]
            5 = 3
            "#,
        )
        .unwrap();
        assert_eq!(s.dim(), 25);
        assert_eq!(s.kernels, vec![KernelKind::RsMala, KernelKind::Rwm]);
        assert_eq!(s.t, 200);
        assert_eq!(s.leapfrog[&5], 3);
    }

    #[test]
    fn unknown_field_is_a_usage_error() {
        let err = ExperimentSpec::from_toml_str("experiment = \"logistic25\"\nsteps = 4\n").unwrap_err();
        assert!(matches!(err, CliError::Usage(ref msg) if msg.contains("steps")), "{err}");
    }

    #[test]
    fn validation_names_the_field() {
        let mut s = ExperimentSpec::preset(ExperimentTag::Logistic25);
        s.m = vec![5, 30];
        let err = s.validate().unwrap_err().to_string();
        assert!(err.contains("`m`") && err.contains("30"), "{err}");
        let mut s = ExperimentSpec::preset(ExperimentTag::Logistic25);
        s.seeds = vec![3, 3];
        assert!(s.validate().unwrap_err().to_string().contains("seeds"));
    }

    #[test]
    fn rwm_baseline_is_added() {
        let mut s = ExperimentSpec::preset(ExperimentTag::Logistic25);
        s.kernels = vec![KernelKind::RsMala, KernelKind::RsMala];
        s.normalize();
        assert_eq!(s.kernels, vec![KernelKind::Rwm, KernelKind::RsMala]);
    }
}
