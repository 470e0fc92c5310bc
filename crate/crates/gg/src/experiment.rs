//! Reproducible experiment runner: config files, validation, output
//! artifacts, and the braid scripting tool behind the command line.
//!
//! A run is a pure function of its config file: the config normalizes to
//! canonical TOML, its SHA-256 is embedded in every artifact, and all
//! sampling derives from the config seed, so rerunning a manifest
//! reproduces every number. Artifacts are line-oriented (JSON lines for
//! estimates, CSV for fit grids) for diff-based review; only the run
//! manifest carries wall-clock fields.

use crate::bounds::{
    build_embedding, full_certificate, measure_generator_rows, BoundsError,
};
use crate::braid::{braid_entropy_estimate, BraidError, BraidWord, ParseBraidError,
    DEFAULT_ENTROPY_ITERS};
use crate::dynamics::{
    compose, twist_strength_for_rotation, DiffeoTrace, DynamicsError, HamiltonianSystem,
    DEFAULT_STEP,
};
use crate::estimator::{
    additivity_experiment, estimate_phi_bar_with, estimate_phi_with, fit_scaling_model,
    scaling_estimates, vanishing_experiment, EstimatorError, Observable, RunOptions, Sampling,
    TruncationMode,
};
use crate::quasimorphism::{homogenize, QuasimorphismError, QuasimorphismSpec};
use crate::sphere::{SpherePoint, SphericalCap};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::TAU;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};
use thiserror::Error;

/// A config field failed validation; the field name is part of the
/// message contract.
#[derive(Debug, Error)]
#[error("config field `{field}`: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

fn bad(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

fn estimator_exit_code(e: &EstimatorError) -> i32 {
    match e {
        EstimatorError::RetriesExhausted { .. } | EstimatorError::BasepointRejected => 3,
        EstimatorError::NoSupportDeclared
        | EstimatorError::StratifiedUnsupported
        | EstimatorError::BadSchedule
        | EstimatorError::IllConditionedFit
        | EstimatorError::SupportsOverlap { .. } => 2,
        EstimatorError::Dynamics(_) | EstimatorError::Quasimorphism(_) => 4,
    }
}

impl RunError {
    /// Process exit code: 2 for config-induced failures, 3 when the
    /// degenerate-sampling budget is exhausted, 4 for internal errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Io(_) => 4,
            RunError::Estimator(e) => estimator_exit_code(e),
            RunError::Bounds(b) => match b {
                BoundsError::PlacementFailed { .. }
                | BoundsError::BadDimension { .. }
                | BoundsError::MissingEstimate { .. }
                | BoundsError::NegativeDefect { .. } => 2,
                BoundsError::Estimator(e) => estimator_exit_code(e),
                BoundsError::Dynamics(_) | BoundsError::Quasimorphism(_) => 4,
            },
            RunError::Dynamics(_) => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Phi,
    Phibar,
    Vanishing,
    Scaling,
    Additivity,
    Embedding,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ExperimentKind::Phi => "phi",
            ExperimentKind::Phibar => "phibar",
            ExperimentKind::Vanishing => "vanishing",
            ExperimentKind::Scaling => "scaling",
            ExperimentKind::Additivity => "additivity",
            ExperimentKind::Embedding => "embedding",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemPreset {
    Identity,
    Twist,
    TwoTwists,
}

/// The Hamiltonian preset an experiment drives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default = "default_preset")]
    pub preset: SystemPreset,
    #[serde(default = "default_cap_area")]
    pub cap_area: f64,
    /// Full rotations of the twist at the reference radius.
    #[serde(default = "default_turns")]
    pub turns: f64,
    /// Cap center; north pole when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<[f64; 3]>,
    /// Second cap center for the two-twist preset; antipode of the first
    /// when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_center: Option<[f64; 3]>,
}

fn default_preset() -> SystemPreset {
    SystemPreset::Twist
}
fn default_cap_area() -> f64 {
    0.1
}
fn default_turns() -> f64 {
    1.0
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            preset: default_preset(),
            cap_area: default_cap_area(),
            turns: default_turns(),
            center: None,
            second_center: None,
        }
    }
}

impl SystemConfig {
    fn first_center(&self) -> SpherePoint {
        match self.center {
            Some([x, y, z]) => SpherePoint::from_coords(x, y, z),
            None => SpherePoint::from_coords(0.0, 0.0, 1.0),
        }
    }

    fn second_center(&self) -> SpherePoint {
        match self.second_center {
            Some([x, y, z]) => SpherePoint::from_coords(x, y, z),
            None => self.first_center().antipode(),
        }
    }

    fn twist_at(&self, center: SpherePoint) -> HamiltonianSystem {
        let cap = SphericalCap::new(center, self.cap_area);
        let strength = twist_strength_for_rotation(&cap, 0.3, TAU * self.turns);
        HamiltonianSystem::twist_map(cap, strength)
    }

    /// The preset as one trace (the two-twist preset composes both).
    pub fn build_trace(&self, step: f64) -> Result<DiffeoTrace, DynamicsError> {
        let systems = match self.preset {
            SystemPreset::Identity => vec![HamiltonianSystem::Constant { value: 0.0 }],
            SystemPreset::Twist => vec![self.twist_at(self.first_center())],
            SystemPreset::TwoTwists => vec![
                self.twist_at(self.first_center()),
                self.twist_at(self.second_center()),
            ],
        };
        let exps = vec![1; systems.len()];
        compose(&systems, &exps, step)
    }

    /// The two factors of the two-twist preset as separate traces.
    pub fn build_pair(&self, step: f64) -> Result<(DiffeoTrace, DiffeoTrace), DynamicsError> {
        assert_eq!(self.preset, SystemPreset::TwoTwists, "pair needs the two-twist preset");
        let a = compose(&[self.twist_at(self.first_center())], &[1], step)?;
        let b = compose(&[self.twist_at(self.second_center())], &[1], step)?;
        Ok((a, b))
    }
}

/// One experiment run, fully specified. Parses from TOML; flag overrides
/// are applied by the caller before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    #[serde(default = "default_n")]
    pub n: usize,
    /// Monte Carlo sample count per estimate.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_schedule")]
    pub p_schedule: Vec<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub epsilon_grid: Vec<f64>,
    /// Generator count for the embedding experiment.
    #[serde(default = "default_m")]
    pub m: usize,
    /// Lattice vector for the embedding certificate; ones when absent.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub k: Vec<i64>,
    #[serde(default = "default_quasimorphism")]
    pub quasimorphism: String,
    /// Replaces the braid observable with the analytic stand-in
    /// `[all_inside, one_outside]` used to calibrate the scaling fit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<[f64; 2]>,
    #[serde(default = "default_truncation")]
    pub truncation: TruncationMode,
    #[serde(default = "default_sampling")]
    pub sampling: Sampling,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_defect_trials")]
    pub defect_trials: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemConfig>,
}

fn default_n() -> usize {
    4
}
fn default_samples() -> usize {
    2000
}
fn default_schedule() -> Vec<u32> {
    vec![2, 4]
}
fn default_m() -> usize {
    2
}
fn default_quasimorphism() -> String {
    "signature".to_string()
}
fn default_truncation() -> TruncationMode {
    TruncationMode::EnforceReducibleVanishing
}
fn default_sampling() -> Sampling {
    Sampling::Uniform
}
fn default_step() -> f64 {
    DEFAULT_STEP
}
fn default_defect_trials() -> usize {
    200
}
fn default_out() -> PathBuf {
    PathBuf::from("runs")
}

/// Reads and parses a config file. Validation is separate so overrides
/// can be applied in between.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| bad("config", format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| bad("config", e.to_string()))
}

impl ExperimentConfig {
    /// Canonical TOML: parsing this text reproduces the config and the
    /// text byte-identically.
    pub fn normalized_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// SHA-256 over the normalized TOML with the output path blanked:
    /// the hash identifies the experiment and its numbers, not where the
    /// artifacts land. Embedded in every artifact.
    pub fn config_hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out = PathBuf::new();
        let mut h = Sha256::new();
        h.update(canonical.normalized_toml().as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// The preset with defaults filled in.
    pub fn system(&self) -> SystemConfig {
        self.system.clone().unwrap_or_default()
    }

    fn observable(&self) -> Result<Observable, ConfigError> {
        if let Some([all_inside, one_outside]) = self.synthetic {
            if !all_inside.is_finite() || !one_outside.is_finite() {
                return Err(bad("synthetic", "values must be finite"));
            }
            return Ok(Observable::Synthetic {
                all_inside,
                one_outside,
            });
        }
        let spec: QuasimorphismSpec = self
            .quasimorphism
            .parse()
            .map_err(|e: QuasimorphismError| bad("quasimorphism", e.to_string()))?;
        if let QuasimorphismSpec::Linking { i: _, j } = spec {
            if j > self.n {
                return Err(bad(
                    "quasimorphism",
                    format!("linking pair needs strand {j}, but n = {}", self.n),
                ));
            }
        }
        Ok(Observable::Braid(spec))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n < 2 {
            return Err(bad("n", "need at least two configuration points"));
        }
        if self.experiment == ExperimentKind::Vanishing && self.n < 3 {
            return Err(bad("n", "the vanishing experiment needs n >= 3"));
        }
        if self.samples == 0 {
            return Err(bad("samples", "need at least one sample"));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(bad("step", "integrator step must be positive and finite"));
        }
        let needs_schedule = matches!(
            self.experiment,
            ExperimentKind::Phibar
                | ExperimentKind::Scaling
                | ExperimentKind::Additivity
                | ExperimentKind::Embedding
        );
        if needs_schedule
            && (self.p_schedule.len() < 2
                || self.p_schedule.windows(2).any(|w| w[0] >= w[1])
                || self.p_schedule.first().copied() == Some(0))
        {
            return Err(bad(
                "p_schedule",
                "need at least two strictly increasing positive powers",
            ));
        }
        if self.experiment == ExperimentKind::Scaling {
            let mut distinct: Vec<f64> = Vec::new();
            for &e in &self.epsilon_grid {
                if !(e > 0.0 && e <= 1.0) {
                    return Err(bad("epsilon_grid", format!("ratio {e} outside (0, 1]")));
                }
                if !distinct.iter().any(|&d| d == e) {
                    distinct.push(e);
                }
            }
            if distinct.len() < 3 {
                return Err(bad(
                    "epsilon_grid",
                    "the fit needs at least 3 distinct ratios",
                ));
            }
        }
        if self.experiment == ExperimentKind::Embedding {
            if self.m < 1 {
                return Err(bad("m", "need at least one generator"));
            }
            if !self.k.is_empty() && self.k.len() != self.m {
                return Err(bad(
                    "k",
                    format!("lattice vector has {} entries, m = {}", self.k.len(), self.m),
                ));
            }
        }
        self.observable()?;
        if self.sampling == Sampling::Stratified
            && self.truncation != TruncationMode::EnforceReducibleVanishing
        {
            return Err(bad("sampling", "stratified sampling requires truncation"));
        }
        let system = self.system();
        if !(system.cap_area > 0.0 && system.cap_area < 1.0) {
            return Err(bad("system.cap_area", "cap area must lie in (0, 1)"));
        }
        if let Some(c) = system.center {
            if !(c.iter().all(|v| v.is_finite()) && c.iter().any(|&v| v != 0.0)) {
                return Err(bad("system.center", "center must be a nonzero vector"));
            }
        }
        if let Some(c) = system.second_center {
            if !(c.iter().all(|v| v.is_finite()) && c.iter().any(|&v| v != 0.0)) {
                return Err(bad("system.second_center", "center must be a nonzero vector"));
            }
        }
        match self.experiment {
            ExperimentKind::Additivity if system.preset != SystemPreset::TwoTwists => {
                return Err(bad(
                    "system.preset",
                    "the additivity experiment needs the two_twists preset",
                ));
            }
            ExperimentKind::Vanishing | ExperimentKind::Scaling
                if system.preset == SystemPreset::Identity =>
            {
                return Err(bad(
                    "system.preset",
                    "this experiment needs a supported preset, not identity",
                ));
            }
            _ => {}
        }
        Ok(())
    }
}

/// Provenance record written next to every run's artifacts. Only the two
/// time fields vary between reruns of one config.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub wall_time_ms: u64,
    pub unix_time_secs: u64,
}

#[derive(Debug)]
pub struct RunArtifacts {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub manifest: RunManifest,
}

fn tagged_json<T: Serialize>(hash: &str, record: &T) -> String {
    let mut v = serde_json::to_value(record).expect("record serializes");
    v.as_object_mut()
        .expect("record is a JSON object")
        .insert("config_hash".to_string(), hash.into());
    serde_json::to_string(&v).expect("record prints")
}

fn tagged_json_with<T: Serialize>(hash: &str, record: &T, extra: &[(&str, f64)]) -> String {
    let mut v = serde_json::to_value(record).expect("record serializes");
    let obj = v.as_object_mut().expect("record is a JSON object");
    obj.insert("config_hash".to_string(), hash.into());
    for (key, value) in extra {
        obj.insert((*key).to_string(), (*value).into());
    }
    serde_json::to_string(&v).expect("record prints")
}

/// Sizes the global sample-evaluation pool. Setting `GG_SINGLE_THREAD=1`
/// forces one worker; otherwise an explicit count wins over the default
/// (all cores). Estimates do not depend on the pool size.
pub fn configure_workers(workers: Option<usize>) {
    let forced = std::env::var("GG_SINGLE_THREAD").is_ok_and(|v| v == "1");
    let threads = if forced { Some(1) } else { workers };
    if let Some(t) = threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global();
    }
}

/// Validates the config, runs the experiment, and writes its artifacts
/// plus a manifest under the config's output directory.
pub fn run(config: &ExperimentConfig) -> Result<RunArtifacts, RunError> {
    config.validate()?;
    let started = Instant::now();
    let hash = config.config_hash();
    let out_dir = config.out.clone();
    std::fs::create_dir_all(&out_dir)?;
    let mut files = Vec::new();
    let write = |name: &str, contents: String| -> Result<PathBuf, RunError> {
        let path = out_dir.join(name);
        std::fs::write(&path, contents)?;
        Ok(path)
    };

    match config.experiment {
        ExperimentKind::Phi | ExperimentKind::Phibar => {
            let trace = config.system().build_trace(config.step)?;
            let observable = config.observable()?;
            let est = if config.experiment == ExperimentKind::Phi {
                estimate_phi_with(
                    &trace,
                    &observable,
                    config.n,
                    config.samples,
                    config.truncation,
                    config.sampling,
                    &RunOptions::default(),
                    config.seed,
                )?
            } else {
                estimate_phi_bar_with(
                    &trace,
                    &observable,
                    config.n,
                    config.samples,
                    &config.p_schedule,
                    config.truncation,
                    config.sampling,
                    &RunOptions::default(),
                    config.seed,
                )?
            };
            files.push(write("estimates.jsonl", tagged_json(&hash, &est) + "\n")?);
        }
        ExperimentKind::Vanishing => {
            let trace = config.system().build_trace(config.step)?;
            let spec: QuasimorphismSpec = config
                .quasimorphism
                .parse()
                .map_err(|e: QuasimorphismError| bad("quasimorphism", e.to_string()))?;
            let report =
                vanishing_experiment(&trace, &spec, config.n, config.samples, config.seed)?;
            files.push(write(
                "report.json",
                tagged_json(&hash, &report) + "\n",
            )?);
        }
        ExperimentKind::Scaling => {
            let trace = config.system().build_trace(config.step)?;
            let observable = config.observable()?;
            let cells = scaling_estimates(
                &trace,
                &observable,
                config.n,
                &config.epsilon_grid,
                config.samples,
                &config.p_schedule,
                config.sampling,
                config.seed,
            )?;
            let mut lines = String::new();
            for (eps, est) in &cells {
                lines.push_str(&tagged_json_with(&hash, est, &[("epsilon", *eps)]));
                lines.push('\n');
            }
            files.push(write("estimates.jsonl", lines)?);
            let area: f64 = trace.support_caps().iter().map(|c| c.area()).sum();
            let points: Vec<(f64, f64, f64)> = cells
                .iter()
                .map(|(eps, est)| (*eps, est.value, est.stderr))
                .collect();
            let fit = fit_scaling_model(config.n, area, &points)?;
            let csv = format!("# config_hash={hash}\n{}", fit.csv());
            files.push(write("fit.csv", csv)?);
        }
        ExperimentKind::Additivity => {
            let (f1, f2) = config.system().build_pair(config.step)?;
            let observable = config.observable()?;
            let report = additivity_experiment(
                &f1,
                &f2,
                &observable,
                config.n,
                config.samples,
                &config.p_schedule,
                config.seed,
            )?;
            files.push(write(
                "report.json",
                tagged_json(&hash, &report) + "\n",
            )?);
        }
        ExperimentKind::Embedding => {
            let system = config.system();
            let spec = build_embedding(config.m, system.cap_area, system.turns, config.step)?;
            let rows = measure_generator_rows(
                &spec,
                config.n,
                config.samples,
                &config.p_schedule,
                config.defect_trials,
                config.seed,
            )?;
            let mut lines = String::new();
            for row in &rows {
                lines.push_str(&tagged_json(&hash, row));
                lines.push('\n');
            }
            files.push(write("rows.jsonl", lines)?);
            let k: Vec<i64> = if config.k.is_empty() {
                vec![1; config.m]
            } else {
                config.k.clone()
            };
            let cert = full_certificate(&spec, &k, &rows)?;
            files.push(write(
                "certificate.json",
                tagged_json(&hash, &cert) + "\n",
            )?);
        }
    }

    let manifest = RunManifest {
        experiment: config.experiment.to_string(),
        config_hash: hash,
        seed: config.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_ms: started.elapsed().as_millis() as u64,
        unix_time_secs: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let manifest_path = out_dir.join("manifest.json");
    std::fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n",
    )?;
    files.push(manifest_path);

    Ok(RunArtifacts {
        out_dir,
        files,
        manifest,
    })
}

/// Braid scripting surface: every subcommand parses a word in the
/// `"strands; letters"` text form and prints one line.
#[derive(Debug, Clone)]
pub enum BraidCommand {
    Reduce { word: String },
    Permutation { word: String },
    ExpSum { word: String },
    Linking { i: usize, j: usize, word: String },
    Entropy { word: String, iters: usize },
    Signature { word: String },
    Homogenize { quasimorphism: String, word: String, schedule: Vec<u32> },
}

#[derive(Debug, Error)]
pub enum BraidToolError {
    #[error(transparent)]
    Parse(#[from] ParseBraidError),
    #[error(transparent)]
    Braid(#[from] BraidError),
    #[error(transparent)]
    Quasimorphism(#[from] QuasimorphismError),
}

pub fn braid_tool(cmd: &BraidCommand) -> Result<String, BraidToolError> {
    Ok(match cmd {
        BraidCommand::Reduce { word } => BraidWord::from_text(word)?.reduced().to_text(),
        BraidCommand::Permutation { word } => {
            BraidWord::from_text(word)?.permutation().to_cycles_string()
        }
        BraidCommand::ExpSum { word } => BraidWord::from_text(word)?.exponent_sum().to_string(),
        BraidCommand::Linking { i, j, word } => BraidWord::from_text(word)?
            .linking_number(*i, *j)?
            .to_string(),
        BraidCommand::Entropy { word, iters } => {
            let w = BraidWord::from_text(word)?;
            format!("{:.6}", braid_entropy_estimate(&w, *iters))
        }
        BraidCommand::Signature { word } => {
            let w = BraidWord::from_text(word)?;
            QuasimorphismSpec::Signature.evaluate(&w)?.to_string()
        }
        BraidCommand::Homogenize {
            quasimorphism,
            word,
            schedule,
        } => {
            let spec: QuasimorphismSpec = quasimorphism.parse()?;
            let w = BraidWord::from_text(word)?;
            let schedule = if schedule.is_empty() {
                crate::quasimorphism::DEFAULT_POWER_SCHEDULE.to_vec()
            } else {
                schedule.clone()
            };
            format!("{:.6}", homogenize(&spec, &w, &schedule)?.value)
        }
    })
}

/// Default iteration count for the entropy subcommand.
pub const DEFAULT_CLI_ENTROPY_ITERS: usize = DEFAULT_ENTROPY_ITERS;

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn minimal(experiment: ExperimentKind) -> ExperimentConfig {
        ExperimentConfig {
            experiment,
            seed: 11,
            n: 3,
            samples: 5,
            p_schedule: vec![2, 4],
            epsilon_grid: Vec::new(),
            m: 2,
            k: Vec::new(),
            quasimorphism: "signature".to_string(),
            synthetic: None,
            truncation: TruncationMode::None,
            sampling: Sampling::Uniform,
            step: DEFAULT_STEP,
            defect_trials: 20,
            out: PathBuf::from("runs"),
            system: None,
        }
    }

    #[test]
    fn defaults_fill_in_from_minimal_toml() {
        let cfg: ExperimentConfig =
            toml::from_str("experiment = \"phi\"\nseed = 7\n").unwrap();
        assert_eq!(cfg.n, 4);
        assert_eq!(cfg.samples, 2000);
        assert_eq!(cfg.p_schedule, vec![2, 4]);
        assert_eq!(cfg.quasimorphism, "signature");
        assert_eq!(cfg.truncation, TruncationMode::EnforceReducibleVanishing);
        assert_eq!(cfg.system().preset, SystemPreset::Twist);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn validation_names_the_offending_field() {
        let mut cfg = minimal(ExperimentKind::Scaling);
        cfg.epsilon_grid = vec![1.0];
        cfg.truncation = TruncationMode::EnforceReducibleVanishing;
        assert_eq!(cfg.validate().unwrap_err().field, "epsilon_grid");

        let mut cfg = minimal(ExperimentKind::Phi);
        cfg.n = 1;
        assert_eq!(cfg.validate().unwrap_err().field, "n");

        let mut cfg = minimal(ExperimentKind::Phibar);
        cfg.p_schedule = vec![4, 2];
        assert_eq!(cfg.validate().unwrap_err().field, "p_schedule");

        let mut cfg = minimal(ExperimentKind::Phi);
        cfg.quasimorphism = "nonsense".to_string();
        assert_eq!(cfg.validate().unwrap_err().field, "quasimorphism");

        let mut cfg = minimal(ExperimentKind::Phi);
        cfg.quasimorphism = "linking(1,7)".to_string();
        assert_eq!(cfg.validate().unwrap_err().field, "quasimorphism");

        let mut cfg = minimal(ExperimentKind::Phi);
        cfg.sampling = Sampling::Stratified;
        assert_eq!(cfg.validate().unwrap_err().field, "sampling");

        let mut cfg = minimal(ExperimentKind::Additivity);
        cfg.system = Some(SystemConfig::default());
        assert_eq!(cfg.validate().unwrap_err().field, "system.preset");

        let mut cfg = minimal(ExperimentKind::Embedding);
        cfg.k = vec![1, 2, 3];
        assert_eq!(cfg.validate().unwrap_err().field, "k");

        let mut cfg = minimal(ExperimentKind::Phi);
        cfg.system = Some(SystemConfig {
            cap_area: 1.5,
            ..SystemConfig::default()
        });
        assert_eq!(cfg.validate().unwrap_err().field, "system.cap_area");
    }

    #[test]
    fn normalized_toml_round_trips_byte_identically() {
        let mut cfg = minimal(ExperimentKind::Scaling);
        cfg.epsilon_grid = vec![1.0, 0.8, 0.6];
        cfg.synthetic = Some([1.0, 0.5]);
        cfg.system = Some(SystemConfig {
            preset: SystemPreset::Twist,
            cap_area: 0.2,
            turns: 1.5,
            center: Some([0.0, 0.0, 1.0]),
            second_center: None,
        });
        let text = cfg.normalized_toml();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.normalized_toml(), text);
        assert_eq!(back.config_hash(), cfg.config_hash());
    }

    #[test]
    fn identity_phi_run_writes_a_zero_estimate() {
        let dir = tempdir().unwrap();
        let mut cfg = minimal(ExperimentKind::Phi);
        cfg.system = Some(SystemConfig {
            preset: SystemPreset::Identity,
            ..SystemConfig::default()
        });
        cfg.out = dir.path().to_path_buf();
        let artifacts = run(&cfg).unwrap();
        assert_eq!(artifacts.manifest.experiment, "phi");
        let text = std::fs::read_to_string(dir.path().join("estimates.jsonl")).unwrap();
        let v: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
        assert_eq!(v["value"].as_f64().unwrap(), 0.0);
        assert_eq!(v["stderr"].as_f64().unwrap(), 0.0);
        assert_eq!(v["config_hash"].as_str().unwrap(), cfg.config_hash());
        let manifest: RunManifest = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join("manifest.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(manifest.config_hash, cfg.config_hash());
        assert_eq!(manifest.version, env!("CARGO_PKG_VERSION"));
    }

    #[test]
    fn reruns_differ_only_in_manifest_times() {
        let dir_a = tempdir().unwrap();
        let dir_b = tempdir().unwrap();
        let mut cfg = minimal(ExperimentKind::Phi);
        cfg.samples = 4;
        let mut cfg_a = cfg.clone();
        cfg_a.out = dir_a.path().to_path_buf();
        let mut cfg_b = cfg.clone();
        cfg_b.out = dir_b.path().to_path_buf();
        // The hash describes the experiment, not the output location.
        assert_eq!(cfg_a.config_hash(), cfg_b.config_hash());
        run(&cfg_a).unwrap();
        run(&cfg_b).unwrap();
        let bytes_a = std::fs::read(dir_a.path().join("estimates.jsonl")).unwrap();
        let bytes_b = std::fs::read(dir_b.path().join("estimates.jsonl")).unwrap();
        assert_ne!(bytes_a.len(), 0);
        assert_eq!(bytes_a, bytes_b);
        let manifest = |d: &Path| -> serde_json::Value {
            let mut v: serde_json::Value = serde_json::from_str(
                &std::fs::read_to_string(d.join("manifest.json")).unwrap(),
            )
            .unwrap();
            let o = v.as_object_mut().unwrap();
            o.remove("wall_time_ms");
            o.remove("unix_time_secs");
            v
        };
        assert_eq!(manifest(dir_a.path()), manifest(dir_b.path()));
    }

    #[test]
    fn braid_tool_matches_the_oracles() {
        let out = braid_tool(&BraidCommand::Signature {
            word: "2; 1 1 1".to_string(),
        })
        .unwrap();
        assert_eq!(out, "-2");

        let out = braid_tool(&BraidCommand::Entropy {
            word: "3; 1 -2".to_string(),
            iters: 200,
        })
        .unwrap();
        let v: f64 = out.parse().unwrap();
        assert!((v - 0.9624).abs() < 1e-3, "entropy printed {out}");

        let out = braid_tool(&BraidCommand::Permutation {
            word: "3; 1 1".to_string(),
        })
        .unwrap();
        assert_eq!(out, "id");

        let out = braid_tool(&BraidCommand::Permutation {
            word: "3; 1".to_string(),
        })
        .unwrap();
        assert_eq!(out, "(1 2)");

        let out = braid_tool(&BraidCommand::Reduce {
            word: "3; 1 -1 2".to_string(),
        })
        .unwrap();
        assert_eq!(out, "3; 2");

        let out = braid_tool(&BraidCommand::ExpSum {
            word: "3; 1 -2 -2".to_string(),
        })
        .unwrap();
        assert_eq!(out, "-1");

        let out = braid_tool(&BraidCommand::Linking {
            i: 1,
            j: 2,
            word: "2; 1 1".to_string(),
        })
        .unwrap();
        assert_eq!(out, "1");

        let out = braid_tool(&BraidCommand::Homogenize {
            quasimorphism: "exponent_sum".to_string(),
            word: "2; 1 1".to_string(),
            schedule: Vec::new(),
        })
        .unwrap();
        assert_eq!(out, "2.000000");
    }

    #[test]
    fn braid_tool_reports_parse_columns() {
        let err = braid_tool(&BraidCommand::Reduce {
            word: "3: 1 2".to_string(),
        })
        .unwrap_err();
        assert!(err.to_string().contains("column"), "got: {err}");
    }

    #[test]
    fn exit_codes_classify_failures() {
        let config_err: RunError = bad("n", "too small").into();
        assert_eq!(config_err.exit_code(), 2);
        let sampling: RunError = EstimatorError::RetriesExhausted { sample: 3 }.into();
        assert_eq!(sampling.exit_code(), 3);
        let schedule: RunError = EstimatorError::BadSchedule.into();
        assert_eq!(schedule.exit_code(), 2);
        let io: RunError = std::io::Error::other("disk gone").into();
        assert_eq!(io.exit_code(), 4);
    }
}
