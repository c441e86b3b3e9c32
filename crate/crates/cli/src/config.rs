//! Per-subcommand configuration blocks and run manifests.
//!
//! Every run writes `<command>_manifest.json` echoing the resolved config and
//! the artifact version; re-running a subcommand with `--config` pointing at
//! that manifest (or at a bare config JSON) reproduces the outputs.

use ogplab::mcmc::InitMode;
use ogplab::parisi::SolverConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub artifact: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
}

pub fn write_manifest(
    outdir: &Path,
    command: &str,
    config: &impl Serialize,
) -> ogplab::Result<()> {
    let manifest = Manifest {
        artifact: "ogplab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        config: serde_json::to_value(config)?,
    };
    let path = outdir.join(format!("{command}_manifest.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

/// Load a config block from `--config`: either a bare config JSON or a full
/// manifest (whose `command` must match).
pub fn load_config<T: for<'de> Deserialize<'de>>(
    path: &Path,
    command: &str,
) -> ogplab::Result<T> {
    let raw = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&raw)?;
    if let Some(obj) = value.as_object() {
        if obj.contains_key("artifact") && obj.contains_key("config") {
            let manifest: Manifest = serde_json::from_value(value)?;
            if manifest.command != command {
                return Err(ogplab::Error::InvalidParameter(format!(
                    "manifest is for `{}`, not `{command}`",
                    manifest.command
                )));
            }
            return Ok(serde_json::from_value(manifest.config)?);
        }
    }
    Ok(serde_json::from_value(value)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateConfig {
    pub n: usize,
    pub rho: f64,
    pub lambda: f64,
    pub seed: u64,
    #[serde(default)]
    pub shuffle_support: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub n: usize,
    pub rho: f64,
    pub lambda: f64,
    pub seed: u64,
    /// β for the free-energy and rate-function columns.
    pub beta: f64,
    /// Rate-function window half-width; defaults to 1/(2N).
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default = "default_budget")]
    pub budget: u128,
}

fn default_budget() -> u128 {
    ogplab::oracle::DEFAULT_ENUM_BUDGET
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParisiConfig {
    pub rho: f64,
    pub q: f64,
    pub lambda: f64,
    /// Zero temperature when absent.
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_multistart")]
    pub multistart: usize,
}

fn default_multistart() -> usize {
    2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandscapeConfig {
    pub rho: f64,
    pub lambda: f64,
    /// Explicit q grid; defaults to the standard linear+geometric mesh.
    #[serde(default)]
    pub q_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_curve_multistart")]
    pub multistart: usize,
    /// Run the gap detector at these ε (defaults to the standard ladder).
    #[serde(default)]
    pub epsilons: Option<Vec<f64>>,
}

fn default_curve_multistart() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OgpScanConfig {
    pub rhos: Vec<f64>,
    /// λ = c·√((1/ρ)log(1/ρ)) multipliers…
    #[serde(default)]
    pub multipliers: Option<Vec<f64>>,
    /// …or explicit λ values.
    #[serde(default)]
    pub lambdas: Option<Vec<f64>>,
    #[serde(default)]
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcCliConfig {
    pub n: usize,
    pub rho: f64,
    pub lambda: f64,
    /// Instance seed.
    pub seed: u64,
    pub beta: f64,
    pub steps: u64,
    #[serde(default)]
    pub burn_in: u64,
    #[serde(default = "default_stride")]
    pub record_stride: u64,
    #[serde(default = "default_init")]
    pub init: InitMode,
    #[serde(default)]
    pub exit_interval: Option<(f64, f64)>,
    #[serde(default)]
    pub stop_on_exit: bool,
    #[serde(default = "default_replicas")]
    pub replicas: u64,
    /// Write per-replica binary overlap/energy series.
    #[serde(default)]
    pub write_trajectories: bool,
}

fn default_stride() -> u64 {
    1
}

fn default_init() -> InitMode {
    InitMode::Uniform
}

fn default_replicas() -> u64 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum EstimatorKind {
    Spectral,
    Anneal,
    Exact,
    Random,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub estimator: EstimatorKind,
    pub n: usize,
    pub rho: f64,
    pub lambda: f64,
    /// Instance/run seeds `seed0..seed0+seeds`.
    #[serde(default)]
    pub seed0: u64,
    #[serde(default = "default_seeds")]
    pub seeds: u64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_budget")]
    pub budget: u128,
}

fn default_seeds() -> u64 {
    1
}

fn default_delta() -> f64 {
    0.5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdsConfig {
    pub rhos: Vec<f64>,
}

/// Resolve the output directory: flag, else `OGPLAB_OUT`, else cwd.
pub fn resolve_outdir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("OGPLAB_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}
