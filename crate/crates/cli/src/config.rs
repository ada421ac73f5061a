//! Study configuration files.

use std::path::{Path, PathBuf};

use ch2_core::dynamics::IntegratorConfig;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;
use crate::scenario::Scenario;

/// Overrides the directory that relative and absolute `output_dir` values
/// are placed under.
pub const OUTPUT_ROOT_ENV: &str = "CH2_OUTPUT_ROOT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub xi_min: f64,
    pub xi_max: f64,
    pub n: usize,
    /// Nodes of the spatial grid carrying the Eulerian data; defaults to
    /// `3 (n - 1) + 1`.
    #[serde(default)]
    pub spatial_n: Option<usize>,
    /// Put peakon crest labels on cell midpoints.
    #[serde(default = "yes")]
    pub align_crests: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSection {
    /// Energy bound; defaults to the largest energy along the two
    /// normalised trajectories.
    #[serde(rename = "M", default)]
    pub m: Option<f64>,
    #[serde(default = "two")]
    pub chain_length: usize,
    #[serde(default = "default_cap")]
    pub cap: f64,
    #[serde(default)]
    pub knots: Option<usize>,
    #[serde(default)]
    pub passes: Option<usize>,
}

fn two() -> usize {
    2
}

fn default_cap() -> f64 {
    1e3
}

impl Default for MetricSection {
    fn default() -> Self {
        Self { m: None, chain_length: 2, cap: default_cap(), knots: None, passes: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeSection {
    /// Number of grids; each halves `dξ` and `dt` of the previous one.
    #[serde(default = "three")]
    pub levels: usize,
}

fn three() -> usize {
    3
}

impl Default for ConvergeSection {
    fn default() -> Self {
        Self { levels: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: String,
    grid: GridSection,
    integrator: IntegratorConfig,
    #[serde(default)]
    scenario_params: Option<Value>,
    /// Parameters of the second initial state of a metric study.
    #[serde(default)]
    pair_params: Option<Value>,
    #[serde(default)]
    metric: MetricSection,
    #[serde(default)]
    converge: ConvergeSection,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub scenario: Scenario,
    pub pair: Scenario,
    pub grid: GridSection,
    pub integrator: IntegratorConfig,
    pub metric: MetricSection,
    pub converge: ConvergeSection,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let params = raw.scenario_params.unwrap_or(Value::Object(Default::default()));
        let scenario = Scenario::parse(&raw.scenario, params.clone())?;
        let pair = Scenario::parse(&raw.scenario, raw.pair_params.unwrap_or(params))?;
        let g = &raw.grid;
        if !(g.xi_min.is_finite() && g.xi_max.is_finite() && g.xi_min < g.xi_max && g.n >= 2) {
            return Err(CliError::Config(format!(
                "grid needs finite xi_min < xi_max and n >= 2, got [{}, {}] with {}",
                g.xi_min, g.xi_max, g.n
            )));
        }
        if g.spatial_n.is_some_and(|n| n < 2) {
            return Err(CliError::Config("grid.spatial_n must be at least 2".into()));
        }
        if raw.converge.levels == 0 {
            return Err(CliError::Config("converge.levels must be positive".into()));
        }
        if !(raw.metric.cap > 0.0) || raw.metric.m.is_some_and(|m| !(m > 0.0)) {
            return Err(CliError::Config("metric.cap and metric.M must be positive".into()));
        }
        let output_dir = raw.output_dir.unwrap_or_else(|| Path::new("ch2-out").join(&raw.scenario));
        Ok(Self {
            scenario,
            pair,
            grid: raw.grid,
            integrator: raw.integrator,
            metric: raw.metric,
            converge: raw.converge,
            output_dir,
            seed: raw.seed,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// `output_dir`, re-rooted under the override directory when it is set.
    pub fn resolved_output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_ROOT_ENV) {
            Some(root) => reroot(Path::new(&root), &self.output_dir),
            None => self.output_dir.clone(),
        }
    }
}

/// `root` joined with the normal components of `dir`.
pub fn reroot(root: &Path, dir: &Path) -> PathBuf {
    let mut out = root.to_path_buf();
    for c in dir.components() {
        if let std::path::Component::Normal(part) = c {
            out.push(part);
        }
    }
    out
}
