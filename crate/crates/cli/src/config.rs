//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use coupled_hmc::analysis::{ConditionKind, LyapunovKind};
use coupled_hmc::coupling::GammaPolicy;
use coupled_hmc::kernel::KernelMode;
use coupled_hmc::targets::suite::SuiteParams;
use serde::Deserialize;

use crate::CliError;

pub const DESK_REPLICAS: usize = 500;
pub const FULL_SCALE_REPLICAS: usize = 100_000;
pub const DESK_GRID_POINTS: usize = 10;
pub const FULL_SCALE_GRID_POINTS: usize = 100;
pub const DEFAULT_T_RANGE: (f64, f64) = (0.25, 2.5);

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub target: TargetSection,
    #[serde(default)]
    pub kernel: KernelSection,
    #[serde(default)]
    pub coupling: CouplingSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    pub constants: Option<ConstantsSection>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    pub name: String,
    pub dim: Option<usize>,
    pub sigma: Option<f64>,
    pub sigma_max: Option<f64>,
    pub sigma_min: Option<f64>,
    pub components: Option<usize>,
    pub side: Option<f64>,
    pub delta: Option<f64>,
    /// Suite seed for the mixture means.
    pub seed: Option<u64>,
}

impl TargetSection {
    pub fn params(&self) -> SuiteParams {
        SuiteParams {
            dim: self.dim,
            sigma: self.sigma,
            sigma_max: self.sigma_max,
            sigma_min: self.sigma_min,
            components: self.components,
            side: self.side,
            delta: self.delta,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    #[serde(default = "default_mode")]
    pub mode: KernelMode,
    #[serde(rename = "T", default = "default_duration")]
    pub duration: f64,
    /// Verlet step; defaults to `T / 20` outside exact mode.
    pub h: Option<f64>,
    #[serde(default = "default_n_steps")]
    pub n_steps: usize,
    /// Seed for `sample` and `trace`; falls back to `[run] seed`.
    pub seed: Option<u64>,
    #[serde(default = "yes")]
    pub record_trace: bool,
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub reject_on_divergence: bool,
}

impl Default for KernelSection {
    fn default() -> Self {
        Self {
            mode: default_mode(),
            duration: default_duration(),
            h: None,
            n_steps: default_n_steps(),
            seed: None,
            record_trace: true,
            x0: None,
            reject_on_divergence: false,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSection {
    #[serde(default = "default_policy")]
    pub gamma_policy: GammaPolicy,
    /// Explicit `γ`; overrides the policy for `trace`.
    pub gamma: Option<f64>,
    /// Omitted means the contractive coupling is applied at every distance.
    pub switch_radius: Option<f64>,
    #[serde(default = "default_threshold")]
    pub merge_threshold: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    pub x0: Option<Vec<f64>>,
    pub y0: Option<Vec<f64>>,
}

impl Default for CouplingSection {
    fn default() -> Self {
        Self {
            gamma_policy: default_policy(),
            gamma: None,
            switch_radius: None,
            merge_threshold: default_threshold(),
            max_steps: default_max_steps(),
            x0: None,
            y0: None,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub replicas: Option<usize>,
    #[serde(rename = "T_grid")]
    pub duration_grid: Option<Vec<f64>>,
    /// Policies compared by `sweep` (default both).
    pub policies: Option<Vec<GammaPolicy>>,
    pub steps_per_trajectory: Option<usize>,
    pub init_lower: Option<f64>,
    pub init_upper: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeName {
    ConvexExact,
    ConvexNumerical,
    General,
    Lyapunov,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(default = "default_regime")]
    pub regime: RegimeName,
    /// `λ` of the Lyapunov regime.
    pub lambda: Option<f64>,
    /// Condition tested by `check` (default: the one matching `regime`).
    pub condition: Option<ConditionKind>,
    /// `h₁`; defaults to the kernel step (zero in exact mode).
    pub h1: Option<f64>,
    pub alpha: Option<f64>,
    #[serde(default = "default_delta0")]
    pub delta0: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_lyapunov_kind")]
    pub lyapunov_kind: LyapunovKind,
    /// Drift-check points; defaults to `(r, 0, …, 0)` for `r` in `radii`.
    pub grid: Option<Vec<Vec<f64>>>,
    pub radii: Option<Vec<f64>>,
    #[serde(default = "default_n_mc")]
    pub n_mc: usize,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            regime: default_regime(),
            lambda: None,
            condition: None,
            h1: None,
            alpha: None,
            delta0: default_delta0(),
            eps: default_eps(),
            lyapunov_kind: default_lyapunov_kind(),
            grid: None,
            radii: None,
            n_mc: default_n_mc(),
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSection {
    #[serde(rename = "L")]
    pub lipschitz_grad: f64,
    #[serde(rename = "K")]
    pub convexity: f64,
    #[serde(rename = "R")]
    pub convexity_radius: f64,
}

fn default_mode() -> KernelMode {
    KernelMode::Adjusted
}
fn default_duration() -> f64 {
    1.0
}
fn default_n_steps() -> usize {
    1000
}
fn yes() -> bool {
    true
}
fn default_policy() -> GammaPolicy {
    GammaPolicy::InverseT
}
fn default_threshold() -> f64 {
    1e-9
}
fn default_max_steps() -> usize {
    10_000
}
fn default_regime() -> RegimeName {
    RegimeName::General
}
fn default_delta0() -> f64 {
    10.0
}
fn default_eps() -> f64 {
    0.1
}
fn default_lyapunov_kind() -> LyapunovKind {
    LyapunovKind::Quadratic
}
fn default_n_mc() -> usize {
    10_000
}

/// `count` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn step(&self) -> f64 {
        match self.kernel.mode {
            KernelMode::Exact => 0.0,
            _ => self.kernel.h.unwrap_or(self.kernel.duration / 20.0),
        }
    }

    pub fn replicas(&self, paper_scale: bool) -> usize {
        match (self.run.replicas, paper_scale) {
            (_, true) => FULL_SCALE_REPLICAS,
            (Some(n), false) => n,
            (None, false) => DESK_REPLICAS,
        }
    }

    pub fn duration_grid(&self, paper_scale: bool) -> Vec<f64> {
        let (lo, hi) = match &self.run.duration_grid {
            Some(g) if !paper_scale => return g.clone(),
            Some(g) if !g.is_empty() => (
                g.iter().copied().fold(f64::INFINITY, f64::min),
                g.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ),
            _ => DEFAULT_T_RANGE,
        };
        let n = if paper_scale {
            FULL_SCALE_GRID_POINTS
        } else {
            DESK_GRID_POINTS
        };
        linspace(lo, hi, n)
    }
}
