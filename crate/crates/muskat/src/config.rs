//! Run configuration and the scenario library.
//!
//! A run is described by one JSON document. Unknown keys are rejected.
//!
//! ```json
//! {
//!   "n_points": 256,
//!   "gamma_count": 9,
//!   "delta": 1.5,
//!   "delta_c": 0.5,
//!   "dt": 1e-4,
//!   "t_final": 0.005,
//!   "scenario": { "name": "stable", "a": 0.1 }
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::GammaDerivative;
use crate::error::{MuskatError, Result};
use crate::evolution::{BackgroundMode, Contour};
use crate::spectral::SpectralGrid;

/// Named initial interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioName {
    /// f = (α, 0).
    Flat,
    /// f = (α, a cos α), heavier fluid below.
    Stable,
    /// f = (α, a cos α) with the density contrast reversed.
    Unstable,
    /// f = (α − b sin α, a cos α); two turnover points when b > 1.
    Turnover,
}

/// Scenario name and parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Which interface.
    pub name: ScenarioName,
    /// Amplitude a ∈ [0, 1].
    #[serde(default)]
    pub a: f64,
    /// Turnover strength b ∈ [0, 3].
    #[serde(default)]
    pub b: f64,
}

impl Scenario {
    /// Sign applied to the configured density contrast factor.
    pub fn rho_sign(&self) -> f64 {
        match self.name {
            ScenarioName::Unstable => -1.0,
            _ => 1.0,
        }
    }
}

/// Samples a scenario on the grid; g₁ is odd and g₂ even.
pub fn scenario(grid: &SpectralGrid, sc: &Scenario) -> Result<Contour> {
    if !(0.0..=1.0).contains(&sc.a) {
        return Err(MuskatError::Config(format!("amplitude a={} outside [0, 1]", sc.a)));
    }
    if !(0.0..=3.0).contains(&sc.b) {
        return Err(MuskatError::Config(format!("turnover strength b={} outside [0, 3]", sc.b)));
    }
    let (a, b) = (sc.a, sc.b);
    Ok(match sc.name {
        ScenarioName::Flat => Contour::flat(grid),
        ScenarioName::Stable | ScenarioName::Unstable => {
            Contour::from_fn(grid, |_| 0.0, move |x| a * x.cos())
        }
        ScenarioName::Turnover => Contour::from_fn(grid, move |x| -b * x.sin(), move |x| a * x.cos()),
    })
}

fn default_rho() -> f64 {
    1.0
}

fn default_record_every() -> usize {
    1
}

/// Everything a family run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Grid size (even).
    pub n_points: usize,
    /// Number of γ-slices (odd, at least 3).
    pub gamma_count: usize,
    /// Initial window half-width δ (halved until the tangent has one sign).
    pub delta: f64,
    /// Strip height δ_c (clamped to the accepted δ).
    pub delta_c: f64,
    /// Time step; when absent, dt = cfl_const/n_points.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Step constant; when absent as well, 0.5/(2π·max(σ_max, δ_c)).
    #[serde(default)]
    pub cfl_const: Option<f64>,
    /// Final |t|.
    pub t_final: f64,
    /// Density contrast factor (ρ₂ − ρ₁)/2.
    #[serde(default = "default_rho")]
    pub rho_factor: f64,
    /// Initial interface.
    pub scenario: Scenario,
    /// Diagnostics cadence in steps.
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    /// Evolve w = ∂γz alongside z.
    #[serde(default)]
    pub evolve_w: bool,
    /// Use the mollified kernel Kⁿ with this n.
    #[serde(default)]
    pub mollify_n: Option<u64>,
    /// Output directory (overridden by the command line).
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Seed for randomized components.
    #[serde(default)]
    pub seed: u64,
    /// Background treatment.
    #[serde(default)]
    pub background: BackgroundMode,
    /// Source of ∂γz in the Cauchy–Riemann residual.
    #[serde(default)]
    pub gamma_derivative: GammaDerivative,
    /// Dump slice modes every this many steps.
    #[serde(default)]
    pub snapshot_every: Option<usize>,
    /// Offsets y at which the extension is reconstructed at the final time.
    #[serde(default)]
    pub extension_y: Vec<f64>,
}

impl RunConfig {
    /// Minimal configuration for a scenario; everything else at defaults.
    pub fn new(scenario: Scenario, n_points: usize, gamma_count: usize, t_final: f64) -> Self {
        Self {
            n_points,
            gamma_count,
            delta: 1.5,
            delta_c: 0.5,
            dt: None,
            cfl_const: None,
            t_final,
            rho_factor: 1.0,
            scenario,
            record_every: 1,
            evolve_w: false,
            mollify_n: None,
            output_dir: None,
            seed: 0,
            background: BackgroundMode::CoEvolved,
            gamma_derivative: GammaDerivative::Auto,
            snapshot_every: None,
            extension_y: Vec::new(),
        }
    }

    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| MuskatError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a JSON file.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| MuskatError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks every invariant before any computation.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(MuskatError::Config(m));
        if self.n_points < 8 || self.n_points % 2 == 1 {
            return fail(format!("n_points must be even and at least 8, got {}", self.n_points));
        }
        if self.gamma_count < 3 || self.gamma_count.is_multiple_of(2) {
            return fail(format!("gamma_count must be odd and at least 3, got {}", self.gamma_count));
        }
        if !(self.delta > 0.0 && 2.0 * self.delta < std::f64::consts::PI) {
            return fail(format!("delta must satisfy 0 < 2*delta < pi, got {}", self.delta));
        }
        if !(self.delta_c > 0.0 && self.delta_c <= self.delta) {
            return fail(format!("delta_c must satisfy 0 < delta_c <= delta, got {}", self.delta_c));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return fail(format!("dt must be positive, got {dt}"));
            }
        }
        if let Some(c) = self.cfl_const {
            if !(c > 0.0 && c.is_finite()) {
                return fail(format!("cfl_const must be positive, got {c}"));
            }
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return fail(format!("t_final must be nonnegative, got {}", self.t_final));
        }
        if !(self.rho_factor != 0.0 && self.rho_factor.is_finite()) {
            return fail(format!("rho_factor must be nonzero, got {}", self.rho_factor));
        }
        if self.record_every == 0 {
            return fail("record_every must be positive".into());
        }
        if self.mollify_n == Some(0) {
            return fail("mollify_n must be positive".into());
        }
        if self.gamma_derivative == GammaDerivative::Evolved && !self.evolve_w {
            return fail("gamma_derivative=evolved requires evolve_w".into());
        }
        Ok(())
    }
}

/// Configuration of the stationary continuation subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationaryConfig {
    /// Operator name (`lambda`, `square`, `conj`, `mode_rotation`, `zero`, `quadratic_transport`).
    pub operator: String,
    /// Wavenumber k₀ of `mode_rotation`.
    #[serde(default)]
    pub k0: f64,
    /// Grid size.
    pub n_points: usize,
    /// f₀ = amplitude·e^{i·mode·x} + constant.
    pub f0_mode: i64,
    /// Amplitude of the f₀ mode.
    #[serde(default = "default_rho")]
    pub f0_amplitude: f64,
    /// Constant added to f₀.
    #[serde(default)]
    pub f0_constant: f64,
    /// Continuation half-width in t.
    pub t_max: f64,
    /// Step.
    pub dt: f64,
    /// Random directions in the hypothesis check.
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Seed of the hypothesis check.
    #[serde(default)]
    pub seed: u64,
    /// Trust-region radius (absent means unbounded).
    #[serde(default)]
    pub trust_region: Option<f64>,
    /// Tolerance of the hypothesis check.
    #[serde(default = "default_hyp_tol")]
    pub tolerance: f64,
}

fn default_trials() -> usize {
    8
}

fn default_hyp_tol() -> f64 {
    1e-8
}

impl StationaryConfig {
    /// Reads and validates a JSON file.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| MuskatError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| MuskatError::Config(e.to_string()))?;
        if cfg.n_points < 8 || cfg.n_points % 2 == 1 {
            return Err(MuskatError::Config("n_points must be even and at least 8".into()));
        }
        if !(cfg.dt > 0.0) || !(cfg.t_max >= 0.0) {
            return Err(MuskatError::Config("dt must be positive and t_max nonnegative".into()));
        }
        Ok(cfg)
    }
}
