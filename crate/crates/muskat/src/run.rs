//! Run orchestration from a configuration to the output directory.
//!
//! Outputs in the run directory:
//!
//! * `diagnostics.csv`: `t,h5,arc,rt,margin,cr_residual,radius,z1,z1_speed,cond_sign`
//! * `summary.json`: run parameters and outcome
//! * `z_gamma{i}_t{step}.csv` and `w_gamma{i}_t{step}.csv`: slice modes
//!   (`k,z1_re,z1_im,z2_re,z2_im`) every `snapshot_every` steps
//! * `extension_y{y}.csv`: the reconstructed extension at the final time

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{scenario, RunConfig, StationaryConfig};
use crate::diagnostics::{
    reconstruct_extension, turnover_condition, write_diagnostics_csv, write_extension_csv,
    DiagnosticsRecord, TurnoverReport,
};
use crate::error::{MuskatError, Result};
use crate::evolution::{
    default_dt, evolve_family, muskat_rhs, rt_coefficient, EvolveOptions, FamilyState, KernelChoice,
    StopReason,
};
use crate::localization::{choose_delta, CutoffPair};
use crate::spectral::{PeriodicField, SpectralGrid, C64};
use crate::stationary::{
    continue_stationary, estimate_lipschitz, gronwall_envelope_holds, operators, verify_hypotheses,
    HypothesisReport,
};

/// Process exit status of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    /// Completed.
    Ok = 0,
    /// Invalid configuration.
    ConfigError = 2,
    /// A monitor (margin, arc-chord) failed.
    MonitorFailure = 3,
    /// A numerical failure such as NaN.
    NumericalFailure = 4,
}

impl ExitStatus {
    /// Status for a library error.
    pub fn from_error(e: &MuskatError) -> Self {
        match e {
            MuskatError::Config(_) | MuskatError::Json(_) => Self::ConfigError,
            MuskatError::ArcChord { .. } => Self::MonitorFailure,
            _ => Self::NumericalFailure,
        }
    }

    /// Status for a stop reason.
    pub fn from_stop(reason: StopReason) -> Self {
        match reason {
            StopReason::Completed => Self::Ok,
            StopReason::MarginNonpositive | StopReason::ArcChordViolation => Self::MonitorFailure,
            StopReason::NanDetected => Self::NumericalFailure,
        }
    }

    /// Numeric process code.
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// Turnover status of the initial interface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum TurnoverStatus {
    /// ∂_αf₁ has no zero.
    NoTurnover,
    /// A simple zero with its report.
    Present(TurnoverReport),
    /// A zero with vanishing ∂_α²f₁.
    Degenerate {
        /// Location of the zero.
        location: f64,
        /// ∂_α²f₁ there.
        second_derivative: f64,
    },
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    /// Why the run ended.
    pub stop_reason: StopReason,
    /// Accepted window half-width (absent when no window has a fixed tangent sign).
    pub chosen_delta: Option<f64>,
    /// Number of halvings of the configured δ.
    pub delta_halvings: Option<u32>,
    /// Strip height after clamping to the accepted δ.
    pub delta_c: Option<f64>,
    /// +1 forward, −1 backward (absent when no window was accepted).
    pub direction: Option<f64>,
    /// Signed step.
    pub dt: Option<f64>,
    /// Completed steps.
    pub steps: usize,
    /// Time reached.
    pub t_reached: f64,
    /// Effective density contrast factor.
    pub rho_factor: f64,
    /// Turnover status at t = 0.
    pub turnover: TurnoverStatus,
    /// Last diagnostics record.
    pub final_record: Option<DiagnosticsRecord>,
    /// Non-fatal warnings.
    pub warnings: Vec<String>,
}

/// Summary plus exit status of [`run`].
#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// Written summary.
    pub summary: RunSummary,
    /// Diagnostics time series.
    pub records: Vec<DiagnosticsRecord>,
    /// Exit status.
    pub status: ExitStatus,
    /// Directory the outputs were written to.
    pub output_dir: PathBuf,
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_pair_modes(pair: &[PeriodicField; 2], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "k,z1_re,z1_im,z2_re,z2_im")?;
    let n = pair[0].n_points() as i64;
    let (m1, m2) = (pair[0].modes(), pair[1].modes());
    for (m, (a, b)) in m1.iter().zip(m2).enumerate() {
        let k = m as i64 - n / 2 + 1;
        writeln!(out, "{k},{:.16e},{:.16e},{:.16e},{:.16e}", a.re, a.im, b.re, b.im)?;
    }
    Ok(())
}

fn write_snapshot(dir: &Path, step: usize, state: &FamilyState) -> Result<()> {
    for i in 0..state.slices.len() {
        let mut out = create(dir, &format!("z_gamma{i}_t{step}.csv"))?;
        write_pair_modes(&state.full_slice(i), &mut out)?;
        out.flush()?;
        if let Some(ws) = &state.w_slices {
            let mut out = create(dir, &format!("w_gamma{i}_t{step}.csv"))?;
            write_pair_modes(&ws[i], &mut out)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn initial_turnover(grid: &SpectralGrid, f: &crate::evolution::Contour, rho: f64) -> Result<TurnoverStatus> {
    let has_candidate = f.tangent(grid).0.real_parts().iter().any(|v| *v <= 1e-8);
    if !has_candidate {
        return Ok(TurnoverStatus::NoTurnover);
    }
    let rhs = match muskat_rhs(grid, f, rho) {
        Ok(r) => r,
        Err(MuskatError::DegenerateParameterization(_)) => {
            let zero = PeriodicField::zeros(grid.n_points());
            [zero.clone(), zero]
        }
        Err(e) => return Err(e),
    };
    match turnover_condition(grid, f, &rhs, rho) {
        Ok(Some(r)) => Ok(TurnoverStatus::Present(r)),
        Ok(None) => Ok(TurnoverStatus::NoTurnover),
        Err(MuskatError::DegenerateTurnover { location, second_derivative }) => {
            Ok(TurnoverStatus::Degenerate { location, second_derivative })
        }
        Err(e) => Err(e),
    }
}

fn write_summary(dir: &Path, summary: &RunSummary) -> Result<()> {
    let mut out = create(dir, "summary.json")?;
    serde_json::to_writer_pretty(&mut out, summary)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// Runs one configuration and writes every output into `output_dir`.
///
/// Configuration errors are returned before any output is written. Monitor
/// failures still write all outputs and are reported through the status.
pub fn run(config: &RunConfig, output_dir: &Path) -> Result<RunOutcome> {
    config.validate()?;
    let grid = SpectralGrid::new(config.n_points)?;
    let f = scenario(&grid, &config.scenario)?;
    let rho = config.rho_factor * config.scenario.rho_sign();
    std::fs::create_dir_all(output_dir)?;
    let mut warnings = Vec::new();

    let turnover = initial_turnover(&grid, &f, rho)?;
    let (delta, halvings) = match choose_delta(&grid, &f, config.delta) {
        Ok(v) => v,
        Err(MuskatError::Config(msg)) => {
            warnings.push(msg);
            let summary = RunSummary {
                stop_reason: StopReason::MarginNonpositive,
                chosen_delta: None,
                delta_halvings: None,
                delta_c: None,
                direction: None,
                dt: None,
                steps: 0,
                t_reached: 0.0,
                rho_factor: rho,
                turnover,
                final_record: None,
                warnings,
            };
            write_summary(output_dir, &summary)?;
            let mut out = create(output_dir, "diagnostics.csv")?;
            write_diagnostics_csv(&[], &mut out)?;
            out.flush()?;
            return Ok(RunOutcome {
                summary,
                records: Vec::new(),
                status: ExitStatus::MonitorFailure,
                output_dir: output_dir.to_path_buf(),
            });
        }
        Err(e) => return Err(e),
    };
    if halvings > 0 {
        warnings.push(format!("delta halved {halvings} times to {delta}"));
    }
    let delta_c = config.delta_c.min(delta);
    if delta_c < config.delta_c {
        warnings.push(format!("delta_c clamped from {} to {delta_c}", config.delta_c));
    }
    let cutoffs = CutoffPair::new(&grid, delta, delta_c)?;
    if !cutoffs.satisfies_derivative_proxy() {
        warnings.push(format!(
            "sup norms of c and its first four derivatives {:?} exceed delta",
            cutoffs.bump.derivative_sups
        ));
    }
    if (grid.n_points() as f64) < 64.0 * 2.0 * std::f64::consts::PI / delta {
        warnings.push("grid under-resolves the cutoff transitions".into());
    }

    let sigma = rt_coefficient(&grid, &f, rho);
    let window = cutoffs.window_mask(&grid);
    let win_sigma: Vec<f64> = sigma
        .real_parts()
        .into_iter()
        .zip(&window)
        .filter(|(_, w)| **w)
        .map(|(s, _)| s)
        .collect();
    let min_sigma = win_sigma.iter().copied().fold(f64::INFINITY, f64::min);
    let max_abs_sigma = win_sigma.iter().map(|s| s.abs()).fold(0.0, f64::max);
    let direction = if min_sigma < 0.0 { -1.0 } else { 1.0 };
    let dt = match (config.dt, config.cfl_const) {
        (Some(dt), _) => dt,
        (None, Some(c)) => c / config.n_points as f64,
        (None, None) => default_dt(config.n_points, max_abs_sigma, delta_c),
    };

    let state = FamilyState::initial(&grid, &f, &cutoffs, config.gamma_count, config.evolve_w, direction)?;
    let options = EvolveOptions {
        dt,
        t_final: config.t_final,
        record_every: config.record_every,
        rho_factor: rho,
        background: config.background,
        gamma_derivative: config.gamma_derivative,
        stop_on_margin: true,
        full_diagnostics: true,
        snapshot_every: config.snapshot_every,
        kernel: config.mollify_n.map_or(KernelChoice::Exact, KernelChoice::Mollified),
    };
    let history = evolve_family(state, &options)?;

    let mut out = create(output_dir, "diagnostics.csv")?;
    write_diagnostics_csv(&history.records, &mut out)?;
    out.flush()?;
    for (step, snap) in &history.snapshots {
        write_snapshot(output_dir, *step, snap)?;
    }
    let final_state = &history.final_state;
    for ext in reconstruct_extension(final_state, &config.extension_y) {
        let mut out = create(output_dir, &format!("extension_y{}.csv", ext.y))?;
        write_extension_csv(&grid, &ext, &mut out)?;
        out.flush()?;
    }
    let summary = RunSummary {
        stop_reason: history.stop_reason,
        chosen_delta: Some(delta),
        delta_halvings: Some(halvings),
        delta_c: Some(delta_c),
        direction: Some(direction),
        dt: Some(direction * dt),
        steps: history.steps,
        t_reached: final_state.t,
        rho_factor: rho,
        turnover,
        final_record: history.records.last().cloned(),
        warnings,
    };
    write_summary(output_dir, &summary)?;
    Ok(RunOutcome {
        status: ExitStatus::from_stop(summary.stop_reason),
        summary,
        records: history.records,
        output_dir: output_dir.to_path_buf(),
    })
}

/// Contents of `stationary_summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct StationarySummary {
    /// Hypothesis check at f₀.
    pub hypotheses: HypothesisReport,
    /// Largest CR residual over the continuation.
    pub max_residual: f64,
    /// L² operator-norm estimate of D_fT(f₀).
    pub lipschitz_estimate: f64,
    /// Whether the residual stays inside the Gronwall envelope.
    pub gronwall_ok: bool,
    /// Forward early stop.
    pub stopped_forward: bool,
    /// Backward early stop.
    pub stopped_backward: bool,
}

/// Runs the stationary continuation and writes `residual.csv` and
/// `stationary_summary.json`. Hypothesis failures are reported in the
/// summary and mapped to the monitor-failure status.
pub fn run_stationary(config: &StationaryConfig, output_dir: &Path) -> Result<(StationarySummary, ExitStatus)> {
    let grid = SpectralGrid::new(config.n_points)?;
    let mut op = operators::by_name(&config.operator, config.k0)?;
    if let Some(r) = config.trust_region {
        op = op.with_trust_region(r);
    }
    let (k, amp, c0) = (config.f0_mode as f64, config.f0_amplitude, config.f0_constant);
    let f0 = grid.sample(|x| C64::from_polar(amp, k * x) + c0);
    std::fs::create_dir_all(output_dir)?;
    let hypotheses = verify_hypotheses(&op, &f0, config.trials, config.seed, config.tolerance)?;
    let cont = continue_stationary(&op, &f0, config.t_max, config.dt)?;
    let lipschitz = estimate_lipschitz(&op, &f0, config.trials, config.seed.wrapping_add(1))?;
    let mut out = create(output_dir, "residual.csv")?;
    cont.write_csv(&mut out)?;
    out.flush()?;
    let summary = StationarySummary {
        max_residual: cont.max_residual(),
        gronwall_ok: gronwall_envelope_holds(&cont, lipschitz),
        lipschitz_estimate: lipschitz,
        stopped_forward: cont.stopped_forward,
        stopped_backward: cont.stopped_backward,
        hypotheses,
    };
    let mut out = create(output_dir, "stationary_summary.json")?;
    serde_json::to_writer_pretty(&mut out, &summary)?;
    writeln!(out)?;
    out.flush()?;
    let status = if summary.hypotheses.all_ok() && summary.gronwall_ok {
        ExitStatus::Ok
    } else {
        ExitStatus::MonitorFailure
    };
    Ok((summary, status))
}
