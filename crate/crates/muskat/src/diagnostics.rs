//! Certification quantities of a γ-family.
//!
//! The central one is the residual of the Cauchy–Riemann operator
//!
//! ```text
//! A₀(h) = (ic(α)t / (1 + ic′(α)γt)) ∂_α h − ∂_γ h
//! ```
//!
//! which vanishes exactly when the slices fit together into an analytic
//! extension. The module also reconstructs that extension and checks the
//! commutation identities of A₀. The monitor norms and the turnover
//! condition are evaluated here as well.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MuskatError, Result};
use crate::evolution::{muskat_rhs, Contour, EvolveOptions, FamilyState};
use crate::kernels::{arc_chord_norm, coefficients_for_curve, laurent_constant, CurveWeights, KernelTrig};
use crate::localization::CutoffPair;
use crate::spectral::{
    analyticity_radius, interpolate, spectral_derivative, PeriodicField, SpectralGrid, C64, I,
};

/// Tail fraction used for the analyticity-radius column.
pub const RADIUS_TAIL_FRACTION: f64 = 0.5;

/// Data of the turnover condition at the zero Z₁ of ∂_αf₁.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurnoverReport {
    /// Z₁, the ascending zero of ∂_αf₁.
    pub z1_location: f64,
    /// ∂_α²f₁(Z₁).
    pub second_deriv: f64,
    /// p.v.∫K(f(Z₁) − f(β))dβ.
    pub pv_velocity: f64,
    /// dZ₁/dt = −∂_α(rhs₁)(Z₁)/∂_α²f₁(Z₁).
    pub z1_speed: f64,
    /// (dZ₁/dt + rho·pv_velocity)·rho·∂_α²f₁(Z₁); the condition asks for a negative sign.
    pub condition_sign: f64,
}

/// One row of the diagnostics time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    /// Time (signed).
    pub t: f64,
    /// max over slices of ‖z‖_{(H⁵)²}.
    pub h5_norm: f64,
    /// max over slices of ‖X‖_Arc.
    pub arc: f64,
    /// 1/margin when the margin is positive, +∞ otherwise.
    pub rt: f64,
    /// min over slices and the window of −dir·Re L¹ − |Im L²|.
    pub garding_margin: f64,
    /// max over interior γ of ‖A₀(z)‖_{L²_α}.
    pub cr_residual: f64,
    /// Spectral decay rate of the γ = 0 slice.
    pub analyticity_radius_gamma0: f64,
    /// Turnover data of the background contour, when it has a turnover point.
    pub turnover: Option<TurnoverReport>,
}

/// CSV header of [`DiagnosticsRecord`] rows.
pub const DIAGNOSTICS_HEADER: &str = "t,h5,arc,rt,margin,cr_residual,radius,z1,z1_speed,cond_sign";

impl DiagnosticsRecord {
    /// One CSV row with 17 significant digits; absent turnover data is NaN.
    pub fn csv_row(&self) -> String {
        let (z1, speed, sign) = match &self.turnover {
            Some(r) => (r.z1_location, r.z1_speed, r.condition_sign),
            None => (f64::NAN, f64::NAN, f64::NAN),
        };
        [
            self.t,
            self.h5_norm,
            self.arc,
            self.rt,
            self.garding_margin,
            self.cr_residual,
            self.analyticity_radius_gamma0,
            z1,
            speed,
            sign,
        ]
        .iter()
        .map(|v| format!("{v:.16e}"))
        .collect::<Vec<_>>()
        .join(",")
    }
}

/// Writes the header and one row per record.
pub fn write_diagnostics_csv(records: &[DiagnosticsRecord], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{DIAGNOSTICS_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Source of ∂_γz in A₀.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GammaDerivative {
    /// The evolved w when present, centered differences otherwise.
    #[default]
    Auto,
    /// Centered differences on the γ-grid.
    Centered,
    /// The evolved w (error when w is not evolved).
    Evolved,
}

/// (Σ(1+k²)^s|ĝ(k)|²·2π)^{1/2}, the H^s norm with ‖1‖ = √(2π).
pub fn sobolev_norm(g: &PeriodicField, s: f64) -> f64 {
    let n = g.n_points() as i64;
    let half = n / 2;
    g.modes()
        .iter()
        .enumerate()
        .map(|(m, c)| {
            let k = (m as i64 - half + 1) as f64;
            (1.0 + k * k).powf(s) * c.norm_sqr()
        })
        .sum::<f64>()
        .mul_add(2.0 * PI, 0.0)
        .sqrt()
}

fn pair_norm(p: &[PeriodicField; 2], s: f64) -> f64 {
    sobolev_norm(&p[0], s).hypot(sobolev_norm(&p[1], s))
}

fn l2_pair(grid: &SpectralGrid, p: &[Vec<C64>; 2]) -> f64 {
    let h = grid.spacing();
    (h * p.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
}

/// The factor ic(α)t/(1 + ic′(α)γt) at every node.
pub fn cr_factor(cutoffs: &CutoffPair, gamma: f64, t: f64) -> Vec<C64> {
    cutoffs
        .bump
        .c
        .samples()
        .iter()
        .zip(cutoffs.bump.c_p.samples())
        .map(|(c, cp)| I * c.re * t / (1.0 + I * cp.re * gamma * t))
        .collect()
}

fn gamma_derivative_of(
    state: &FamilyState,
    index: usize,
    source: GammaDerivative,
) -> Result<[Vec<C64>; 2]> {
    let use_w = match source {
        GammaDerivative::Auto => state.w_slices.is_some(),
        GammaDerivative::Evolved => {
            if state.w_slices.is_none() {
                return Err(MuskatError::Config("w slices are not evolved".into()));
            }
            true
        }
        GammaDerivative::Centered => false,
    };
    if use_w {
        let w = &state.w_slices.as_ref().expect("checked")[index];
        return Ok([w[0].samples().to_vec(), w[1].samples().to_vec()]);
    }
    if index == 0 || index + 1 >= state.slices.len() {
        return Err(MuskatError::UnsupportedNode(index));
    }
    let inv = 1.0 / (2.0 * state.gamma_spacing());
    let (lo, hi) = (&state.slices[index - 1], &state.slices[index + 1]);
    Ok([0, 1].map(|mu| {
        hi.z[mu]
            .samples()
            .iter()
            .zip(lo.z[mu].samples())
            .map(|(a, b)| (a - b) * inv)
            .collect()
    }))
}

/// A₀(z) at γ-node `index`.
pub fn cr_operator_a0(
    state: &FamilyState,
    index: usize,
    source: GammaDerivative,
) -> Result<[PeriodicField; 2]> {
    let dgz = gamma_derivative_of(state, index, source)?;
    let factor = cr_factor(&state.geom.cutoffs, state.gammas[index], state.t);
    let full = state.full_slice(index);
    Ok([0, 1].map(|mu| {
        let dz = spectral_derivative(&full[mu], 1);
        PeriodicField::new(
            dz.samples()
                .iter()
                .zip(&factor)
                .zip(&dgz[mu])
                .map(|((d, f), g)| f * d - g)
                .collect(),
        )
    }))
}

/// max over interior γ-nodes of ‖A₀(z)‖_{L²_α}.
pub fn cr_residual(state: &FamilyState, source: GammaDerivative) -> Result<f64> {
    let m = state.slices.len();
    let grid = &state.geom.grid;
    let vals: Result<Vec<f64>> = (1..m - 1)
        .into_par_iter()
        .map(|i| {
            let a = cr_operator_a0(state, i, source)?;
            Ok(l2_pair(grid, &[a[0].samples().to_vec(), a[1].samples().to_vec()]))
        })
        .collect();
    Ok(vals?.into_iter().fold(0.0, f64::max))
}

/// The reconstructed extension z(α_j + iy) at one offset y.
#[derive(Debug, Clone)]
pub struct Extension {
    /// Imaginary offset.
    pub y: f64,
    /// Full z₁ and z₂ per node (NaN where the node is outside the strip).
    pub values: [Vec<C64>; 2],
    /// Whether |y| ≤ c(α_j)|t| at each node.
    pub inside: Vec<bool>,
}

fn lagrange_weights(nodes: &[f64], x: f64) -> Vec<f64> {
    (0..nodes.len())
        .map(|i| {
            nodes
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, &xj)| (x - xj) / (nodes[i] - xj))
                .product()
        })
        .collect()
}

/// f^c(α_j + iy) = z(α_j, y/(c(α_j)t)) by four-point interpolation in γ.
pub fn reconstruct_at(state: &FamilyState, node: usize, y: f64) -> Result<[C64; 2]> {
    let c = state.geom.cutoffs.bump.c.samples()[node].re;
    let limit = c.abs() * state.t.abs();
    let center = state.center_index();
    let value = |i: usize| -> [C64; 2] {
        let full = state.full_slice(i);
        [full[0].samples()[node], full[1].samples()[node]]
    };
    if y == 0.0 {
        return Ok(value(center));
    }
    if c == 0.0 || state.t == 0.0 {
        return Err(MuskatError::OutsideDomain { node, y, limit });
    }
    let gstar = y / (c * state.t);
    if gstar.abs() > 1.0 + 1e-14 {
        return Err(MuskatError::OutsideDomain { node, y, limit });
    }
    let gammas = &state.gammas;
    if let Some(i) = gammas.iter().position(|&g| g == gstar) {
        return Ok(value(i));
    }
    let m = gammas.len();
    let below = gammas.iter().rposition(|&g| g <= gstar).unwrap_or(0);
    let start = below.saturating_sub(1).min(m.saturating_sub(4));
    let idx: Vec<usize> = (start..(start + 4).min(m)).collect();
    let xs: Vec<f64> = idx.iter().map(|&i| gammas[i]).collect();
    let wts = lagrange_weights(&xs, gstar);
    let mut out = [C64::new(0.0, 0.0); 2];
    for (&i, wt) in idx.iter().zip(&wts) {
        let v = value(i);
        out[0] += wt * v[0];
        out[1] += wt * v[1];
    }
    Ok(out)
}

/// Reconstructs the extension at every node for each requested offset.
pub fn reconstruct_extension(state: &FamilyState, y_values: &[f64]) -> Vec<Extension> {
    let n = state.geom.grid.n_points();
    y_values
        .iter()
        .map(|&y| {
            let mut values = [Vec::with_capacity(n), Vec::with_capacity(n)];
            let mut inside = Vec::with_capacity(n);
            for j in 0..n {
                match reconstruct_at(state, j, y) {
                    Ok(v) => {
                        values[0].push(v[0]);
                        values[1].push(v[1]);
                        inside.push(true);
                    }
                    Err(_) => {
                        values[0].push(C64::new(f64::NAN, f64::NAN));
                        values[1].push(C64::new(f64::NAN, f64::NAN));
                        inside.push(false);
                    }
                }
            }
            Extension { y, values, inside }
        })
        .collect()
}

/// Writes `alpha,inside,z1_re,z1_im,z2_re,z2_im` rows of one extension.
pub fn write_extension_csv(grid: &SpectralGrid, ext: &Extension, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "alpha,inside,z1_re,z1_im,z2_re,z2_im")?;
    for (j, a) in grid.nodes().iter().enumerate() {
        let (v1, v2) = (ext.values[0][j], ext.values[1][j]);
        writeln!(
            out,
            "{a:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e}",
            u8::from(ext.inside[j]),
            v1.re,
            v1.im,
            v2.re,
            v2.im
        )?;
    }
    Ok(())
}

fn weights_w(cutoffs: &CutoffPair, gamma: f64, t: f64) -> Vec<C64> {
    cutoffs
        .bump
        .c_p
        .samples()
        .iter()
        .map(|cp| 1.0 + I * cp.re * gamma * t)
        .collect()
}

fn div_field(g: &PeriodicField, w: &[C64]) -> PeriodicField {
    PeriodicField::new(g.samples().iter().zip(w).map(|(a, b)| a / b).collect())
}

fn centered(hi: &PeriodicField, lo: &PeriodicField, dgamma: f64) -> PeriodicField {
    hi.sub(lo).scale(C64::new(0.5 / dgamma, 0.0))
}

/// Discrete A₀(h) at γ with centered differences of step `dgamma`.
pub fn a0_discrete(
    cutoffs: &CutoffPair,
    h: &dyn Fn(f64) -> PeriodicField,
    gamma: f64,
    dgamma: f64,
    t: f64,
) -> PeriodicField {
    let factor = cr_factor(cutoffs, gamma, t);
    let dh = spectral_derivative(&h(gamma), 1);
    let dg = centered(&h(gamma + dgamma), &h(gamma - dgamma), dgamma);
    PeriodicField::new(
        dh.samples()
            .iter()
            .zip(&factor)
            .zip(dg.samples())
            .map(|((d, f), g)| f * d - g)
            .collect(),
    )
}

/// Sup-norm residual of the switch identity
/// A₀(∂_αh/W) = (1/W)∂_α A₀(h), W = 1 + ic′γt, with ∂_γ replaced by
/// centered differences of step `dgamma`.
pub fn check_lemma_switch(
    cutoffs: &CutoffPair,
    h: &dyn Fn(f64) -> PeriodicField,
    gamma: f64,
    dgamma: f64,
    t: f64,
) -> f64 {
    let q = |g: f64| div_field(&spectral_derivative(&h(g), 1), &weights_w(cutoffs, g, t));
    let lhs = a0_discrete(cutoffs, &q, gamma, dgamma, t);
    let inner = a0_discrete(cutoffs, h, gamma, dgamma, t);
    let rhs = div_field(&spectral_derivative(&inner, 1), &weights_w(cutoffs, gamma, t));
    lhs.sub(&rhs).sup_norm()
}

/// A kernel K̃ returning its value and derivative at a complex argument.
pub type KernelFn<'a> = dyn Fn(C64) -> (C64, C64) + Sync + 'a;

fn kernel_sum(
    grid: &SpectralGrid,
    kernel: &KernelFn<'_>,
    h: &PeriodicField,
    density: &[C64],
) -> Result<PeriodicField> {
    let n = grid.n_points();
    let step = grid.spacing();
    let hs = h.samples();
    let rows: Result<Vec<C64>> = (0..n)
        .map(|j| {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..n {
                let (v, _) = kernel(hs[j] - hs[k]);
                if !v.is_finite() {
                    return Err(MuskatError::Numerical(format!(
                        "kernel is singular between nodes {j} and {k}"
                    )));
                }
                acc += v * density[k];
            }
            Ok(acc * step)
        })
        .collect();
    Ok(PeriodicField::new(rows?))
}

/// Sup-norm residual of the kernel identity
///
/// ```text
/// A₀ ∫K̃(h(α)−h(β))X(β)W(β)dβ
///   = ∫K̃′(h(α)−h(β))(A₀h(α) − A₀h(β))X(β)W(β)dβ + ∫K̃(h(α)−h(β))A₀(X)(β)W(β)dβ
/// ```
///
/// with ∂_γ replaced by centered differences of step `dgamma`.
pub fn check_lemma_for_m1(
    grid: &SpectralGrid,
    kernel: &KernelFn<'_>,
    x: &dyn Fn(f64) -> PeriodicField,
    h: &dyn Fn(f64) -> PeriodicField,
    cutoffs: &CutoffPair,
    gamma: f64,
    dgamma: f64,
    t: f64,
) -> Result<f64> {
    let integral = |g: f64| -> Result<PeriodicField> {
        let w = weights_w(cutoffs, g, t);
        let xs = x(g);
        let dens: Vec<C64> = xs.samples().iter().zip(&w).map(|(a, b)| a * b).collect();
        kernel_sum(grid, kernel, &h(g), &dens)
    };
    let centre = integral(gamma)?;
    let hi = integral(gamma + dgamma)?;
    let lo = integral(gamma - dgamma)?;
    let factor = cr_factor(cutoffs, gamma, t);
    let d_centre = spectral_derivative(&centre, 1);
    let lhs: Vec<C64> = (0..grid.n_points())
        .map(|j| {
            factor[j] * d_centre.samples()[j] - (hi.samples()[j] - lo.samples()[j]) / (2.0 * dgamma)
        })
        .collect();

    let a0h = a0_discrete(cutoffs, h, gamma, dgamma, t);
    let a0x = a0_discrete(cutoffs, x, gamma, dgamma, t);
    let w = weights_w(cutoffs, gamma, t);
    let hs = h(gamma);
    let xs = x(gamma);
    let n = grid.n_points();
    let step = grid.spacing();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let mut rhs = C64::new(0.0, 0.0);
        for k in 0..n {
            let (v, dv) = kernel(hs.samples()[j] - hs.samples()[k]);
            if !v.is_finite() || !dv.is_finite() {
                return Err(MuskatError::Numerical(format!(
                    "kernel is singular between nodes {j} and {k}"
                )));
            }
            rhs += dv * (a0h.samples()[j] - a0h.samples()[k]) * xs.samples()[k] * w[k]
                + v * a0x.samples()[k] * w[k];
        }
        worst = worst.max((lhs[j] - rhs * step).norm());
    }
    Ok(worst)
}

fn newton_root(d1: &PeriodicField, d2: &PeriodicField, start: f64) -> f64 {
    let mut x = start;
    for _ in 0..20 {
        let v = interpolate(d1, &[x])[0].re;
        let dv = interpolate(d2, &[x])[0].re;
        if dv == 0.0 {
            break;
        }
        let step = v / dv;
        x -= step;
        if step.abs() < 1e-12 {
            break;
        }
    }
    x
}

/// Turnover data of a real contour, or `Ok(None)` when ∂_αf₁ has no zero.
///
/// The zero Z₁ is bracketed on grid nodes (sign change, or |∂_αf₁| ≤ 1e−8
/// at a node) and polished by Newton on the trigonometric interpolant. The
/// ascending zero (∂_α²f₁ > 0) closest to α = 0 is reported; a zero with
/// |∂_α²f₁| < 1e−8 is a [`MuskatError::DegenerateTurnover`].
pub fn turnover_condition(
    grid: &SpectralGrid,
    f: &Contour,
    rhs: &[PeriodicField; 2],
    rho_factor: f64,
) -> Result<Option<TurnoverReport>> {
    let (d1, _) = f.tangent(grid);
    let dd1 = spectral_derivative(&f.g1, 2);
    let n = grid.n_points();
    let nodes = grid.nodes();
    let v: Vec<f64> = d1.real_parts();
    let mut roots = Vec::new();
    for j in 0..n {
        let k = (j + 1) % n;
        if v[j].abs() <= 1e-8 {
            let second = dd1.samples()[j].re;
            if second.abs() < 1e-8 {
                return Err(MuskatError::DegenerateTurnover {
                    location: nodes[j],
                    second_derivative: second,
                });
            }
            roots.push(newton_root(&d1, &dd1, nodes[j]));
        } else if v[k].abs() > 1e-8 && v[j].signum() != v[k].signum() {
            let span = if k == 0 { 2.0 * PI } else { nodes[k] - nodes[j] };
            let start = nodes[j] + span * v[j] / (v[j] - v[k]);
            roots.push(newton_root(&d1, &dd1, start));
        }
    }
    if roots.is_empty() {
        return Ok(None);
    }
    let wrap = |x: f64| (x + PI).rem_euclid(2.0 * PI) - PI;
    let mut best: Option<(f64, f64)> = None;
    for r in roots {
        let r = wrap(r);
        let second = interpolate(&dd1, &[r])[0].re;
        if second.abs() < 1e-8 {
            return Err(MuskatError::DegenerateTurnover {
                location: r,
                second_derivative: second,
            });
        }
        let key = (second <= 0.0, r.abs());
        let better = match best {
            None => true,
            Some((br, bs)) => key < (bs <= 0.0, br.abs()),
        };
        if better {
            best = Some((r, second));
        }
    }
    let (z1, second) = best.expect("nonempty");

    let dr1 = spectral_derivative(&rhs[0], 1);
    let z1_speed = -interpolate(&dr1, &[z1])[0].re / second;
    let pv_velocity = pv_at_point(grid, f, z1)?;
    Ok(Some(TurnoverReport {
        z1_location: z1,
        second_deriv: second,
        pv_velocity,
        z1_speed,
        condition_sign: (z1_speed + rho_factor * pv_velocity) * rho_factor * second,
    }))
}

/// p.v.∫K(f(x) − f(β))dβ at an off-grid point x, on the grid of offsets
/// β = x + 2πm/n with the Laurent constant on the diagonal.
fn pv_at_point(grid: &SpectralGrid, f: &Contour, x: f64) -> Result<f64> {
    let n = grid.n_points();
    let h = grid.spacing();
    let pts: Vec<f64> = (0..n).map(|m| x + m as f64 * h).collect();
    let g1 = interpolate(&f.g1, &pts);
    let g2 = interpolate(&f.g2, &pts);
    let (t1, t2) = f.tangent(grid);
    let dd1 = spectral_derivative(&f.g1, 2);
    let dd2 = spectral_derivative(&f.g2, 2);
    let at = |g: &PeriodicField| interpolate(g, &[x])[0];
    let mut acc = laurent_constant(at(&t1), at(&t2), at(&dd1), at(&dd2));
    for m in 1..n {
        let d1 = C64::new(pts[0] - pts[m], 0.0) + g1[0] - g1[m];
        let d2 = g2[0] - g2[m];
        let trig = KernelTrig::new(d1, d2);
        if !trig.denom_ok() {
            return Err(MuskatError::ArcChord {
                alpha_index: 0,
                beta_index: m,
            });
        }
        acc += trig.kernel();
    }
    Ok(acc.re * h)
}

fn radius_of(full: &[PeriodicField; 2]) -> f64 {
    let mut best = f64::INFINITY;
    for g in full {
        if let Ok(r) = analyticity_radius(g, RADIUS_TAIL_FRACTION) {
            best = best.min(r);
        }
    }
    best
}

/// Builds the diagnostics record of a family state.
pub fn record_diagnostics(state: &FamilyState, options: &EvolveOptions) -> Result<DiagnosticsRecord> {
    let cr = cr_residual(state, options.gamma_derivative)?;
    let center = state.center_index();
    let radius = radius_of(&state.full_slice(center));
    if !options.full_diagnostics {
        return Ok(DiagnosticsRecord {
            t: state.t,
            h5_norm: f64::NAN,
            arc: f64::NAN,
            rt: f64::NAN,
            garding_margin: f64::NAN,
            cr_residual: cr,
            analyticity_radius_gamma0: radius,
            turnover: None,
        });
    }
    let bg = state.background();
    let grid = &state.geom.grid;
    let cut = &state.geom.cutoffs;
    let per_slice: Result<Vec<(f64, f64, f64)>> = (0..state.slices.len())
        .into_par_iter()
        .map(|i| {
            let op = state.operator(&bg, i, options.rho_factor);
            let curve = op.curve(&state.slices[i].z);
            let arc = arc_chord_norm(grid, &curve, cut.delta);
            let coeff = coefficients_for_curve(
                grid,
                &curve,
                CurveWeights {
                    c: &cut.bump.c,
                    c_p: &cut.bump.c_p,
                    gamma: state.gammas[i],
                    t: state.t,
                },
                options.rho_factor,
                cut.delta,
                state.direction,
            )?;
            Ok((pair_norm(&state.full_slice(i), 5.0), arc, coeff.margin))
        })
        .collect();
    let per_slice = per_slice?;
    let h5 = per_slice.iter().map(|p| p.0).fold(0.0, f64::max);
    let arc = per_slice.iter().map(|p| p.1).fold(0.0, f64::max);
    let margin = per_slice.iter().map(|p| p.2).fold(f64::INFINITY, f64::min);
    let rt = if margin > 0.0 { 1.0 / margin } else { f64::INFINITY };

    let f = &state.background_contour;
    let has_candidate = f.tangent(grid).0.real_parts().iter().any(|v| *v <= 1e-8);
    let turnover = if has_candidate {
        let rhs = muskat_rhs(grid, f, options.rho_factor)?;
        match turnover_condition(grid, f, &rhs, options.rho_factor) {
            Ok(r) => r,
            Err(MuskatError::DegenerateTurnover { location, second_derivative }) => {
                log::warn!("degenerate turnover at {location} (second derivative {second_derivative})");
                None
            }
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    Ok(DiagnosticsRecord {
        t: state.t,
        h5_norm: h5,
        arc,
        rt,
        garding_margin: margin,
        cr_residual: cr,
        analyticity_radius_gamma0: radius,
        turnover,
    })
}
