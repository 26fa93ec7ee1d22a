//! Right-hand sides and time integration.
//!
//! * [`muskat_rhs`]: the periodic contour equation for a real interface,
//!   ∂ₜf_μ(α) = rho·∫K(f(α)−f(β))(∂f_μ(α) − ∂f_μ(β))dβ.
//! * [`SliceOperator`]: the equation on the complex curve α + ic(α)γt,
//!
//! ```text
//! T(z)_μ = icγ/W ∂z_μ + rho·λ ∫ K(X(α)−X(β)) [(q_μ(α) − q_μ(β)) + (∂f̃_μ(α) − ∂f̃_μ(β))] W(β) dβ
//! W = 1 + ic′γt,   q = ∂z/W,   X = z + f̃
//! ```
//!
//!   together with its Gateaux derivative D_zT\[w\] and its partial derivative
//!   in γ. Both are the exact derivatives of the discrete T, so evolving w with
//!   the coupled RK4 tableau yields the exact γ-derivative of the discrete z.
//! * [`evolve_family`]: the γ-family runner.
//!
//! Every singular sum uses the analytic diagonal value of its integrand.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{record_diagnostics, DiagnosticsRecord, GammaDerivative};
use crate::error::{MuskatError, Result};
use crate::kernels::{
    diagonal_limit_variation, kernel_diagonal_limit, rt_coefficient_from_tangent,
    Curve, KernelTrig,
};
use crate::localization::{split_contour, CutoffPair, SplitState};
use crate::spectral::{project_modes, spectral_derivative, PeriodicField, SpectralGrid, C64, I};

/// Interface parameterization f = (α + g₁, g₂) with g₁, g₂ periodic.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    /// g₁ = f₁ − α.
    pub g1: PeriodicField,
    /// g₂ = f₂.
    pub g2: PeriodicField,
    /// Whether the samples are allowed to be complex.
    pub complex_valued: bool,
}

impl Contour {
    /// Real contour from its periodic parts.
    pub fn new(g1: PeriodicField, g2: PeriodicField) -> Self {
        let complex_valued = !(g1.is_real() && g2.is_real());
        Self {
            g1,
            g2,
            complex_valued,
        }
    }

    /// Samples f₁ − α and f₂ from real functions.
    pub fn from_fn(
        grid: &SpectralGrid,
        g1: impl Fn(f64) -> f64,
        g2: impl Fn(f64) -> f64,
    ) -> Self {
        Self::new(grid.sample_real(g1), grid.sample_real(g2))
    }

    /// The flat interface f = (α, 0).
    pub fn flat(grid: &SpectralGrid) -> Self {
        Self::from_fn(grid, |_| 0.0, |_| 0.0)
    }

    /// Tangent (∂f₁, ∂f₂).
    pub fn tangent(&self, _grid: &SpectralGrid) -> (PeriodicField, PeriodicField) {
        let d1 = spectral_derivative(&self.g1, 1);
        let d1 = if d1.is_real() {
            PeriodicField::from_real(d1.real_parts().iter().map(|v| v + 1.0).collect())
        } else {
            d1.map(|v| v + 1.0)
        };
        (d1, spectral_derivative(&self.g2, 1))
    }

    /// The curve (α + g₁, g₂) with derivatives.
    pub fn curve(&self, grid: &SpectralGrid) -> Curve {
        Curve::from_periodic(grid, &self.g1, &self.g2)
    }

    /// Translation by whole grid nodes.
    pub fn shift_nodes(&self, shift: isize) -> Self {
        Self {
            g1: self.g1.shift_nodes(shift),
            g2: self.g2.shift_nodes(shift),
            complex_valued: self.complex_valued,
        }
    }

    /// Adds an increment to both components.
    pub fn add(&self, d: &[PeriodicField; 2]) -> Self {
        Self {
            g1: self.g1.add(&d[0]),
            g2: self.g2.add(&d[1]),
            complex_valued: self.complex_valued || !(d[0].is_real() && d[1].is_real()),
        }
    }

    /// Largest |imaginary part| of the samples.
    pub fn max_imag(&self) -> f64 {
        self.g1.max_imag().max(self.g2.max_imag())
    }

    /// Whether every sample is finite.
    pub fn is_finite(&self) -> bool {
        self.g1
            .samples()
            .iter()
            .chain(self.g2.samples())
            .all(|v| v.is_finite())
    }
}

/// σ = rho·∂f₁/|∂f|² of a real contour; NaN where the tangent vanishes.
pub fn rt_coefficient(grid: &SpectralGrid, f: &Contour, rho_factor: f64) -> PeriodicField {
    let (d1, d2) = f.tangent(grid);
    rt_coefficient_from_tangent(&d1, &d2, rho_factor)
}

fn realify_pair(v: [Vec<C64>; 2], real: bool) -> [PeriodicField; 2] {
    v.map(|s| {
        if real {
            PeriodicField::from_real(s.iter().map(|c| c.re).collect())
        } else {
            PeriodicField::new(s)
        }
    })
}

/// Right-hand side of the contour equation for the whole interface.
pub fn muskat_rhs(grid: &SpectralGrid, f: &Contour, rho_factor: f64) -> Result<[PeriodicField; 2]> {
    let curve = f.curve(grid);
    let n = grid.n_points();
    let h = grid.spacing();
    let rows: Result<Vec<(C64, C64)>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let (a, b) = (curve.dx1[j], curve.dx2[j]);
            let l = kernel_diagonal_limit(a, b)
                .map_err(|_| MuskatError::DegenerateParameterization(j))?;
            let mut acc1 = 2.0 * l * curve.ddx1[j];
            let mut acc2 = 2.0 * l * curve.ddx2[j];
            for k in 0..n {
                if k == j {
                    continue;
                }
                let kv = curve.kernel(j, k)?;
                acc1 += kv * (a - curve.dx1[k]);
                acc2 += kv * (b - curve.dx2[k]);
            }
            Ok((rho_factor * h * acc1, rho_factor * h * acc2))
        })
        .collect();
    let rows = rows?;
    Ok(realify_pair(
        [
            rows.iter().map(|r| r.0).collect(),
            rows.iter().map(|r| r.1).collect(),
        ],
        !f.complex_valued,
    ))
}

/// Precomputed data of the background f̃ = (1 − λ)f used by every slice.
#[derive(Debug, Clone)]
pub struct Background {
    /// f̃₁ − α and f̃₂.
    pub f_tilde: [PeriodicField; 2],
    /// ∂f̃₁ (including the 1 from α) and ∂f̃₂.
    pub d: [Vec<C64>; 2],
    /// ∂²f̃₁, ∂²f̃₂.
    pub dd: [Vec<C64>; 2],
}

impl Background {
    /// Derivative data of the background stored in a split.
    pub fn from_split(split: &SplitState) -> Self {
        let ft = split.f_tilde.clone();
        let d1 = spectral_derivative(&ft[0], 1)
            .samples()
            .iter()
            .map(|v| v + 1.0)
            .collect();
        let d2 = spectral_derivative(&ft[1], 1).into_samples();
        let dd1 = spectral_derivative(&ft[0], 2).into_samples();
        let dd2 = spectral_derivative(&ft[1], 2).into_samples();
        Self {
            f_tilde: ft,
            d: [d1, d2],
            dd: [dd1, dd2],
        }
    }
}

/// Time-independent data shared by all slices: grid, cutoffs and λα.
#[derive(Debug, Clone)]
pub struct SliceGeometry {
    /// Grid.
    pub grid: SpectralGrid,
    /// Cutoffs.
    pub cutoffs: CutoffPair,
    /// λ(α)·α, the part of z₁ that is not stored.
    pub lam_alpha: PeriodicField,
    /// Nodes with λ ≠ 0.
    pub active_rows: Vec<usize>,
}

impl SliceGeometry {
    /// Precomputes the shared data.
    pub fn new(grid: &SpectralGrid, cutoffs: &CutoffPair) -> Self {
        let lam_alpha = PeriodicField::from_real(
            grid.nodes()
                .iter()
                .zip(cutoffs.lambda.samples())
                .map(|(a, l)| a * l.re)
                .collect(),
        );
        let active_rows = cutoffs
            .lambda
            .samples()
            .iter()
            .enumerate()
            .filter(|(_, l)| l.re != 0.0)
            .map(|(j, _)| j)
            .collect();
        Self {
            grid: grid.clone(),
            cutoffs: cutoffs.clone(),
            lam_alpha,
            active_rows,
        }
    }

    /// Full z₁ = λα + stored z₁.
    pub fn full_z1(&self, z1: &PeriodicField) -> PeriodicField {
        z1.add(&self.lam_alpha)
    }
}

/// One member z(·, γ, t) of the family; z₁ is stored minus λ(α)α.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilySlice {
    /// (z₁ − λα, z₂).
    pub z: [PeriodicField; 2],
    /// Curve parameter.
    pub gamma: f64,
    /// Time.
    pub t: f64,
}

impl FamilySlice {
    /// Initial slice z(α, γ, 0) = f^c(α, 0).
    pub fn initial(split: &SplitState, geom: &SliceGeometry, gamma: f64) -> Self {
        Self {
            z: [split.f_c[0].sub(&geom.lam_alpha), split.f_c[1].clone()],
            gamma,
            t: 0.0,
        }
    }
}

/// Which terms [`SliceOperator::evaluate`] should produce.
#[derive(Debug, Clone, Copy, Default)]
pub struct TermRequest {
    /// T(z).
    pub t: bool,
    /// ∂γT at fixed z.
    pub dgamma: bool,
}

/// Output of [`SliceOperator::evaluate`].
#[derive(Debug, Clone, Default)]
pub struct SliceTerms {
    /// T(z).
    pub t: Option<[Vec<C64>; 2]>,
    /// ∂γT.
    pub dgamma: Option<[Vec<C64>; 2]>,
    /// D_zT\[w\].
    pub dz: Option<[Vec<C64>; 2]>,
}

/// How the kernel is evaluated by [`SliceOperator`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelChoice {
    /// The singular kernel K.
    Exact,
    /// The mollified kernel Kⁿ.
    Mollified(u64),
}

/// The complexified right-hand side for one (γ, t) with a given background.
#[derive(Debug, Clone, Copy)]
pub struct SliceOperator<'a> {
    /// Shared geometry.
    pub geom: &'a SliceGeometry,
    /// Background f̃.
    pub background: &'a Background,
    /// Curve parameter.
    pub gamma: f64,
    /// Time (signed).
    pub t: f64,
    /// Density contrast factor.
    pub rho_factor: f64,
    /// Kernel in use.
    pub kernel: KernelChoice,
}

struct RowOut {
    t: [C64; 2],
    g: [C64; 2],
    d: [C64; 2],
}

impl<'a> SliceOperator<'a> {
    /// Operator with the exact kernel.
    pub fn new(
        geom: &'a SliceGeometry,
        background: &'a Background,
        gamma: f64,
        t: f64,
        rho_factor: f64,
    ) -> Self {
        Self {
            geom,
            background,
            gamma,
            t,
            rho_factor,
            kernel: KernelChoice::Exact,
        }
    }

    /// The full curve X = z + f̃ of the slice.
    pub fn curve(&self, z: &[PeriodicField; 2]) -> Curve {
        let p1 = self
            .geom
            .full_z1(&z[0])
            .add(&self.background.f_tilde[0]);
        let p2 = z[1].add(&self.background.f_tilde[1]);
        Curve::from_periodic(&self.geom.grid, &p1, &p2)
    }

    /// W = 1 + ic′γt at every node.
    pub fn weights(&self) -> Vec<C64> {
        self.geom
            .cutoffs
            .bump
            .c_p
            .samples()
            .iter()
            .map(|cp| 1.0 + I * cp.re * self.gamma * self.t)
            .collect()
    }

    /// Evaluates the requested terms, plus D_zT\[w\] when `w` is given.
    pub fn evaluate(
        &self,
        z: &[PeriodicField; 2],
        w: Option<&[PeriodicField; 2]>,
        request: TermRequest,
    ) -> Result<SliceTerms> {
        let grid = &self.geom.grid;
        let n = grid.n_points();
        let h = grid.spacing();
        let nodes = grid.nodes();
        let cut = &self.geom.cutoffs;
        let lam = cut.lambda.samples();
        let c = cut.bump.c.samples();
        let cp = cut.bump.c_p.samples();
        let cpp = cut.bump.c_pp.samples();
        let (gamma, t) = (self.gamma, self.t);

        let zfull = [self.geom.full_z1(&z[0]), z[1].clone()];
        let dz = [
            spectral_derivative(&zfull[0], 1).into_samples(),
            spectral_derivative(&zfull[1], 1).into_samples(),
        ];
        let ddz = [
            spectral_derivative(&zfull[0], 2).into_samples(),
            spectral_derivative(&zfull[1], 2).into_samples(),
        ];
        let bg = self.background;
        let x1: Vec<C64> = (0..n)
            .map(|j| nodes[j] + zfull[0].samples()[j] + bg.f_tilde[0].samples()[j])
            .collect();
        let x2: Vec<C64> = (0..n)
            .map(|j| zfull[1].samples()[j] + bg.f_tilde[1].samples()[j])
            .collect();
        let wgt = self.weights();
        let wp: Vec<C64> = cpp.iter().map(|v| I * v.re * gamma * t).collect();

        let wdata = w.map(|w| {
            (
                [w[0].samples().to_vec(), w[1].samples().to_vec()],
                [
                    spectral_derivative(&w[0], 1).into_samples(),
                    spectral_derivative(&w[1], 1).into_samples(),
                ],
                [
                    spectral_derivative(&w[0], 2).into_samples(),
                    spectral_derivative(&w[1], 2).into_samples(),
                ],
            )
        });
        let want_t = request.t;
        let want_g = request.dgamma;
        let kernel_choice = self.kernel;
        let rho = self.rho_factor;

        let row = |j: usize| -> Result<RowOut> {
            let wj = wgt[j];
            let a_t = I * c[j].re * gamma / wj;
            let mut out = RowOut {
                t: [a_t * dz[0][j], a_t * dz[1][j]],
                g: [
                    I * c[j].re / (wj * wj) * dz[0][j],
                    I * c[j].re / (wj * wj) * dz[1][j],
                ],
                d: [C64::new(0.0, 0.0); 2],
            };
            if let Some((_, dw, _)) = &wdata {
                out.d = [a_t * dw[0][j], a_t * dw[1][j]];
            }
            if lam[j].re == 0.0 {
                return Ok(out);
            }
            let a = dz[0][j] + bg.d[0][j];
            let b = dz[1][j] + bg.d[1][j];
            let l = kernel_diagonal_limit(a, b)
                .map_err(|_| MuskatError::DegenerateParameterization(j))?;
            let q_j = [dz[0][j] / wj, dz[1][j] / wj];
            let ratio = wp[j] / wj;
            let core = [
                ddz[0][j] - dz[0][j] * ratio + bg.dd[0][j] * wj,
                ddz[1][j] - dz[1][j] * ratio + bg.dd[1][j] * wj,
            ];
            let mut acc_t = [2.0 * l * core[0], 2.0 * l * core[1]];
            let mut acc_g = [C64::new(0.0, 0.0); 2];
            let mut acc_d = [C64::new(0.0, 0.0); 2];
            for mu in 0..2 {
                acc_g[mu] = 2.0
                    * l
                    * (-I * t * cpp[j].re * dz[mu][j] / (wj * wj)
                        + bg.dd[mu][j] * I * cp[j].re * t);
            }
            if let Some((_, dw, ddw)) = &wdata {
                let dl = diagonal_limit_variation(a, b, dw[0][j], dw[1][j]);
                for mu in 0..2 {
                    acc_d[mu] = 2.0 * dl * core[mu]
                        + 2.0 * l * (ddw[mu][j] - dw[mu][j] * ratio);
                }
            }
            for k in 0..n {
                if k == j {
                    continue;
                }
                let trig = KernelTrig::new(x1[j] - x1[k], x2[j] - x2[k]);
                let kv = match kernel_choice {
                    KernelChoice::Exact => {
                        if !trig.denom_ok() {
                            return Err(MuskatError::ArcChord {
                                alpha_index: j,
                                beta_index: k,
                            });
                        }
                        trig.kernel()
                    }
                    KernelChoice::Mollified(nm) => {
                        let d = trig.denom();
                        let sep = nodes[j] - nodes[k];
                        let reg = (0.5 * sep).sin().powi(2) / nm as f64;
                        trig.sin1 * d.conj() / (d.norm_sqr() + reg)
                    }
                };
                let wk = wgt[k];
                let dens = [
                    q_j[0] * wk - dz[0][k] + (bg.d[0][j] - bg.d[0][k]) * wk,
                    q_j[1] * wk - dz[1][k] + (bg.d[1][j] - bg.d[1][k]) * wk,
                ];
                if want_t {
                    acc_t[0] += kv * dens[0];
                    acc_t[1] += kv * dens[1];
                }
                if want_g {
                    let dc = I * t * (cp[k].re - cp[j].re) / (wj * wj);
                    let ick = I * cp[k].re * t;
                    for mu in 0..2 {
                        acc_g[mu] += kv * (dz[mu][j] * dc + (bg.d[mu][j] - bg.d[mu][k]) * ick);
                    }
                }
                if let Some((wv, dw, _)) = &wdata {
                    let (g1, g2) = trig.gradient();
                    let grad = g1 * (wv[0][j] - wv[0][k]) + g2 * (wv[1][j] - wv[1][k]);
                    for mu in 0..2 {
                        acc_d[mu] += kv * (dw[mu][j] / wj * wk - dw[mu][k]) + grad * dens[mu];
                    }
                }
            }
            let scale = rho * lam[j].re * h;
            for mu in 0..2 {
                out.t[mu] += scale * acc_t[mu];
                out.g[mu] += scale * acc_g[mu];
                out.d[mu] += scale * acc_d[mu];
            }
            Ok(out)
        };

        let rows: Result<Vec<RowOut>> = (0..n).into_par_iter().map(row).collect();
        let rows = rows?;
        let collect = |f: &dyn Fn(&RowOut) -> [C64; 2]| -> [Vec<C64>; 2] {
            [
                rows.iter().map(|r| f(r)[0]).collect(),
                rows.iter().map(|r| f(r)[1]).collect(),
            ]
        };
        Ok(SliceTerms {
            t: want_t.then(|| collect(&|r| r.t)),
            dgamma: want_g.then(|| collect(&|r| r.g)),
            dz: wdata.as_ref().map(|_| collect(&|r| r.d)),
        })
    }
}

fn to_pair(v: [Vec<C64>; 2]) -> [PeriodicField; 2] {
    v.map(PeriodicField::new)
}

/// T(z) on the grid for one slice.
pub fn complex_t(op: &SliceOperator<'_>, z: &[PeriodicField; 2]) -> Result<[PeriodicField; 2]> {
    let terms = op.evaluate(
        z,
        None,
        TermRequest {
            t: true,
            dgamma: false,
        },
    )?;
    Ok(to_pair(terms.t.expect("requested")))
}

/// Gateaux derivative D_zT\[w\].
pub fn gateaux_dzt(
    op: &SliceOperator<'_>,
    z: &[PeriodicField; 2],
    w: &[PeriodicField; 2],
) -> Result<[PeriodicField; 2]> {
    let terms = op.evaluate(z, Some(w), TermRequest::default())?;
    Ok(to_pair(terms.dz.expect("w given")))
}

/// ∂γT at fixed z.
pub fn partial_gamma_t(op: &SliceOperator<'_>, z: &[PeriodicField; 2]) -> Result<[PeriodicField; 2]> {
    let terms = op.evaluate(
        z,
        None,
        TermRequest {
            t: false,
            dgamma: true,
        },
    )?;
    Ok(to_pair(terms.dgamma.expect("requested")))
}

/// Right-hand side of the w equation, D_zT(z)\[w\] + ∂γT(z).
pub fn w_rhs(
    op: &SliceOperator<'_>,
    z: &[PeriodicField; 2],
    w: &[PeriodicField; 2],
) -> Result<[PeriodicField; 2]> {
    let terms = op.evaluate(
        z,
        Some(w),
        TermRequest {
            t: false,
            dgamma: true,
        },
    )?;
    let dz = terms.dz.expect("w given");
    let dg = terms.dgamma.expect("requested");
    Ok([0, 1].map(|mu| {
        PeriodicField::new(dz[mu].iter().zip(&dg[mu]).map(|(a, b)| a + b).collect())
    }))
}

/// The localized real equation: λ times the two integrals with densities
/// ∂f^c and ∂f̃ (the γ = 0 member of the family at time t).
pub fn localized_rhs(split: &SplitState, rho_factor: f64) -> Result<[PeriodicField; 2]> {
    let geom = SliceGeometry::new(&split.grid, &split.cutoffs);
    let bg = Background::from_split(split);
    let op = SliceOperator::new(&geom, &bg, 0.0, 0.0, rho_factor);
    let slice = FamilySlice::initial(split, &geom, 0.0);
    let out = complex_t(&op, &slice.z)?;
    Ok(out.map(|f| PeriodicField::from_real(f.real_parts())))
}

/// The mollified operator φₙ∗Tⁿ(φₙ∗z). Inputs and output are projected to
/// |k| ≤ n and the kernel is replaced by Kⁿ.
pub fn mollified_t(
    op: &SliceOperator<'_>,
    z: &[PeriodicField; 2],
    n: u64,
) -> Result<[PeriodicField; 2]> {
    let keep = n.min(usize::MAX as u64) as usize;
    let zp = [project_modes(&z[0], keep), project_modes(&z[1], keep)];
    let mut mop = *op;
    mop.kernel = KernelChoice::Mollified(n);
    let out = complex_t(&mop, &zp)?;
    Ok(out.map(|f| project_modes(&f, keep)))
}

/// Classical RK4 step on a flat state vector. The right-hand side receives
/// the stage index (0..4), the stage time and the stage value.
pub fn rk4_step<F>(y: &[C64], t: f64, dt: f64, mut rhs: F) -> Result<Vec<C64>>
where
    F: FnMut(usize, f64, &[C64]) -> Result<Vec<C64>>,
{
    let axpy = |a: &[C64], s: f64, b: &[C64]| -> Vec<C64> {
        a.iter().zip(b).map(|(x, y)| x + s * y).collect()
    };
    let k1 = rhs(0, t, y)?;
    let k2 = rhs(1, t + 0.5 * dt, &axpy(y, 0.5 * dt, &k1))?;
    let k3 = rhs(2, t + 0.5 * dt, &axpy(y, 0.5 * dt, &k2))?;
    let k4 = rhs(3, t + dt, &axpy(y, dt, &k3))?;
    Ok((0..y.len())
        .map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// RK4 for a scalar real ODE y′ = f(t, y).
pub fn rk4_scalar(y: f64, t: f64, dt: f64, f: impl Fn(f64, f64) -> f64) -> f64 {
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1);
    let k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2);
    let k4 = f(t + dt, y + dt * k3);
    y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

fn flatten(parts: &[&PeriodicField]) -> Vec<C64> {
    parts.iter().flat_map(|p| p.samples().iter().copied()).collect()
}

fn unflatten(v: &[C64], n: usize, count: usize) -> Vec<PeriodicField> {
    (0..count)
        .map(|i| PeriodicField::new(v[i * n..(i + 1) * n].to_vec()))
        .collect()
}

/// One RK4 step of the real contour equation, returning the new contour and
/// the four stage contours (inputs of the right-hand side evaluations).
pub fn muskat_step(
    grid: &SpectralGrid,
    f: &Contour,
    dt: f64,
    rho_factor: f64,
) -> Result<(Contour, Vec<Contour>)> {
    let n = grid.n_points();
    let y = flatten(&[&f.g1, &f.g2]);
    let mut stages = Vec::with_capacity(4);
    let out = rk4_step(&y, 0.0, dt, |_, _, ys| {
        let parts = unflatten(ys, n, 2);
        let stage = Contour::new(
            PeriodicField::from_real(parts[0].real_parts()),
            PeriodicField::from_real(parts[1].real_parts()),
        );
        let r = muskat_rhs(grid, &stage, rho_factor)?;
        stages.push(stage);
        Ok(flatten(&[&r[0], &r[1]]))
    })?;
    let parts = unflatten(&out, n, 2);
    let next = Contour::new(
        PeriodicField::from_real(parts[0].real_parts()),
        PeriodicField::from_real(parts[1].real_parts()),
    );
    Ok((next, stages))
}

/// How f̃ depends on time during a family run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BackgroundMode {
    /// f̃ = (1 − λ)f(t) with f evolved by the real contour equation alongside.
    #[default]
    CoEvolved,
    /// f̃ fixed at its initial value.
    Frozen,
}

/// Why a family run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Reached t_final.
    Completed,
    /// The Gårding margin became nonpositive.
    MarginNonpositive,
    /// A kernel denominator fell below the floor.
    ArcChordViolation,
    /// NaN or infinity appeared.
    NanDetected,
}

/// The γ-family at one time.
#[derive(Debug, Clone)]
pub struct FamilyState {
    /// Shared geometry.
    pub geom: Arc<SliceGeometry>,
    /// Current split (f^c, f̃) of the background contour.
    pub split: Arc<SplitState>,
    /// Full real contour f(t) driving f̃.
    pub background_contour: Contour,
    /// Uniform symmetric γ-grid with an odd number of nodes.
    pub gammas: Vec<f64>,
    /// Slices z(·, γ_i, t).
    pub slices: Vec<FamilySlice>,
    /// Slices w(·, γ_i, t) = ∂γz, when evolved.
    pub w_slices: Option<Vec<[PeriodicField; 2]>>,
    /// Time (signed).
    pub t: f64,
    /// +1 forward, −1 backward.
    pub direction: f64,
}

/// Uniform symmetric γ-grid with an odd number of nodes in [−1, 1].
pub fn gamma_grid(count: usize) -> Result<Vec<f64>> {
    if count < 3 || count.is_multiple_of(2) {
        return Err(MuskatError::Config(format!(
            "gamma_count must be odd and at least 3, got {count}"
        )));
    }
    let m = (count - 1) as f64;
    Ok((0..count).map(|i| (2.0 * i as f64 - m) / m).collect())
}

impl FamilyState {
    /// z(α, γ, 0) = f^c(α, 0) for every γ, and w = 0 when requested.
    pub fn initial(
        grid: &SpectralGrid,
        f: &Contour,
        cutoffs: &CutoffPair,
        gamma_count: usize,
        evolve_w: bool,
        direction: f64,
    ) -> Result<Self> {
        let gammas = gamma_grid(gamma_count)?;
        let split = split_contour(grid, f, cutoffs);
        let geom = SliceGeometry::new(grid, cutoffs);
        let slices = gammas
            .iter()
            .map(|&g| FamilySlice::initial(&split, &geom, g))
            .collect();
        let n = grid.n_points();
        let w_slices = evolve_w.then(|| {
            gammas
                .iter()
                .map(|_| [PeriodicField::zeros(n), PeriodicField::zeros(n)])
                .collect()
        });
        Ok(Self {
            geom: Arc::new(geom),
            split: Arc::new(split),
            background_contour: f.clone(),
            gammas,
            slices,
            w_slices,
            t: 0.0,
            direction,
        })
    }

    /// Index of the γ = 0 slice.
    pub fn center_index(&self) -> usize {
        self.gammas.len() / 2
    }

    /// Uniform γ spacing.
    pub fn gamma_spacing(&self) -> f64 {
        self.gammas[1] - self.gammas[0]
    }

    /// Background data of the current split.
    pub fn background(&self) -> Background {
        Background::from_split(&self.split)
    }

    /// Operator of slice `i` at the current time.
    pub fn operator<'a>(&'a self, bg: &'a Background, i: usize, rho_factor: f64) -> SliceOperator<'a> {
        SliceOperator::new(&self.geom, bg, self.gammas[i], self.t, rho_factor)
    }

    /// Full z₁ (with λα restored) and z₂ of slice `i`.
    pub fn full_slice(&self, i: usize) -> [PeriodicField; 2] {
        [
            self.geom.full_z1(&self.slices[i].z[0]),
            self.slices[i].z[1].clone(),
        ]
    }

    fn all_finite(&self) -> bool {
        let z_ok = self
            .slices
            .iter()
            .all(|s| s.z.iter().all(|f| f.samples().iter().all(|v| v.is_finite())));
        let w_ok = self.w_slices.as_ref().is_none_or(|ws| {
            ws.iter()
                .all(|w| w.iter().all(|f| f.samples().iter().all(|v| v.is_finite())))
        });
        z_ok && w_ok && self.background_contour.is_finite()
    }
}

/// Options of [`evolve_family`].
#[derive(Debug, Clone)]
pub struct EvolveOptions {
    /// Step magnitude; the sign comes from the state direction.
    pub dt: f64,
    /// Final |t|.
    pub t_final: f64,
    /// Diagnostics are recorded every this many steps (and at the start and end).
    pub record_every: usize,
    /// Density contrast factor.
    pub rho_factor: f64,
    /// Background treatment.
    pub background: BackgroundMode,
    /// Source of ∂γz in the Cauchy–Riemann residual.
    pub gamma_derivative: GammaDerivative,
    /// Stop when the Gårding margin is nonpositive at a record.
    pub stop_on_margin: bool,
    /// Compute the full diagnostics record (norms, margin, turnover) at records.
    pub full_diagnostics: bool,
    /// Keep a copy of the state every this many steps.
    pub snapshot_every: Option<usize>,
    /// Kernel of the slice operator.
    pub kernel: KernelChoice,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_final: 0.01,
            record_every: 1,
            rho_factor: 1.0,
            background: BackgroundMode::CoEvolved,
            gamma_derivative: GammaDerivative::Auto,
            stop_on_margin: true,
            full_diagnostics: true,
            snapshot_every: None,
            kernel: KernelChoice::Exact,
        }
    }
}

/// Default step cfl_const/n with cfl_const = 0.5/(2π·max(σ_max, c_max)).
pub fn default_dt(n_points: usize, sigma_max: f64, c_max: f64) -> f64 {
    let scale = sigma_max.abs().max(c_max.abs()).max(1e-12);
    0.5 / (2.0 * PI * scale) / n_points as f64
}

/// Result of [`evolve_family`].
#[derive(Debug, Clone)]
pub struct EvolutionHistory {
    /// Diagnostics at each record.
    pub records: Vec<DiagnosticsRecord>,
    /// Last good state.
    pub final_state: FamilyState,
    /// Why the run ended.
    pub stop_reason: StopReason,
    /// Number of completed steps.
    pub steps: usize,
    /// (step, state) copies taken every `snapshot_every` steps.
    pub snapshots: Vec<(usize, FamilyState)>,
}

fn advance_slice(
    state: &FamilyState,
    i: usize,
    backgrounds: &[Background],
    dt: f64,
    rho_factor: f64,
    kernel: KernelChoice,
) -> Result<(FamilySlice, Option<[PeriodicField; 2]>)> {
    let n = state.geom.grid.n_points();
    let slice = &state.slices[i];
    let with_w = state.w_slices.is_some();
    let y = match &state.w_slices {
        Some(ws) => flatten(&[&slice.z[0], &slice.z[1], &ws[i][0], &ws[i][1]]),
        None => flatten(&[&slice.z[0], &slice.z[1]]),
    };
    let gamma = slice.gamma;
    let out = rk4_step(&y, state.t, dt, |stage, ts, ys| {
        let parts = unflatten(ys, n, if with_w { 4 } else { 2 });
        let mut op = SliceOperator::new(&state.geom, &backgrounds[stage], gamma, ts, rho_factor);
        op.kernel = kernel;
        let z = [parts[0].clone(), parts[1].clone()];
        let w = with_w.then(|| [parts[2].clone(), parts[3].clone()]);
        let terms = op.evaluate(
            &z,
            w.as_ref(),
            TermRequest {
                t: true,
                dgamma: with_w,
            },
        )?;
        let tz = terms.t.expect("requested");
        let mut v: Vec<C64> = tz[0].iter().chain(&tz[1]).copied().collect();
        if with_w {
            let dz = terms.dz.expect("w given");
            let dg = terms.dgamma.expect("requested");
            for mu in 0..2 {
                v.extend(dz[mu].iter().zip(&dg[mu]).map(|(a, b)| a + b));
            }
        }
        Ok(v)
    })?;
    let parts = unflatten(&out, n, if with_w { 4 } else { 2 });
    let new_slice = FamilySlice {
        z: [parts[0].clone(), parts[1].clone()],
        gamma,
        t: state.t + dt,
    };
    let new_w = with_w.then(|| [parts[2].clone(), parts[3].clone()]);
    Ok((new_slice, new_w))
}

/// Advances every slice (and w, and the background) by one signed step.
pub fn step_family(
    state: &FamilyState,
    dt: f64,
    rho_factor: f64,
    mode: BackgroundMode,
    kernel: KernelChoice,
) -> Result<FamilyState> {
    let grid = &state.geom.grid;
    let (next_bg, backgrounds) = match mode {
        BackgroundMode::Frozen => {
            let bg = state.background();
            (state.background_contour.clone(), vec![bg.clone(), bg.clone(), bg.clone(), bg])
        }
        BackgroundMode::CoEvolved => {
            let (next, stages) = muskat_step(grid, &state.background_contour, dt, rho_factor)?;
            let bgs = stages
                .iter()
                .map(|s| Background::from_split(&split_contour(grid, s, &state.geom.cutoffs)))
                .collect();
            (next, bgs)
        }
    };
    let advanced: Result<Vec<_>> = (0..state.slices.len())
        .into_par_iter()
        .map(|i| advance_slice(state, i, &backgrounds, dt, rho_factor, kernel))
        .collect();
    let advanced = advanced?;
    let split = match mode {
        BackgroundMode::Frozen => state.split.clone(),
        BackgroundMode::CoEvolved => Arc::new(split_contour(grid, &next_bg, &state.geom.cutoffs)),
    };
    let mut slices = Vec::with_capacity(advanced.len());
    let mut ws = Vec::with_capacity(advanced.len());
    for (s, w) in advanced {
        slices.push(s);
        if let Some(w) = w {
            ws.push(w);
        }
    }
    Ok(FamilyState {
        geom: state.geom.clone(),
        split,
        background_contour: next_bg,
        gammas: state.gammas.clone(),
        slices,
        w_slices: state.w_slices.as_ref().map(|_| ws),
        t: state.t + dt,
        direction: state.direction,
    })
}

/// Evolves the family to |t| = t_final in the state's direction, recording
/// diagnostics and stopping at the first monitor failure.
pub fn evolve_family(initial: FamilyState, options: &EvolveOptions) -> Result<EvolutionHistory> {
    if !(options.dt > 0.0) || !(options.t_final >= 0.0) {
        return Err(MuskatError::Config(format!(
            "dt must be positive and t_final nonnegative, got dt={}, t_final={}",
            options.dt, options.t_final
        )));
    }
    let steps_total = (options.t_final / options.dt).round() as usize;
    let dt = initial.direction * options.t_final.max(0.0) / steps_total.max(1) as f64;
    let record_every = options.record_every.max(1);
    let mut state = initial;
    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    let mut stop_reason = StopReason::Completed;

    let record = |state: &FamilyState, records: &mut Vec<DiagnosticsRecord>| -> Result<bool> {
        let rec = record_diagnostics(state, options)?;
        let bad = options.stop_on_margin && options.full_diagnostics && !(rec.garding_margin > 0.0);
        records.push(rec);
        Ok(bad)
    };

    match record(&state, &mut records) {
        Ok(true) => {
            return Ok(EvolutionHistory {
                records,
                final_state: state,
                stop_reason: StopReason::MarginNonpositive,
                steps: 0,
                snapshots,
            })
        }
        Ok(false) => {}
        Err(MuskatError::ArcChord { .. }) => {
            return Ok(EvolutionHistory {
                records,
                final_state: state,
                stop_reason: StopReason::ArcChordViolation,
                steps: 0,
                snapshots,
            })
        }
        Err(e) => return Err(e),
    }
    if let Some(every) = options.snapshot_every {
        if every > 0 {
            snapshots.push((0, state.clone()));
        }
    }
    let mut steps = 0;
    for step in 1..=steps_total {
        let next = match step_family(&state, dt, options.rho_factor, options.background, options.kernel) {
            Ok(s) => s,
            Err(MuskatError::ArcChord { alpha_index, beta_index }) => {
                log::warn!("arc-chord violation at step {step} between nodes {alpha_index} and {beta_index}");
                stop_reason = StopReason::ArcChordViolation;
                break;
            }
            Err(MuskatError::DegenerateParameterization(j)) => {
                log::warn!("vanishing tangent at node {j}, step {step}");
                stop_reason = StopReason::NanDetected;
                break;
            }
            Err(e) => return Err(e),
        };
        if !next.all_finite() {
            stop_reason = StopReason::NanDetected;
            break;
        }
        state = next;
        steps = step;
        if let Some(every) = options.snapshot_every {
            if every > 0 && step % every == 0 {
                snapshots.push((step, state.clone()));
            }
        }
        if step % record_every == 0 || step == steps_total {
            match record(&state, &mut records) {
                Ok(true) => {
                    stop_reason = StopReason::MarginNonpositive;
                    break;
                }
                Ok(false) => {}
                Err(MuskatError::ArcChord { .. }) => {
                    stop_reason = StopReason::ArcChordViolation;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(EvolutionHistory {
        records,
        final_state: state,
        stop_reason,
        steps,
        snapshots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::lambda_operator;

    fn stable(grid: &SpectralGrid, a: f64) -> Contour {
        Contour::from_fn(grid, |_| 0.0, move |x| a * x.cos())
    }

    fn pair_diff(a: &[PeriodicField; 2], b: &[PeriodicField; 2]) -> f64 {
        a[0].sub(&b[0]).sup_norm().max(a[1].sub(&b[1]).sup_norm())
    }

    #[test]
    fn flat_contour_is_steady() {
        let grid = SpectralGrid::new(64).unwrap();
        let rhs = muskat_rhs(&grid, &Contour::flat(&grid), 1.0).unwrap();
        assert!(rhs[0].sup_norm() < 1e-12 && rhs[1].sup_norm() < 1e-12);
    }

    #[test]
    fn linearization_is_minus_two_pi_lambda() {
        let grid = SpectralGrid::new(64).unwrap();
        let eps = 1e-4;
        let f = stable(&grid, eps);
        let rhs = muskat_rhs(&grid, &f, 1.0).unwrap();
        let lin = lambda_operator(&f.g2).scale(C64::new(-2.0 * PI, 0.0));
        assert!(rhs[1].sub(&lin).l2_norm() / (eps * eps) < 50.0);
    }

    #[test]
    fn translation_equivariance() {
        let grid = SpectralGrid::new(32).unwrap();
        let f = Contour::from_fn(&grid, |x| 0.2 * (2.0 * x).sin(), |x| 0.3 * x.cos() + 0.1 * (3.0 * x).sin());
        let shifted = muskat_rhs(&grid, &f.shift_nodes(5), 1.0).unwrap();
        let rhs = muskat_rhs(&grid, &f, 1.0).unwrap();
        let expect = [rhs[0].shift_nodes(5), rhs[1].shift_nodes(5)];
        assert!(pair_diff(&shifted, &expect) < 1e-12);
    }

    fn setup(n: usize) -> (SpectralGrid, Contour, CutoffPair) {
        let grid = SpectralGrid::new(n).unwrap();
        let f = Contour::from_fn(&grid, |x| 0.1 * x.sin(), |x| 0.2 * x.cos());
        let cut = CutoffPair::new(&grid, 1.2, 0.3).unwrap();
        (grid, f, cut)
    }

    #[test]
    fn localized_rhs_is_lambda_times_full_rhs() {
        let (grid, f, cut) = setup(64);
        let split = split_contour(&grid, &f, &cut);
        let loc = localized_rhs(&split, 1.0).unwrap();
        let full = muskat_rhs(&grid, &f, 1.0).unwrap();
        let expect = full.map(|r| r.mul(&cut.lambda));
        assert!(pair_diff(&loc, &expect) < 1e-11);
    }

    fn slice_fixture(n: usize) -> (SliceGeometry, Background, [PeriodicField; 2]) {
        let (grid, f, cut) = setup(n);
        let split = split_contour(&grid, &f, &cut);
        let geom = SliceGeometry::new(&grid, &cut);
        let bg = Background::from_split(&split);
        let mut z = FamilySlice::initial(&split, &geom, 0.0).z;
        let bump = grid.sample(|x| C64::new(0.01 * (-(x * x) * 4.0).exp(), 0.005 * x.sin() * (-x * x).exp()));
        z[1] = z[1].add(&bump);
        (geom, bg, z)
    }

    #[test]
    fn gateaux_derivative_matches_central_differences() {
        let (geom, bg, z) = slice_fixture(48);
        let op = SliceOperator::new(&geom, &bg, 0.6, 0.05, 1.0);
        let w = [
            geom.grid.sample(|x| C64::new(0.3 * x.sin(), 0.1) * (-(x * x)).exp()),
            geom.grid.sample(|x| C64::new(0.2 * (2.0 * x).cos(), -0.1 * x.sin()) * (-(x * x)).exp()),
        ];
        let exact = gateaux_dzt(&op, &z, &w).unwrap();
        let err = |eps: f64| {
            let zp = [z[0].add(&w[0].scale(eps.into())), z[1].add(&w[1].scale(eps.into()))];
            let zm = [z[0].sub(&w[0].scale(eps.into())), z[1].sub(&w[1].scale(eps.into()))];
            let tp = complex_t(&op, &zp).unwrap();
            let tm = complex_t(&op, &zm).unwrap();
            let fd = [0, 1].map(|mu| tp[mu].sub(&tm[mu]).scale((0.5 / eps).into()));
            pair_diff(&fd, &exact)
        };
        let (e1, e2) = (err(1e-3), err(5e-4));
        assert!(e1 < 1e-3, "{e1}");
        let ratio = e1 / e2;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn gamma_derivative_matches_central_differences() {
        let (geom, bg, z) = slice_fixture(48);
        let (gamma, t) = (0.4, 0.08);
        let exact = partial_gamma_t(&SliceOperator::new(&geom, &bg, gamma, t, 1.0), &z).unwrap();
        let err = |eps: f64| {
            let tp = complex_t(&SliceOperator::new(&geom, &bg, gamma + eps, t, 1.0), &z).unwrap();
            let tm = complex_t(&SliceOperator::new(&geom, &bg, gamma - eps, t, 1.0), &z).unwrap();
            let fd = [0, 1].map(|mu| tp[mu].sub(&tm[mu]).scale((0.5 / eps).into()));
            pair_diff(&fd, &exact)
        };
        let (e1, e2) = (err(1e-2), err(5e-3));
        assert!(e1 < 1e-3, "{e1}");
        assert!((3.5..4.5).contains(&(e1 / e2)), "ratio {}", e1 / e2);
    }

    #[test]
    fn gamma_zero_slice_has_no_transport() {
        let (geom, bg, z) = slice_fixture(32);
        let a = complex_t(&SliceOperator::new(&geom, &bg, 0.0, 0.3, 1.0), &z).unwrap();
        let b = complex_t(&SliceOperator::new(&geom, &bg, 0.0, 0.0, 1.0), &z).unwrap();
        assert!(pair_diff(&a, &b) < 1e-14);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let err = |dt: f64| {
            let steps = (1.0 / dt).round() as usize;
            let mut y = 1.0;
            for s in 0..steps {
                y = rk4_scalar(y, s as f64 * dt, dt, |_, y| y);
            }
            (y - 1f64.exp()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((14.0..18.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn gamma_grid_is_symmetric_and_odd() {
        assert_eq!(gamma_grid(5).unwrap(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(gamma_grid(4).is_err());
        assert!(gamma_grid(1).is_err());
    }

    #[test]
    fn evolved_w_is_the_gamma_derivative_of_the_scheme() {
        let (grid, f, cut) = setup(32);
        let dir = 1.0;
        let opts = |bg| EvolveOptions {
            dt: 2e-3,
            t_final: 0.01,
            record_every: 100,
            background: bg,
            full_diagnostics: false,
            stop_on_margin: false,
            ..Default::default()
        };
        for mode in [BackgroundMode::Frozen, BackgroundMode::CoEvolved] {
            let run = |count: usize| {
                let init = FamilyState::initial(&grid, &f, &cut, count, true, dir).unwrap();
                evolve_family(init, &opts(mode)).unwrap().final_state
            };
            let coarse = run(9);
            let fine = run(17);
            let err = |s: &FamilyState| {
                let i = 6 * (s.gammas.len() - 1) / 8;
                let hgam = s.gamma_spacing();
                let w = &s.w_slices.as_ref().unwrap()[i];
                [0, 1]
                    .map(|mu| {
                        let fd = s.slices[i + 1].z[mu].sub(&s.slices[i - 1].z[mu]).scale((0.5 / hgam).into());
                        fd.sub(&w[mu]).l2_norm()
                    })
                    .iter()
                    .fold(0.0f64, |a, b| a.max(*b))
            };
            let ratio = err(&coarse) / err(&fine);
            assert!((3.5..4.5).contains(&ratio), "{mode:?}: ratio {ratio}");
        }
    }

    #[test]
    fn coevolved_gamma_zero_slice_tracks_localized_real_solution() {
        let (grid, f, cut) = setup(32);
        let init = FamilyState::initial(&grid, &f, &cut, 3, false, 1.0).unwrap();
        let opts = EvolveOptions {
            dt: 2e-3,
            t_final: 0.01,
            full_diagnostics: false,
            stop_on_margin: false,
            ..Default::default()
        };
        let hist = evolve_family(init, &opts).unwrap();
        let s = &hist.final_state;
        let z0 = s.full_slice(1);
        let mut g = f.clone();
        for _ in 0..5 {
            g = muskat_step(&grid, &g, 2e-3, 1.0).unwrap().0;
        }
        let split = split_contour(&grid, &g, &cut);
        assert!(pair_diff(&z0, &split.f_c) < 1e-12);
    }

    #[test]
    fn mollified_operator_converges() {
        let (geom, bg, z) = slice_fixture(32);
        let op = SliceOperator::new(&geom, &bg, 0.5, 0.05, 1.0);
        let exact = complex_t(&op, &z).unwrap();
        let errs: Vec<f64> = [100u64, 1000, 10000]
            .iter()
            .map(|&n| pair_diff(&mollified_t(&op, &z, n).unwrap(), &exact))
            .collect();
        let slope = (errs[2] / errs[0]).log10() / 2.0;
        assert!((slope + 1.0).abs() < 0.15, "slope {slope}, errs {errs:?}");
    }
}
