//! The periodic Muskat kernel and the quantities built from it.
//!
//! The module covers the exact and mollified kernels with their diagonal
//! limits. Principal-value integrals use singularity subtraction. The
//! arc-chord functional and the Gårding coefficients are evaluated on curves.
//!
//! ```text
//! K(d1, d2)   = sin d1 / (cosh d2 − cos d1)
//! Kⁿ(d1, d2)  = sin d1 · conj(D) / (|D|² + sin²(sep/2)/n),   D = cosh d2 − cos d1
//! ```
//!
//! Along a curve X(α) = (α + P₁(α), P₂(α)) with a = ∂X₁, b = ∂X₂ the kernel
//! K(X(α) − X(β)) behaves like L(α)·cot((α−β)/2) + κ₀(α) + O(α−β), where
//! L = a/(a²+b²) and κ₀ = (∂²X₁(a²−b²) + 2ab ∂²X₂)/(a²+b²)².

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{MuskatError, Result};
use crate::spectral::{hilbert_transform, spectral_derivative, PeriodicField, SpectralGrid, C64};

/// Relative floor for the kernel denominator.
pub const DENOM_FLOOR: f64 = 1e-12;

/// Smallest admissible |a² + b²| before the tangent is declared degenerate.
pub const TANGENT_FLOOR: f64 = 1e-14;

/// Arguments of the kernel: coordinate differences and the parameter offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelInput {
    /// Difference of the first coordinates.
    pub d1: C64,
    /// Difference of the second coordinates.
    pub d2: C64,
    /// Parameter offset α − β (only the mollified kernel uses it).
    pub sep: f64,
}

impl KernelInput {
    /// Real-valued input.
    pub fn real(d1: f64, d2: f64, sep: f64) -> Self {
        Self {
            d1: C64::new(d1, 0.0),
            d2: C64::new(d2, 0.0),
            sep,
        }
    }
}

/// sin, cos of d1 and cosh, sinh of d2, evaluated with real transcendentals.
#[derive(Debug, Clone, Copy)]
pub struct KernelTrig {
    /// sin d1.
    pub sin1: C64,
    /// cos d1.
    pub cos1: C64,
    /// cosh d2.
    pub cosh2: C64,
    /// sinh d2.
    pub sinh2: C64,
}

impl KernelTrig {
    /// Evaluates the four functions.
    #[inline]
    pub fn new(d1: C64, d2: C64) -> Self {
        let (sx, cx) = d1.re.sin_cos();
        let (shy, chy) = if d1.im == 0.0 {
            (0.0, 1.0)
        } else {
            (d1.im.sinh(), d1.im.cosh())
        };
        let (sv, cv) = if d2.im == 0.0 { (0.0, 1.0) } else { d2.im.sin_cos() };
        let (shu, chu) = (d2.re.sinh(), d2.re.cosh());
        Self {
            sin1: C64::new(sx * chy, cx * shy),
            cos1: C64::new(cx * chy, -sx * shy),
            cosh2: C64::new(chu * cv, shu * sv),
            sinh2: C64::new(shu * cv, chu * sv),
        }
    }

    /// Denominator D = cosh d2 − cos d1.
    #[inline]
    pub fn denom(&self) -> C64 {
        self.cosh2 - self.cos1
    }

    /// Whether |D| is above the floor 1e−12·(1 + |cosh d2|).
    #[inline]
    pub fn denom_ok(&self) -> bool {
        self.denom().norm() > DENOM_FLOOR * (1.0 + self.cosh2.norm())
    }

    /// K = sin d1 / D.
    #[inline]
    pub fn kernel(&self) -> C64 {
        self.sin1 / self.denom()
    }

    /// (∂K/∂d1, ∂K/∂d2).
    #[inline]
    pub fn gradient(&self) -> (C64, C64) {
        let d = self.denom();
        let d2 = d * d;
        (
            (self.cos1 * self.cosh2 - 1.0) / d2,
            -(self.sin1 * self.sinh2) / d2,
        )
    }
}

/// The Muskat kernel K; fails with an arc-chord violation when the
/// denominator is below the floor. The reported indices are (0, 0); use
/// [`kernel_k_at`] to attach grid indices.
pub fn kernel_k(inp: &KernelInput) -> Result<C64> {
    kernel_k_at(inp, 0, 0)
}

/// [`kernel_k`] with the grid indices attached to a possible failure.
pub fn kernel_k_at(inp: &KernelInput, alpha_index: usize, beta_index: usize) -> Result<C64> {
    let trig = KernelTrig::new(inp.d1, inp.d2);
    if !trig.denom_ok() {
        return Err(MuskatError::ArcChord {
            alpha_index,
            beta_index,
        });
    }
    Ok(trig.kernel())
}

/// Gradient (∂K/∂d1, ∂K/∂d2) of the kernel.
pub fn kernel_gradient(inp: &KernelInput) -> Result<(C64, C64)> {
    let trig = KernelTrig::new(inp.d1, inp.d2);
    if !trig.denom_ok() {
        return Err(MuskatError::ArcChord {
            alpha_index: 0,
            beta_index: 0,
        });
    }
    Ok(trig.gradient())
}

/// The mollified kernel Kⁿ = sin d1·conj(D)/(|D|² + sin²(sep/2)/n).
pub fn kernel_k_n(inp: &KernelInput, n: u64) -> C64 {
    let trig = KernelTrig::new(inp.d1, inp.d2);
    let d = trig.denom();
    let reg = (0.5 * inp.sep).sin().powi(2) / n as f64;
    let den = d.norm_sqr() + reg;
    if den == 0.0 {
        return C64::new(0.0, 0.0);
    }
    trig.sin1 * d.conj() / den
}

/// lim_{β→α} K·tan((α−β)/2) = a/(a²+b²) for tangent (a, b).
pub fn kernel_diagonal_limit(a: C64, b: C64) -> Result<C64> {
    let q = a * a + b * b;
    if q.norm() < TANGENT_FLOOR {
        return Err(MuskatError::DegenerateParameterization(0));
    }
    Ok(a / q)
}

/// Constant term κ₀ of the expansion K(X(α)−X(β)) = L cot((α−β)/2) + κ₀ + O(α−β).
#[inline]
pub fn laurent_constant(a: C64, b: C64, a_p: C64, b_p: C64) -> C64 {
    let q = a * a + b * b;
    (a_p * (a * a - b * b) + 2.0 * a * b * b_p) / (q * q)
}

/// Directional derivative of L = a/(a²+b²) along (a′, b′).
#[inline]
pub fn diagonal_limit_variation(a: C64, b: C64, a_p: C64, b_p: C64) -> C64 {
    let q = a * a + b * b;
    (a_p * (b * b - a * a) - 2.0 * a * b * b_p) / (q * q)
}

/// A closed curve X(α) = (α + P₁(α), P₂(α)) sampled on the grid, with its
/// first two derivatives.
#[derive(Debug, Clone)]
pub struct Curve {
    /// X₁ samples, including the α part.
    pub x1: Vec<C64>,
    /// X₂ samples.
    pub x2: Vec<C64>,
    /// ∂X₁ = 1 + ∂P₁.
    pub dx1: Vec<C64>,
    /// ∂X₂.
    pub dx2: Vec<C64>,
    /// ∂²X₁.
    pub ddx1: Vec<C64>,
    /// ∂²X₂.
    pub ddx2: Vec<C64>,
}

impl Curve {
    /// Builds the curve from the periodic parts P₁ = X₁ − α and P₂ = X₂.
    pub fn from_periodic(grid: &SpectralGrid, p1: &PeriodicField, p2: &PeriodicField) -> Self {
        let dp1 = spectral_derivative(p1, 1);
        let dp2 = spectral_derivative(p2, 1);
        let ddp1 = spectral_derivative(p1, 2);
        let ddp2 = spectral_derivative(p2, 2);
        Self {
            x1: grid
                .nodes()
                .iter()
                .zip(p1.samples())
                .map(|(&a, &p)| p + a)
                .collect(),
            x2: p2.samples().to_vec(),
            dx1: dp1.samples().iter().map(|&v| v + 1.0).collect(),
            dx2: dp2.into_samples(),
            ddx1: ddp1.into_samples(),
            ddx2: ddp2.into_samples(),
        }
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.x1.len()
    }

    /// Whether the curve has no nodes.
    pub fn is_empty(&self) -> bool {
        self.x1.is_empty()
    }

    /// Trigonometric data of the kernel between nodes j and k.
    #[inline]
    pub fn trig(&self, j: usize, k: usize) -> KernelTrig {
        KernelTrig::new(self.x1[j] - self.x1[k], self.x2[j] - self.x2[k])
    }

    /// K(X(α_j) − X(α_k)) for j ≠ k.
    #[inline]
    pub fn kernel(&self, j: usize, k: usize) -> Result<C64> {
        let trig = self.trig(j, k);
        if !trig.denom_ok() {
            return Err(MuskatError::ArcChord {
                alpha_index: j,
                beta_index: k,
            });
        }
        Ok(trig.kernel())
    }

    /// The pair (L, κ₀) at every node.
    pub fn smooth_factor(&self) -> Result<SmoothFactor> {
        let n = self.len();
        let mut l = Vec::with_capacity(n);
        let mut kappa0 = Vec::with_capacity(n);
        for j in 0..n {
            let (a, b) = (self.dx1[j], self.dx2[j]);
            let lj = kernel_diagonal_limit(a, b)
                .map_err(|_| MuskatError::DegenerateParameterization(j))?;
            l.push(lj);
            kappa0.push(laurent_constant(a, b, self.ddx1[j], self.ddx2[j]));
        }
        Ok(SmoothFactor { l, kappa0 })
    }
}

/// Fields (L, κ₀) describing the singular part G ≈ L cot((α−β)/2) + κ₀.
#[derive(Debug, Clone)]
pub struct SmoothFactor {
    /// Coefficient of the cotangent singularity.
    pub l: Vec<C64>,
    /// Diagonal value of the remainder G − L cot((α−β)/2).
    pub kappa0: Vec<C64>,
}

/// p.v.∫ G(α_j, β) g(β) dβ on the grid.
///
/// The cotangent part L·cot is routed through the Hilbert transform
/// (p.v.∫ cot((α−β)/2) g(β) dβ = 2π H g) and the bounded remainder
/// G − L cot is summed by the trapezoid rule, with κ₀·g(α_j) on the diagonal.
/// `kernel(j, k)` supplies G off the diagonal.
pub fn pv_integral<F>(
    kernel: F,
    smooth: &SmoothFactor,
    density: &PeriodicField,
) -> Result<PeriodicField>
where
    F: Fn(usize, usize) -> Result<C64> + Sync,
{
    let n = density.n_points();
    let h = 2.0 * PI / n as f64;
    let hil = hilbert_transform(density);
    let g = density.samples();
    let rows: Result<Vec<C64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let lj = smooth.l[j];
            if !lj.is_finite() || !smooth.kappa0[j].is_finite() {
                return Err(MuskatError::ArcChord {
                    alpha_index: j,
                    beta_index: j,
                });
            }
            let mut acc = smooth.kappa0[j] * g[j];
            for k in 0..n {
                if k == j {
                    continue;
                }
                let half = 0.5 * (j as f64 - k as f64) * h;
                let cot = half.cos() / half.sin();
                acc += (kernel(j, k)? - lj * cot) * g[k];
            }
            Ok(lj * 2.0 * PI * hil.samples()[j] + acc * h)
        })
        .collect();
    Ok(PeriodicField::new(rows?))
}

/// Wraps a parameter offset into [−π, π].
#[inline]
pub fn wrap_offset(s: f64) -> f64 {
    let w = (s + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI && s > 0.0 {
        PI
    } else {
        w
    }
}

/// sup over |α| ≤ 2δ and all β of (α−β)²/|cosh(ΔX₂) − cos(ΔX₁)|, with the
/// offset α−β wrapped into [−π, π] and the diagonal replaced by 2/|a²+b²|.
/// Returns +∞ when any off-diagonal denominator is below the floor.
pub fn arc_chord_norm(grid: &SpectralGrid, curve: &Curve, delta: f64) -> f64 {
    let n = grid.n_points();
    let nodes = grid.nodes();
    (0..n)
        .into_par_iter()
        .filter(|&j| nodes[j].abs() <= 2.0 * delta)
        .map(|j| {
            let mut sup: f64 = {
                let q = curve.dx1[j] * curve.dx1[j] + curve.dx2[j] * curve.dx2[j];
                if q.norm() == 0.0 {
                    f64::INFINITY
                } else {
                    2.0 / q.norm()
                }
            };
            for k in 0..n {
                if k == j {
                    continue;
                }
                let trig = curve.trig(j, k);
                if !trig.denom_ok() {
                    return f64::INFINITY;
                }
                let s = wrap_offset(nodes[j] - nodes[k]);
                sup = sup.max(s * s / trig.denom().norm());
            }
            sup
        })
        .reduce(|| 0.0, f64::max)
}

/// L¹, L² on the grid and the Gårding margin over the window.
#[derive(Debug, Clone)]
pub struct CoefficientPair {
    /// L¹ = −2π·rho·a/(a²+b²).
    pub l1: PeriodicField,
    /// L² = icγ/W + (rho/W)·p.v.∫K·W(β)dβ, W = 1 + ic′γt.
    pub l2: PeriodicField,
    /// min over |α| ≤ 2δ of −dir·Re L¹ − |Im L²|.
    pub margin: f64,
}

impl CoefficientPair {
    /// ‖z‖_RT = 1/margin when the margin is positive, +∞ otherwise.
    pub fn rt_norm(&self) -> f64 {
        if self.margin > 0.0 {
            1.0 / self.margin
        } else {
            f64::INFINITY
        }
    }
}

/// Inputs describing the complex curve weights of one slice.
#[derive(Debug, Clone, Copy)]
pub struct CurveWeights<'a> {
    /// c(α) samples.
    pub c: &'a PeriodicField,
    /// c′(α) samples.
    pub c_p: &'a PeriodicField,
    /// Curve parameter γ.
    pub gamma: f64,
    /// Time t (signed).
    pub t: f64,
}

/// Coefficients of the linearized principal part for the curve `curve`
/// (the full X = z + f̃ of a slice). `direction` is +1 for forward time and
/// −1 for backward time; `delta` sets the window |α| ≤ 2δ.
pub fn coefficients_for_curve(
    grid: &SpectralGrid,
    curve: &Curve,
    weights: CurveWeights<'_>,
    rho_factor: f64,
    delta: f64,
    direction: f64,
) -> Result<CoefficientPair> {
    let smooth = curve.smooth_factor()?;
    let i = C64::new(0.0, 1.0);
    let w: Vec<C64> = weights
        .c_p
        .samples()
        .iter()
        .map(|cp| 1.0 + i * cp.re * weights.gamma * weights.t)
        .collect();
    let density = PeriodicField::new(w.clone());
    let pv = pv_integral(|j, k| curve.kernel(j, k), &smooth, &density)?;
    let l1 = PeriodicField::new(smooth.l.iter().map(|l| -2.0 * PI * rho_factor * l).collect());
    let l2 = PeriodicField::new(
        (0..grid.n_points())
            .map(|j| {
                let c = weights.c.samples()[j].re;
                (i * c * weights.gamma + rho_factor * pv.samples()[j]) / w[j]
            })
            .collect(),
    );
    let margin = grid
        .nodes()
        .iter()
        .enumerate()
        .filter(|(_, a)| a.abs() <= 2.0 * delta)
        .map(|(j, _)| -direction * l1.samples()[j].re - l2.samples()[j].im.abs())
        .fold(f64::INFINITY, f64::min);
    Ok(CoefficientPair { l1, l2, margin })
}

/// Rayleigh–Taylor coefficient σ = rho·∂f₁/((∂f₁)² + (∂f₂)²) of a real
/// contour given by its tangent fields; NaN where the tangent vanishes.
pub fn rt_coefficient_from_tangent(
    df1: &PeriodicField,
    df2: &PeriodicField,
    rho_factor: f64,
) -> PeriodicField {
    PeriodicField::from_real(
        df1.samples()
            .iter()
            .zip(df2.samples())
            .map(|(a, b)| {
                let q = a.re * a.re + b.re * b.re;
                if q == 0.0 {
                    f64::NAN
                } else {
                    rho_factor * a.re / q
                }
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kernel_point_values() {
        let k = kernel_k(&KernelInput::real(PI / 2.0, 0.0, 0.0)).unwrap();
        assert!((k - 1.0).norm() < 1e-15);
        let k = kernel_k(&KernelInput::real(PI, 0.0, 0.0)).unwrap();
        assert!(k.norm() < 1e-15);
        let k = kernel_k(&KernelInput::real(0.0, 1.0, 0.0)).unwrap();
        assert!(k.norm() < 1e-15);
        assert!(matches!(
            kernel_k(&KernelInput::real(0.0, 0.0, 0.0)),
            Err(MuskatError::ArcChord { .. })
        ));
    }

    #[test]
    fn kernel_is_odd() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let d1 = C64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-0.3..0.3));
            let d2 = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-0.3..0.3));
            let a = kernel_k(&KernelInput { d1, d2, sep: 0.5 }).unwrap();
            let b = kernel_k(&KernelInput {
                d1: -d1,
                d2: -d2,
                sep: -0.5,
            })
            .unwrap();
            assert!((a + b).norm() < 1e-12 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn kernel_gradient_matches_finite_differences() {
        let d1 = C64::new(0.7, 0.1);
        let d2 = C64::new(-0.3, 0.05);
        let (g1, g2) = kernel_gradient(&KernelInput { d1, d2, sep: 0.0 }).unwrap();
        let e = 1e-6;
        let k = |a: C64, b: C64| kernel_k(&KernelInput { d1: a, d2: b, sep: 0.0 }).unwrap();
        let f1 = (k(d1 + e, d2) - k(d1 - e, d2)) / (2.0 * e);
        let f2 = (k(d1, d2 + e) - k(d1, d2 - e)) / (2.0 * e);
        assert!((f1 - g1).norm() < 1e-8);
        assert!((f2 - g2).norm() < 1e-8);
    }

    #[test]
    fn mollified_kernel_limits() {
        let inp = KernelInput::real(PI / 2.0, 0.0, PI / 2.0);
        assert!((kernel_k_n(&inp, 1_000_000) - 1.0).norm() < 1e-6);
        assert!(kernel_k_n(&KernelInput::real(0.0, 0.7, 0.3), 10).norm() == 0.0);
        let inp = KernelInput::real(0.4, 0.2, 0.0);
        let k = kernel_k(&inp).unwrap();
        assert!((kernel_k_n(&inp, 5) - k).norm() < 1e-14);
    }

    #[test]
    fn mollified_kernel_error_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let d1 = rng.gen_range(-3.0..3.0);
            let d2 = rng.gen_range(-1.0..1.0);
            let sep = rng.gen_range(-PI..PI);
            let n = rng.gen_range(10..10_000u64);
            let inp = KernelInput::real(d1, d2, sep);
            let trig = KernelTrig::new(inp.d1, inp.d2);
            let dd = trig.denom().re;
            if dd < 1e-2 {
                continue;
            }
            let k = kernel_k(&inp).unwrap();
            let kn = kernel_k_n(&inp, n);
            let bound = k.norm() * (0.5 * sep).sin().powi(2) / (n as f64 * dd * dd);
            assert!((kn - k).norm() <= bound * (1.0 + 1e-10) + 1e-15);
        }
    }

    #[test]
    fn diagonal_limit_values_and_small_s_oracle() {
        assert!((kernel_diagonal_limit(1.0.into(), 0.0.into()).unwrap() - 1.0).norm() < 1e-15);
        assert!(kernel_diagonal_limit(0.0.into(), 1.0.into()).unwrap().norm() < 1e-15);
        let l = kernel_diagonal_limit(1.0.into(), 1.0.into()).unwrap();
        assert!((l - 0.5).norm() < 1e-15);
        let mut errs = Vec::new();
        for s in [1e-2, 1e-3, 1e-4] {
            let k = kernel_k(&KernelInput::real(s, s, s)).unwrap();
            let approx = k * (0.5 * s).tan();
            errs.push((approx - l).norm());
            if s == 1e-4 {
                assert!((approx - l).norm() < 1e-6);
            }
        }
        assert!(errs[0] / errs[1] > 5.0 && errs[1] / errs[2] > 5.0);
        assert!(matches!(
            kernel_diagonal_limit(0.0.into(), 0.0.into()),
            Err(MuskatError::DegenerateParameterization(_))
        ));
    }

    #[test]
    fn laurent_constant_matches_kernel_expansion() {
        let grid = SpectralGrid::new(64).unwrap();
        let p1 = grid.sample_real(|a| 0.2 * a.sin());
        let p2 = grid.sample_real(|a| 0.3 * (a + 0.4).cos());
        let curve = Curve::from_periodic(&grid, &p1, &p2);
        let sf = curve.smooth_factor().unwrap();
        let j = 20;
        let x = |a: f64| (a + 0.2 * a.sin(), 0.3 * (a + 0.4).cos());
        let aj = grid.nodes()[j];
        for s in [1e-3f64, -1e-3] {
            let (x1a, x2a) = x(aj);
            let (x1b, x2b) = x(aj - s);
            let k = kernel_k(&KernelInput::real(x1a - x1b, x2a - x2b, s)).unwrap();
            let rem = k - sf.l[j] / (0.5 * s).tan();
            assert!((rem - sf.kappa0[j]).norm() < 1e-3);
        }
    }

    #[test]
    fn pv_integral_reduces_to_hilbert_for_cotangent() {
        let grid = SpectralGrid::new(64).unwrap();
        let n = 64;
        let h = grid.spacing();
        let g = grid.sample_real(|a| (3.0 * a).cos());
        let smooth = SmoothFactor {
            l: vec![C64::new(1.0, 0.0); n],
            kappa0: vec![C64::new(0.0, 0.0); n],
        };
        let cot = |j: usize, k: usize| {
            let half = 0.5 * (j as f64 - k as f64) * h;
            Ok(C64::new(half.cos() / half.sin(), 0.0))
        };
        let pv = pv_integral(cot, &smooth, &g).unwrap();
        let expected = grid.sample_real(|a| 2.0 * PI * (3.0 * a).sin());
        assert!(pv.sub(&expected).sup_norm() < 1e-10);
        let zero = pv_integral(cot, &smooth, &PeriodicField::zeros(n)).unwrap();
        assert!(zero.sup_norm() == 0.0);
    }

    #[test]
    fn pv_integral_of_bounded_kernel_matches_fine_trapezoid() {
        let kern = |a: f64, b: f64| (a - 2.0 * b).cos() / (2.0 + (a + b).sin());
        let dens = |b: f64| (b.sin()).exp();
        let grid = SpectralGrid::new(64).unwrap();
        let nodes = grid.nodes().to_vec();
        let smooth = SmoothFactor {
            l: vec![C64::new(0.0, 0.0); 64],
            kappa0: nodes.iter().map(|&a| C64::new(kern(a, a), 0.0)).collect(),
        };
        let pv = pv_integral(
            |j, k| Ok(C64::new(kern(nodes[j], nodes[k]), 0.0)),
            &smooth,
            &grid.sample_real(dens),
        )
        .unwrap();
        let fine = SpectralGrid::new(640).unwrap();
        for (j, &a) in nodes.iter().enumerate() {
            let oracle: f64 =
                fine.nodes().iter().map(|&b| kern(a, b) * dens(b)).sum::<f64>() * fine.spacing();
            assert!((pv.samples()[j].re - oracle).abs() < 1e-8);
        }
    }

    #[test]
    fn arc_chord_of_flat_contour() {
        let grid = SpectralGrid::new(64).unwrap();
        let zero = PeriodicField::zeros(64);
        let curve = Curve::from_periodic(&grid, &zero, &zero);
        let arc = arc_chord_norm(&grid, &curve, 1.5);
        assert!((arc - PI * PI / 2.0).abs() < 1e-12, "arc {arc}");
        let q = curve.dx1[0] * curve.dx1[0];
        assert!((2.0 / q.norm() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn arc_chord_detects_self_intersection() {
        let grid = SpectralGrid::new(16).unwrap();
        let nodes = grid.nodes().to_vec();
        let mut p1 = vec![0.0; 16];
        let p2 = vec![0.0; 16];
        p1[9] = nodes[8] - nodes[9];
        let curve = Curve::from_periodic(
            &grid,
            &PeriodicField::from_real(p1),
            &PeriodicField::from_real(p2),
        );
        assert_eq!(arc_chord_norm(&grid, &curve, 1.5), f64::INFINITY);
    }

    #[test]
    fn rt_coefficient_signs() {
        let grid = SpectralGrid::new(64).unwrap();
        let one = grid.sample_real(|_| 1.0);
        let zero = PeriodicField::zeros(64);
        let s = rt_coefficient_from_tangent(&one, &zero, 1.0);
        assert!(s.samples().iter().all(|v| (v.re - 1.0).abs() < 1e-15));
        let s = rt_coefficient_from_tangent(&one.scale((-1.0).into()), &zero, 1.0);
        assert!(s.samples().iter().all(|v| (v.re + 1.0).abs() < 1e-15));
        let s = rt_coefficient_from_tangent(&zero, &zero, 1.0);
        assert!(s.samples()[0].re.is_nan());
    }
}
