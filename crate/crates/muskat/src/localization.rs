//! Smooth cutoffs λ and c with the splitting f = f^c + f̃.
//!
//! The supports are nested so that f̃ and λ are constant along the complex
//! curves α + ic(α)γt.
//!
//! Both cutoffs are glued from the smooth step
//!
//! ```text
//! S(x) = ∫_0^x e^{−1/(s(1−s))} ds / ∫_0^1 e^{−1/(s(1−s))} ds,   0 ≤ x ≤ 1
//! ```
//!
//! λ = 1 on |α| ≤ δ, λ = 1 − S((|α|−δ)/δ) on δ < |α| < 2δ, λ = 0 beyond 2δ.
//! c = δ_c on |α| ≤ δ/32, c = δ_c(1 − S((|α|−δ/32)/(3δ/32))) up to δ/8, 0 beyond.

use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;

use crate::error::{MuskatError, Result};
use crate::evolution::Contour;
use crate::spectral::{spectral_derivative, PeriodicField, SpectralGrid};

const PANELS: usize = 32;

fn rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(20).expect("nonzero degree")))
}

fn bump_density(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        (-1.0 / (s * (1.0 - s))).exp()
    }
}

fn bump_integral(x: f64) -> f64 {
    let width = x / PANELS as f64;
    (0..PANELS)
        .map(|p| {
            let a = p as f64 * width;
            rule().integrate(a, a + width, bump_density)
        })
        .sum()
}

fn bump_normalization() -> f64 {
    static Z: OnceLock<f64> = OnceLock::new();
    *Z.get_or_init(|| bump_integral(1.0))
}

/// Smooth monotone step from 0 (x ≤ 0) to 1 (x ≥ 1), flat to all orders at both ends.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else if x > 0.5 {
        1.0 - bump_integral(1.0 - x) / bump_normalization()
    } else {
        bump_integral(x) / bump_normalization()
    }
}

/// Value of the window cutoff λ at a real point.
pub fn lambda_value(alpha: f64, delta: f64) -> f64 {
    let a = alpha.abs();
    if a <= delta {
        1.0
    } else if a >= 2.0 * delta {
        0.0
    } else {
        1.0 - smooth_step((a - delta) / delta)
    }
}

/// Value of the strip-shape cutoff c at a real point.
pub fn c_value(alpha: f64, delta: f64, delta_c: f64) -> f64 {
    let a = alpha.abs();
    let inner = delta / 32.0;
    let outer = delta / 8.0;
    if a <= inner {
        delta_c
    } else if a >= outer {
        0.0
    } else {
        delta_c * (1.0 - smooth_step((a - inner) / (outer - inner)))
    }
}

/// Samples λ on the grid. Requires 2δ < π.
pub fn make_lambda(grid: &SpectralGrid, delta: f64) -> Result<PeriodicField> {
    if !(delta > 0.0 && 2.0 * delta < PI) {
        return Err(MuskatError::Config(format!(
            "delta must satisfy 0 < 2*delta < pi, got delta={delta}"
        )));
    }
    Ok(grid.sample_real(|a| lambda_value(a, delta)))
}

/// The bump c together with its spectral derivatives.
#[derive(Debug, Clone)]
pub struct CutoffBump {
    /// c(α).
    pub c: PeriodicField,
    /// c′(α), spectral.
    pub c_p: PeriodicField,
    /// c″(α), spectral.
    pub c_pp: PeriodicField,
    /// Sup norms of c, c′, c″, c‴, c⁗ on the grid.
    pub derivative_sups: [f64; 5],
}

/// Samples c and caches c′, c″ (spectral). Requires 0 < δ_c ≤ δ.
pub fn make_c(grid: &SpectralGrid, delta: f64, delta_c: f64) -> Result<CutoffBump> {
    if !(delta_c > 0.0 && delta_c <= delta) {
        return Err(MuskatError::Config(format!(
            "delta_c must satisfy 0 < delta_c <= delta, got delta_c={delta_c}, delta={delta}"
        )));
    }
    let c = grid.sample_real(|a| c_value(a, delta, delta_c));
    let mut derivative_sups = [0.0; 5];
    derivative_sups[0] = c.sup_norm();
    for (order, slot) in derivative_sups.iter_mut().enumerate().skip(1) {
        *slot = spectral_derivative(&c, order as u32).sup_norm();
    }
    let c_p = spectral_derivative(&c, 1);
    let c_pp = spectral_derivative(&c, 2);
    Ok(CutoffBump {
        c,
        c_p,
        c_pp,
        derivative_sups,
    })
}

/// The cutoff pair (λ, c) with the parameters that built it.
#[derive(Debug, Clone)]
pub struct CutoffPair {
    /// Window half-width δ.
    pub delta: f64,
    /// Strip height δ_c.
    pub delta_c: f64,
    /// λ(α).
    pub lambda: PeriodicField,
    /// c(α) and derivatives.
    pub bump: CutoffBump,
}

impl CutoffPair {
    /// Builds λ and c on the grid and validates every constructor invariant.
    pub fn new(grid: &SpectralGrid, delta: f64, delta_c: f64) -> Result<Self> {
        let lambda = make_lambda(grid, delta)?;
        let bump = make_c(grid, delta, delta_c)?;
        let needed = 64.0 * 2.0 * PI / delta;
        if (grid.n_points() as f64) < needed {
            log::warn!(
                "n_points={} is below 64*2pi/delta={needed:.0}; cutoff transitions are under-resolved",
                grid.n_points()
            );
        }
        let pair = Self {
            delta,
            delta_c,
            lambda,
            bump,
        };
        if !pair.satisfies_derivative_proxy() {
            log::warn!(
                "cutoff c has derivative sup norms {:?} exceeding delta={delta}",
                pair.bump.derivative_sups
            );
        }
        Ok(pair)
    }

    /// Assembles a pair from arbitrary fields without validation (for testing
    /// precondition checks downstream).
    pub fn from_fields(delta: f64, delta_c: f64, lambda: PeriodicField, c: PeriodicField) -> Self {
        let c_p = spectral_derivative(&c, 1);
        let c_pp = spectral_derivative(&c, 2);
        let mut derivative_sups = [0.0; 5];
        for (order, slot) in derivative_sups.iter_mut().enumerate() {
            *slot = spectral_derivative(&c, order as u32).sup_norm();
        }
        Self {
            delta,
            delta_c,
            lambda,
            bump: CutoffBump {
                c,
                c_p,
                c_pp,
                derivative_sups,
            },
        }
    }

    /// c(α) samples.
    pub fn c(&self) -> &PeriodicField {
        &self.bump.c
    }

    /// Whether c and its first four derivatives are bounded by δ on the grid.
    pub fn satisfies_derivative_proxy(&self) -> bool {
        self.bump.derivative_sups.iter().all(|&s| s <= self.delta)
    }

    /// Whether supp c lies inside {λ = 1} on the grid nodes.
    pub fn support_nested(&self) -> bool {
        self.bump
            .c
            .samples()
            .iter()
            .zip(self.lambda.samples())
            .all(|(c, l)| c.re == 0.0 || l.re == 1.0)
    }

    /// Grid mask of the localization window |α| ≤ 2δ.
    pub fn window_mask(&self, grid: &SpectralGrid) -> Vec<bool> {
        grid.nodes().iter().map(|a| a.abs() <= 2.0 * self.delta).collect()
    }
}

/// Tangent values with |∂_αf₁| at or below this are treated as zeros by [`choose_delta`].
pub const TANGENT_SIGN_TOLERANCE: f64 = 1e-8;

/// Halves δ until ∂_αf₁ has one strict sign (beyond [`TANGENT_SIGN_TOLERANCE`])
/// on every node of [−2δ, 2δ].
/// Returns the accepted δ and the number of halvings.
pub fn choose_delta(grid: &SpectralGrid, f: &Contour, delta0: f64) -> Result<(f64, u32)> {
    let df1 = f.tangent(grid).0;
    let mut delta = delta0;
    for halvings in 0..40 {
        let signs: Vec<f64> = grid
            .nodes()
            .iter()
            .zip(df1.samples())
            .filter(|(a, _)| a.abs() <= 2.0 * delta)
            .map(|(_, d)| d.re)
            .collect();
        if signs.len() < 3 {
            break;
        }
        if signs.iter().all(|&s| s > TANGENT_SIGN_TOLERANCE)
            || signs.iter().all(|&s| s < -TANGENT_SIGN_TOLERANCE)
        {
            return Ok((delta, halvings));
        }
        delta *= 0.5;
    }
    Err(MuskatError::Config(
        "no window around the origin has a uniform sign of the horizontal tangent".into(),
    ))
}

/// The localization triple (f^c, f̃, cutoffs).
#[derive(Debug, Clone)]
pub struct SplitState {
    /// Grid shared by all fields.
    pub grid: SpectralGrid,
    /// f^c = λ f, both components periodic.
    pub f_c: [PeriodicField; 2],
    /// f̃ − (α, 0) where f̃ = (1 − λ) f.
    pub f_tilde: [PeriodicField; 2],
    /// The cutoffs that produced the split.
    pub cutoffs: CutoffPair,
}

/// Splits f = f^c + f̃ with f^c = λf and f̃ = (1−λ)f.
pub fn split_contour(grid: &SpectralGrid, f: &Contour, cutoffs: &CutoffPair) -> SplitState {
    let lam = &cutoffs.lambda;
    let alpha = grid.sample_real(|a| a);
    let f1 = alpha.add(&f.g1);
    let one_minus = lam.map(|l| 1.0 - l);
    let f_c = [lam.mul(&f1), lam.mul(&f.g2)];
    let f_tilde = [
        lam.mul(&alpha).scale((-1.0).into()).add(&one_minus.mul(&f.g1)),
        one_minus.mul(&f.g2),
    ];
    let real = !f.complex_valued;
    SplitState {
        grid: grid.clone(),
        f_c: f_c.map(|g| realify(g, real)),
        f_tilde: f_tilde.map(|g| realify(g, real)),
        cutoffs: cutoffs.clone(),
    }
}

fn realify(g: PeriodicField, real: bool) -> PeriodicField {
    if real {
        PeriodicField::from_real(g.real_parts())
    } else {
        g
    }
}

impl SplitState {
    /// Reassembles (f₁ − α, f₂) from f^c + f̃.
    pub fn reassemble(&self) -> [PeriodicField; 2] {
        [
            self.f_c[0].add(&self.f_tilde[0]),
            self.f_c[1].add(&self.f_tilde[1]),
        ]
    }

    /// Replaces f̃ by the background part of a new full contour, keeping the cutoffs.
    pub fn with_background(&self, f: &Contour) -> Self {
        split_contour(&self.grid, f, &self.cutoffs)
    }
}

/// f̃ evaluated along α + ic(α)γt, which equals f̃(α) because f̃ vanishes on supp c.
pub fn f_tilde_on_curve(split: &SplitState, _gamma: f64, _t: f64) -> Result<[PeriodicField; 2]> {
    if !split.cutoffs.support_nested() {
        return Err(MuskatError::Config(
            "supp c is not contained in {lambda = 1}".into(),
        ));
    }
    Ok(split.f_tilde.clone())
}

/// λ evaluated along α + ic(α)γt, which equals λ(α) because λ is flat on supp c.
pub fn lambda_on_curve(cutoffs: &CutoffPair, _gamma: f64, _t: f64) -> Result<PeriodicField> {
    if !cutoffs.support_nested() {
        return Err(MuskatError::Config(
            "supp c is not contained in {lambda = 1}".into(),
        ));
    }
    Ok(cutoffs.lambda.clone())
}
