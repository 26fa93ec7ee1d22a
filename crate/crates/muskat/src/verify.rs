//! Self-checks shared by the command line and the acceptance suite.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::diagnostics::{check_lemma_for_m1, check_lemma_switch};
use crate::error::Result;
use crate::localization::CutoffPair;
use crate::spectral::{
    from_modes, hilbert_transform, lambda_operator, spectral_derivative, PeriodicField, SpectralGrid, C64,
};

/// One named measurement against a threshold.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    /// What was measured.
    pub name: String,
    /// Measured value.
    pub value: f64,
    /// Threshold.
    pub tolerance: f64,
    /// Whether the value is within the threshold.
    pub passed: bool,
}

impl Check {
    /// value ≤ tolerance.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }

    /// value inside [lo, hi]; `tolerance` records hi.
    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance: hi,
            passed: (lo..=hi).contains(&value),
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {}: {:.3e} (limit {:.3e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.tolerance
        )
    }
}

/// The Fourier-multiplier identities and Parseval on an n-point grid.
pub fn spectral_checks(n: usize, tolerance: f64) -> Result<Vec<Check>> {
    let grid = SpectralGrid::new(n)?;
    let half = (n / 2) as i64;
    let mut hilbert: f64 = 0.0;
    let mut lambda: f64 = 0.0;
    for k in 1..half {
        let kf = k as f64;
        let hc = hilbert_transform(&grid.sample_real(|x| (kf * x).cos()));
        hilbert = hilbert.max(hc.sub(&grid.sample_real(|x| (kf * x).sin())).sup_norm());
        for sign in [1.0, -1.0] {
            let e = grid.sample(|x| C64::from_polar(1.0, sign * kf * x));
            lambda = lambda.max(lambda_operator(&e).sub(&e.scale(C64::new(kf, 0.0))).sup_norm());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut modes = vec![C64::new(0.0, 0.0); n];
    for (m, slot) in modes.iter_mut().enumerate() {
        let k = m as i64 - half + 1;
        if k.abs() < half {
            *slot = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) / (1.0 + (k * k) as f64);
        }
    }
    let g = from_modes(&modes)?;
    let composed = hilbert_transform(&spectral_derivative(&g, 1));
    let lambda_h = lambda_operator(&g).sub(&composed).sup_norm();
    let physical = g.l2_norm().powi(2);
    let spectral = 2.0 * PI * g.modes().iter().map(|c| c.norm_sqr()).sum::<f64>();
    let parseval = (physical - spectral).abs() / spectral.max(1.0);
    Ok(vec![
        Check::at_most("hilbert of cos k is sin k", hilbert, tolerance),
        Check::at_most("lambda of exp(ik) is |k| exp(ik)", lambda, tolerance),
        Check::at_most("lambda equals hilbert of derivative", lambda_h, tolerance),
        Check::at_most("parseval", parseval, tolerance),
    ])
}

/// Cutoffs used by the lemma checks: δ = 1.5, δ_c = 0.05 on 512 points.
pub fn lemma_cutoffs() -> Result<(SpectralGrid, CutoffPair)> {
    let grid = SpectralGrid::new(512)?;
    let cut = CutoffPair::new(&grid, 1.5, 0.05)?;
    Ok((grid, cut))
}

/// h(α, γ) = H(α + ic(α)γt) with H(u) = 0.3 cos u + 0.1 sin 2u.
pub fn analytic_family<'a>(
    grid: &'a SpectralGrid,
    cut: &'a CutoffPair,
    t: f64,
) -> impl Fn(f64) -> PeriodicField + 'a {
    move |g: f64| {
        PeriodicField::new(
            grid.nodes()
                .iter()
                .zip(cut.bump.c.samples())
                .map(|(a, cv)| {
                    let u = C64::new(*a, cv.re * g * t);
                    0.3 * u.cos() + 0.1 * (2.0 * u).sin()
                })
                .collect(),
        )
    }
}

/// Residuals of both commutation identities on the derived families at
/// Δγ = 1/32, t = 0.005, and their refinement ratios from Δγ = 1/16 on
/// generic families at t = 0.05.
pub fn lemma_checks(tolerance: f64) -> Result<Vec<Check>> {
    let (grid, cut) = lemma_cutoffs()?;
    let t = 0.005;
    let (gamma, dg) = (0.3, 1.0 / 32.0);
    let poly = |g: f64| grid.sample_real(move |x| x.cos() * g * g);
    let analytic = analytic_family(&grid, &cut, t);
    let one = |_: f64| grid.sample_real(|_| 1.0);
    let xcos = |_: f64| grid.sample_real(|b| b.cos());
    let linear = |u: C64| (u, C64::new(1.0, 0.0));
    let sine = |u: C64| (u.sin(), u.cos());

    let mut checks = vec![
        Check::at_most("switch, cos(a) g^2", check_lemma_switch(&cut, &poly, gamma, dg, t), tolerance),
        Check::at_most("switch, analytic family", check_lemma_switch(&cut, &analytic, gamma, dg, t), tolerance),
        Check::at_most(
            "kernel identity, linear kernel",
            check_lemma_for_m1(&grid, &linear, &one, &analytic, &cut, gamma, dg, t)?,
            tolerance,
        ),
        Check::at_most(
            "kernel identity, sine kernel with X = cos",
            check_lemma_for_m1(&grid, &sine, &xcos, &analytic, &cut, gamma, dg, t)?,
            tolerance,
        ),
    ];

    let t_gen = 0.05;
    let generic = |g: f64| grid.sample_real(move |x| (x + g).sin().exp() * (g * x.cos()).cos());
    let r1 = check_lemma_switch(&cut, &generic, gamma, 2.0 * dg, t_gen);
    let r2 = check_lemma_switch(&cut, &generic, gamma, dg, t_gen);
    checks.push(Check::within("switch refinement ratio", r1 / r2, 3.5, 4.5));
    let hg = |g: f64| grid.sample_real(move |x| (x + 0.5 * g).sin() + 0.2 * (2.0 * x).cos() * g);
    let k1 = check_lemma_for_m1(&grid, &sine, &xcos, &hg, &cut, gamma, 2.0 * dg, t_gen)?;
    let k2 = check_lemma_for_m1(&grid, &sine, &xcos, &hg, &cut, gamma, dg, t_gen)?;
    checks.push(Check::within("kernel identity refinement ratio", k1 / k2, 3.5, 4.5));
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_checks_pass_on_small_grid() {
        for c in spectral_checks(64, 1e-11).unwrap() {
            assert!(c.passed, "{c}");
        }
    }
}
