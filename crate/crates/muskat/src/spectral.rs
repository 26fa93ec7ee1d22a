//! Periodic trigonometric toolkit on the uniform grid α_j = −π + 2πj/n.
//!
//! Mode convention:
//!
//! ```text
//! ĝ(k) = (1/n) Σ_j g_j e^{−ikα_j},   k ∈ {−n/2+1, …, n/2}
//! g(α) = Σ_{|k|<n/2} ĝ(k) e^{ikα} + ĝ(n/2) cos(nα/2)
//! ```
//!
//! so that Parseval reads Σ|g_j|²/n = Σ|ĝ(k)|². Every multiplier with a
//! nonzero order (∂, H, Λ) annihilates the Nyquist mode k = n/2, which keeps
//! real fields real and makes Λ = H∘∂ hold exactly on the grid.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{MuskatError, Result};

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;

/// Imaginary unit.
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Mode amplitudes below this level are treated as numerical noise.
pub const MODE_NOISE_FLOOR: f64 = 1e-14;

type PlanPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plans(n: usize) -> PlanPair {
    static CACHE: OnceLock<Mutex<HashMap<usize, PlanPair>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

/// Forward FFT of a sample vector, normalized by 1/n, in FFT storage order
/// (index m holds wavenumber m for m ≤ n/2 and m − n above). The (−1)^k phase
/// from α_0 = −π is not applied.
fn fft_normalized(samples: &[C64]) -> Vec<C64> {
    let n = samples.len();
    let (fwd, _) = plans(n);
    let mut buf = samples.to_vec();
    fwd.process(&mut buf);
    let scale = 1.0 / n as f64;
    for v in &mut buf {
        *v *= scale;
    }
    buf
}

fn ifft(mut coeffs: Vec<C64>) -> Vec<C64> {
    let n = coeffs.len();
    let (_, inv) = plans(n);
    inv.process(&mut coeffs);
    coeffs
}

/// Signed wavenumber stored at FFT index `m`.
#[inline]
pub fn wavenumber(m: usize, n: usize) -> i64 {
    if m <= n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

/// Uniform grid on [−π, π) with an optional dealiasing fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGrid {
    n_points: usize,
    nodes: Vec<f64>,
    dealias_fraction: f64,
}

impl SpectralGrid {
    /// Builds the grid; `n_points` must be a positive even integer.
    pub fn new(n_points: usize) -> Result<Self> {
        if n_points == 0 || !n_points.is_multiple_of(2) {
            return Err(MuskatError::Config(format!(
                "n_points must be a positive even integer, got {n_points}"
            )));
        }
        let h = 2.0 * PI / n_points as f64;
        let nodes = (0..n_points).map(|j| -PI + h * j as f64).collect();
        Ok(Self {
            n_points,
            nodes,
            dealias_fraction: 2.0 / 3.0,
        })
    }

    /// Replaces the dealiasing fraction, which must lie in (0, 1].
    pub fn with_dealias_fraction(mut self, fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(MuskatError::Config(format!(
                "dealias_fraction must lie in (0,1], got {fraction}"
            )));
        }
        self.dealias_fraction = fraction;
        Ok(self)
    }

    /// Number of grid points.
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Grid nodes α_j.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Grid spacing 2π/n.
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n_points as f64
    }

    /// Dealiasing fraction used by [`SpectralGrid::dealias`].
    pub fn dealias_fraction(&self) -> f64 {
        self.dealias_fraction
    }

    /// Samples a real function on the grid.
    pub fn sample_real(&self, f: impl Fn(f64) -> f64) -> PeriodicField {
        PeriodicField::from_real(self.nodes.iter().map(|&a| f(a)).collect())
    }

    /// Samples a complex function on the grid.
    pub fn sample(&self, f: impl Fn(f64) -> C64) -> PeriodicField {
        PeriodicField::new(self.nodes.iter().map(|&a| f(a)).collect())
    }

    /// Zeroes every mode with |k| > fraction·n/2 (the 2/3 rule by default).
    pub fn dealias(&self, g: &PeriodicField) -> PeriodicField {
        let keep = (self.dealias_fraction * (self.n_points / 2) as f64).floor() as usize;
        project_modes(g, keep)
    }
}

/// A complex 2π-periodic function stored by its samples on the uniform grid.
///
/// Modes are computed on first request and cached; the value is immutable
/// afterwards, so it can be shared freely between threads.
#[derive(Debug, Clone)]
pub struct PeriodicField {
    samples: Vec<C64>,
    real: bool,
    modes: OnceLock<Vec<C64>>,
}

impl PartialEq for PeriodicField {
    fn eq(&self, other: &Self) -> bool {
        self.samples == other.samples && self.real == other.real
    }
}

impl PeriodicField {
    /// Wraps complex samples taken at α_j = −π + 2πj/n.
    pub fn new(samples: Vec<C64>) -> Self {
        Self {
            samples,
            real: false,
            modes: OnceLock::new(),
        }
    }

    /// Wraps real samples; the field is flagged as real.
    pub fn from_real(samples: Vec<f64>) -> Self {
        Self {
            samples: samples.into_iter().map(|x| C64::new(x, 0.0)).collect(),
            real: true,
            modes: OnceLock::new(),
        }
    }

    /// Field of `n` zeros flagged as real.
    pub fn zeros(n: usize) -> Self {
        Self::from_real(vec![0.0; n])
    }

    fn with_flag(samples: Vec<C64>, real: bool) -> Self {
        let mut field = Self::new(samples);
        if real {
            field.set_real();
        }
        field
    }

    fn set_real(&mut self) {
        for v in &mut self.samples {
            v.im = 0.0;
        }
        self.real = true;
    }

    /// Number of samples.
    pub fn n_points(&self) -> usize {
        self.samples.len()
    }

    /// Sample values.
    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    /// Consumes the field and returns its samples.
    pub fn into_samples(self) -> Vec<C64> {
        self.samples
    }

    /// Whether the field was flagged real.
    pub fn is_real(&self) -> bool {
        self.real
    }

    /// Real parts of the samples.
    pub fn real_parts(&self) -> Vec<f64> {
        self.samples.iter().map(|v| v.re).collect()
    }

    /// Mode array indexed k = −n/2+1, …, n/2 in ascending order.
    pub fn modes(&self) -> &[C64] {
        self.modes.get_or_init(|| to_modes_vec(&self.samples))
    }

    /// Mode ĝ(k) for k in the stored range; zero outside it.
    pub fn mode(&self, k: i64) -> C64 {
        let n = self.n_points() as i64;
        if k <= -n / 2 || k > n / 2 {
            return C64::new(0.0, 0.0);
        }
        self.modes()[(k + n / 2 - 1) as usize]
    }

    /// Discrete L² norm on [−π, π]: sqrt(h Σ|g_j|²).
    pub fn l2_norm(&self) -> f64 {
        let h = 2.0 * PI / self.n_points() as f64;
        (h * self.samples.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Largest sample modulus.
    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Mean value ĝ(0).
    pub fn mean(&self) -> C64 {
        self.samples.iter().sum::<C64>() / self.n_points() as f64
    }

    /// Pointwise map of the samples; the result is complex-valued.
    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self::new(self.samples.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination with another field of the same length.
    pub fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        assert_eq!(self.n_points(), other.n_points(), "field length mismatch");
        Self::new(
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    /// self + other, keeping the real flag when both are real.
    pub fn add(&self, other: &Self) -> Self {
        Self::with_flag(self.zip_with(other, |a, b| a + b).samples, self.real && other.real)
    }

    /// self − other, keeping the real flag when both are real.
    pub fn sub(&self, other: &Self) -> Self {
        Self::with_flag(self.zip_with(other, |a, b| a - b).samples, self.real && other.real)
    }

    /// Pointwise product, keeping the real flag when both are real.
    pub fn mul(&self, other: &Self) -> Self {
        Self::with_flag(self.zip_with(other, |a, b| a * b).samples, self.real && other.real)
    }

    /// Multiplication by a complex scalar.
    pub fn scale(&self, s: C64) -> Self {
        let real = self.real && s.im == 0.0;
        Self::with_flag(self.samples.iter().map(|&v| v * s).collect(), real)
    }

    /// Translation by `shift` grid nodes: result_j = g_{j−shift}.
    pub fn shift_nodes(&self, shift: isize) -> Self {
        let n = self.n_points() as isize;
        let samples = (0..n)
            .map(|j| self.samples[(j - shift).rem_euclid(n) as usize])
            .collect();
        Self::with_flag(samples, self.real)
    }

    /// Largest |imaginary part| of the samples.
    pub fn max_imag(&self) -> f64 {
        self.samples.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }
}

fn to_modes_vec(samples: &[C64]) -> Vec<C64> {
    let n = samples.len();
    let fft = fft_normalized(samples);
    let half = n as i64 / 2;
    (-half + 1..=half)
        .map(|k| {
            let m = k.rem_euclid(n as i64) as usize;
            if k % 2 == 0 {
                fft[m]
            } else {
                -fft[m]
            }
        })
        .collect()
}

/// Mode array of `field`, indexed k = −n/2+1, …, n/2.
pub fn to_modes(field: &PeriodicField) -> Vec<C64> {
    field.modes().to_vec()
}

/// Inverse of [`to_modes`]: builds the field whose modes are `modes`.
pub fn from_modes(modes: &[C64]) -> Result<PeriodicField> {
    let n = modes.len();
    if n == 0 || !n.is_multiple_of(2) {
        return Err(MuskatError::Config(format!(
            "mode array length must be positive and even, got {n}"
        )));
    }
    let half = n as i64 / 2;
    let mut coeffs = vec![C64::new(0.0, 0.0); n];
    for (i, &c) in modes.iter().enumerate() {
        let k = i as i64 - half + 1;
        let m = k.rem_euclid(n as i64) as usize;
        coeffs[m] = if k % 2 == 0 { c } else { -c };
    }
    Ok(PeriodicField::new(ifft(coeffs)))
}

/// Applies a Fourier multiplier m(k) to `g`. The Nyquist mode is removed
/// when `kill_nyquist` is set.
pub fn apply_multiplier(
    g: &PeriodicField,
    symbol: impl Fn(i64) -> C64,
    kill_nyquist: bool,
    keeps_real: bool,
) -> PeriodicField {
    let n = g.n_points();
    let mut coeffs = fft_normalized(g.samples());
    for (m, c) in coeffs.iter_mut().enumerate() {
        let k = wavenumber(m, n);
        if kill_nyquist && m == n / 2 {
            *c = C64::new(0.0, 0.0);
        } else {
            *c *= symbol(k);
        }
    }
    PeriodicField::with_flag(ifft(coeffs), g.is_real() && keeps_real)
}

/// ∂_α^order g via multiplication by (ik)^order.
pub fn spectral_derivative(g: &PeriodicField, order: u32) -> PeriodicField {
    if order == 0 {
        return g.clone();
    }
    apply_multiplier(g, |k| (I * k as f64).powu(order), true, true)
}

/// Hilbert transform with symbol −i·sgn(k); H g = (1/2π) p.v.∫ g(β) cot((α−β)/2) dβ.
pub fn hilbert_transform(g: &PeriodicField) -> PeriodicField {
    apply_multiplier(g, |k| -I * (k.signum() as f64), true, true)
}

/// Λ = (−Δ)^{1/2} with symbol |k|.
pub fn lambda_operator(g: &PeriodicField) -> PeriodicField {
    apply_multiplier(g, |k| C64::new(k.abs() as f64, 0.0), true, true)
}

/// Zeroes every mode with |k| > n_keep (the projection φ_n∗).
pub fn project_modes(g: &PeriodicField, n_keep: usize) -> PeriodicField {
    let n_keep = n_keep as i64;
    apply_multiplier(
        g,
        |k| {
            if k.abs() > n_keep {
                C64::new(0.0, 0.0)
            } else {
                C64::new(1.0, 0.0)
            }
        },
        (g.n_points() / 2) as i64 > n_keep,
        true,
    )
}

/// Trigonometric interpolant of `g` at arbitrary real points (direct mode sum).
pub fn interpolate(g: &PeriodicField, points: &[f64]) -> Vec<C64> {
    let n = g.n_points() as i64;
    let half = n / 2;
    let modes = g.modes();
    points
        .iter()
        .map(|&x| {
            let step = C64::from_polar(1.0, x);
            let mut acc = modes[(half - 1) as usize];
            let mut pos = step;
            let mut neg = step.conj();
            for k in 1..half {
                acc += modes[(k + half - 1) as usize] * pos + modes[(-k + half - 1) as usize] * neg;
                pos *= step;
                neg *= step.conj();
            }
            acc += modes[(n - 1) as usize] * (half as f64 * x).cos();
            acc
        })
        .collect()
}

/// Decay-rate estimate of the Fourier spectrum (the width of the strip of analyticity).
///
/// Uses A(k) = max(|ĝ(k)|, |ĝ(−k)|) for k in the top `tail_fraction` of the
/// positive wavenumbers, fits −log A(k) ≈ r·k + b by least squares over the
/// tail modes above [`MODE_NOISE_FLOOR`] and returns max(r, 0). Returns
/// `f64::INFINITY` when every tail amplitude is below the floor or fewer than
/// two tail modes survive.
pub fn analyticity_radius(g: &PeriodicField, tail_fraction: f64) -> Result<f64> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(MuskatError::Config(format!(
            "tail_fraction must lie in (0,1], got {tail_fraction}"
        )));
    }
    if g.samples().iter().all(|v| *v == C64::new(0.0, 0.0)) {
        return Err(MuskatError::UndefinedRadius);
    }
    let k_max = (g.n_points() / 2) as i64;
    let k_start = ((k_max as f64) * (1.0 - tail_fraction)).floor() as i64 + 1;
    let mut pts = Vec::new();
    for k in k_start.max(1)..=k_max {
        let amp = g.mode(k).norm().max(g.mode(-k).norm());
        if amp > MODE_NOISE_FLOOR {
            pts.push((k as f64, -amp.ln()));
        }
    }
    if pts.len() < 2 {
        return Ok(f64::INFINITY);
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok((sxy / sxx).max(0.0))
}

/// Writes the mode CSV (`k,re,im`, k ascending, 17 significant digits).
pub fn write_modes_csv(field: &PeriodicField, mut out: impl std::io::Write) -> std::io::Result<()> {
    writeln!(out, "k,re,im")?;
    let half = field.n_points() as i64 / 2;
    for (i, m) in field.modes().iter().enumerate() {
        let k = i as i64 - half + 1;
        writeln!(out, "{k},{:.16e},{:.16e}", m.re, m.im)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn direct_modes(samples: &[C64]) -> Vec<C64> {
        let n = samples.len();
        let half = n as i64 / 2;
        let grid = SpectralGrid::new(n).unwrap();
        (-half + 1..=half)
            .map(|k| {
                samples
                    .iter()
                    .zip(grid.nodes())
                    .map(|(&g, &a)| g * C64::from_polar(1.0, -(k as f64) * a))
                    .sum::<C64>()
                    / n as f64
            })
            .collect()
    }

    fn random_field(n: usize, seed: u64) -> PeriodicField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PeriodicField::new(
            (0..n)
                .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
        )
    }

    #[test]
    fn cosine_modes_are_one_half() {
        let grid = SpectralGrid::new(16).unwrap();
        let g = grid.sample_real(|a| (2.0 * a).cos());
        for k in -7i64..=8 {
            let expected = if k.abs() == 2 { 0.5 } else { 0.0 };
            assert!((g.mode(k) - expected).norm() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn zero_samples_give_zero_modes() {
        let g = PeriodicField::zeros(32);
        assert!(g.modes().iter().all(|m| m.norm() == 0.0));
    }

    #[test]
    fn fft_modes_match_direct_sum_and_round_trip() {
        let g = random_field(48, 1);
        let direct = direct_modes(g.samples());
        for (a, b) in g.modes().iter().zip(&direct) {
            assert!((a - b).norm() < 1e-13);
        }
        let back = from_modes(g.modes()).unwrap();
        for (a, b) in back.samples().iter().zip(g.samples()) {
            assert!((a - b).norm() < 1e-12 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn from_modes_rejects_odd_length() {
        assert!(from_modes(&[C64::new(1.0, 0.0); 3]).is_err());
        assert!(SpectralGrid::new(15).is_err());
    }

    #[test]
    fn real_field_modes_are_conjugate_symmetric() {
        let grid = SpectralGrid::new(64).unwrap();
        let g = grid.sample_real(|a| (a.sin() + 0.3 * (3.0 * a).cos()).exp());
        for k in 1..32 {
            assert!((g.mode(-k) - g.mode(k).conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn derivatives_of_trig_monomials() {
        let grid = SpectralGrid::new(32).unwrap();
        let d = spectral_derivative(&grid.sample_real(|a| (3.0 * a).sin()), 1);
        let e = grid.sample_real(|a| 3.0 * (3.0 * a).cos());
        assert!(d.sub(&e).sup_norm() < 1e-12);
        let c = spectral_derivative(&grid.sample_real(|_| 2.5), 1);
        assert!(c.sup_norm() < 1e-14);
        let g = grid.sample(|a| C64::from_polar(1.0, 4.0 * a));
        let d2 = spectral_derivative(&g, 2);
        assert!(d2.sub(&g.scale(C64::new(-16.0, 0.0))).sup_norm() < 1e-11);
        assert_eq!(spectral_derivative(&g, 0), g);
    }

    #[test]
    fn hilbert_and_lambda_symbols() {
        let grid = SpectralGrid::new(64).unwrap();
        let h = hilbert_transform(&grid.sample_real(|a| (2.0 * a).cos()));
        assert!(h.sub(&grid.sample_real(|a| (2.0 * a).sin())).sup_norm() < 1e-13);
        assert!(hilbert_transform(&grid.sample_real(|_| 1.0)).sup_norm() < 1e-15);
        let l = lambda_operator(&grid.sample_real(|a| (5.0 * a).cos()));
        assert!(l.sub(&grid.sample_real(|a| 5.0 * (5.0 * a).cos())).sup_norm() < 1e-12);
        assert!(lambda_operator(&grid.sample_real(|_| 3.0)).sup_norm() < 1e-14);

        let g = random_field(64, 7);
        let hh = hilbert_transform(&hilbert_transform(&g));
        let nyq = g.mode(32);
        let expected = g
            .map(|v| v)
            .sub(&PeriodicField::new(vec![g.mean(); 64]))
            .sub(&grid.sample(|a| nyq * (32.0 * a).cos()));
        assert!(hh.add(&expected).sup_norm() < 1e-12);
        let lam = lambda_operator(&g);
        let hd = hilbert_transform(&spectral_derivative(&g, 1));
        assert!(lam.sub(&hd).sup_norm() < 1e-12);
    }

    #[test]
    fn projection_is_idempotent_and_filters() {
        let grid = SpectralGrid::new(32).unwrap();
        assert!(project_modes(&grid.sample_real(|a| (7.0 * a).cos()), 3).sup_norm() < 1e-14);
        let c2 = grid.sample_real(|a| (2.0 * a).cos());
        assert!(project_modes(&c2, 3).sub(&c2).sup_norm() < 1e-14);
        let g = random_field(32, 3);
        let p = project_modes(&g, 5);
        assert!(project_modes(&p, 5).sub(&p).sup_norm() < 1e-14);
        let d = grid.dealias(&g);
        assert!(d.mode(11).norm() < 1e-15 && (d.mode(10) - g.mode(10)).norm() < 1e-14);
    }

    #[test]
    fn interpolation_matches_nodes_and_direct_sum() {
        let grid = SpectralGrid::new(32).unwrap();
        let g = grid.sample_real(|a| (3.0 * a).cos());
        assert!((interpolate(&g, &[0.1])[0] - (0.3f64).cos()).norm() < 1e-13);
        let r = random_field(32, 11);
        let at_nodes = interpolate(&r, grid.nodes());
        for (a, b) in at_nodes.iter().zip(r.samples()) {
            assert!((a - b).norm() < 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<f64> = (0..100).map(|_| rng.gen_range(-PI..PI)).collect();
        let fast = interpolate(&r, &pts);
        for (x, v) in pts.iter().zip(&fast) {
            let mut direct = C64::new(0.0, 0.0);
            for k in -15..16i64 {
                direct += r.mode(k) * C64::from_polar(1.0, k as f64 * x);
            }
            direct += r.mode(16) * (16.0 * x).cos();
            assert!((direct - v).norm() < 1e-12);
        }
    }

    #[test]
    fn poisson_kernel_radius_is_log_two() {
        let grid = SpectralGrid::new(64).unwrap();
        let r: f64 = 0.5;
        let g = grid.sample_real(|a| (1.0 - r * r) / (1.0 - 2.0 * r * a.cos() + r * r));
        let rad = analyticity_radius(&g, 0.5).unwrap();
        assert!((rad - 2f64.ln()).abs() < 0.05 * 2f64.ln(), "radius {rad}");
    }

    #[test]
    fn band_limited_fields_have_infinite_radius() {
        let grid = SpectralGrid::new(64).unwrap();
        let poly = grid.sample_real(|a| 1.0 + a.cos() - 0.5 * (3.0 * a).sin());
        assert_eq!(analyticity_radius(&poly, 0.5).unwrap(), f64::INFINITY);
        let single = grid.sample(|a| C64::from_polar(1.0, 5.0 * a));
        assert_eq!(analyticity_radius(&single, 0.5).unwrap(), f64::INFINITY);
        assert!(matches!(
            analyticity_radius(&PeriodicField::zeros(64), 0.5),
            Err(MuskatError::UndefinedRadius)
        ));
    }

    #[test]
    fn parseval_and_translation_commute() {
        let g = random_field(64, 21);
        let lhs = g.samples().iter().map(|v| v.norm_sqr()).sum::<f64>() / 64.0;
        let rhs: f64 = g.modes().iter().map(|m| m.norm_sqr()).sum();
        assert!((lhs - rhs).abs() < 1e-12);
        let ops: [fn(&PeriodicField) -> PeriodicField; 3] = [
            |f| spectral_derivative(f, 1),
            hilbert_transform,
            lambda_operator,
        ];
        for op in ops {
            let a = op(&g.shift_nodes(1));
            let b = op(&g).shift_nodes(1);
            assert!(a.sub(&b).sup_norm() < 1e-12);
        }
    }

    #[test]
    fn mode_csv_has_header_and_all_modes() {
        let grid = SpectralGrid::new(8).unwrap();
        let mut buf = Vec::new();
        write_modes_csv(&grid.sample_real(|a| a.cos()), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "k,re,im");
        assert_eq!(lines.len(), 9);
        assert!(lines[1].starts_with("-3,"));
        assert!(lines[8].starts_with("4,"));
    }
}
