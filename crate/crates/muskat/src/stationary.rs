//! Analyticity of stationary solutions by continuation into complex time.
//!
//! Given f₀ with f₀′ = T(f₀), the family f(x, t) solving df/dt = iT(f) is
//! analytic in x + it exactly when ‖∂ₓf + i∂ₜf‖ = ‖∂ₓf − T(f)‖ vanishes. The
//! residual g = ∂ₓf − T(f) obeys gₜ = iD_fT\[g\] when T commutes with
//! translations and D_fT is complex linear, so it stays at the size of the
//! time-stepping error up to a Gronwall factor.

use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::sobolev_norm;
use crate::error::{MuskatError, Result};
use crate::spectral::{from_modes, spectral_derivative, PeriodicField, C64, I};

/// A field-to-field map.
pub type FieldMap = Arc<dyn Fn(&PeriodicField) -> PeriodicField + Send + Sync>;

/// A Fréchet derivative (f, h) ↦ D_fT(f)\[h\].
pub type FrechetMap = Arc<dyn Fn(&PeriodicField, &PeriodicField) -> PeriodicField + Send + Sync>;

/// Step of the central-difference surrogate for a missing Fréchet derivative.
pub const SURROGATE_STEP: f64 = 1e-5;

/// An operator T together with the data the continuation needs.
#[derive(Clone)]
pub struct OperatorHandle {
    /// Label used in reports.
    pub name: String,
    /// T(f).
    pub apply: FieldMap,
    /// D_fT(f)\[h\], when known in closed form.
    pub frechet: Option<FrechetMap>,
    /// Sobolev index k of the space H^k the operator acts on.
    pub sobolev_index: u32,
    /// Radius ε of the H^k ball around f₀ in which T is trusted.
    pub trust_region: f64,
}

impl std::fmt::Debug for OperatorHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OperatorHandle")
            .field("name", &self.name)
            .field("has_frechet", &self.frechet.is_some())
            .field("sobolev_index", &self.sobolev_index)
            .field("trust_region", &self.trust_region)
            .finish()
    }
}

impl OperatorHandle {
    /// Operator without a closed-form derivative, k = 1 and an unbounded trust region.
    pub fn new(
        name: impl Into<String>,
        apply: impl Fn(&PeriodicField) -> PeriodicField + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            apply: Arc::new(apply),
            frechet: None,
            sobolev_index: 1,
            trust_region: f64::INFINITY,
        }
    }

    /// Attaches the closed-form Fréchet derivative.
    pub fn with_frechet(
        mut self,
        frechet: impl Fn(&PeriodicField, &PeriodicField) -> PeriodicField + Send + Sync + 'static,
    ) -> Self {
        self.frechet = Some(Arc::new(frechet));
        self
    }

    /// Sets the trust-region radius.
    pub fn with_trust_region(mut self, radius: f64) -> Self {
        self.trust_region = radius;
        self
    }

    /// Sets the Sobolev index.
    pub fn with_sobolev_index(mut self, k: u32) -> Self {
        self.sobolev_index = k;
        self
    }

    /// T(f).
    pub fn eval(&self, f: &PeriodicField) -> PeriodicField {
        (self.apply)(f)
    }

    /// D_fT(f)\[h\]; the central-difference surrogate when no derivative is attached.
    pub fn derivative(&self, f: &PeriodicField, h: &PeriodicField) -> PeriodicField {
        match &self.frechet {
            Some(d) => d(f, h),
            None => central_difference(self, f, h, SURROGATE_STEP),
        }
    }

    /// Whether [`OperatorHandle::derivative`] falls back to the surrogate.
    pub fn uses_surrogate(&self) -> bool {
        self.frechet.is_none()
    }

    /// H^k norm with k = `sobolev_index`.
    pub fn norm(&self, g: &PeriodicField) -> f64 {
        sobolev_norm(g, self.sobolev_index as f64)
    }
}

fn complex(f: &PeriodicField) -> PeriodicField {
    PeriodicField::new(f.samples().to_vec())
}

fn axpy(f: &PeriodicField, s: C64, h: &PeriodicField) -> PeriodicField {
    PeriodicField::new(
        f.samples()
            .iter()
            .zip(h.samples())
            .map(|(a, b)| a + s * b)
            .collect(),
    )
}

/// (T(f + τh) − T(f − τh))/(2τ).
pub fn central_difference(op: &OperatorHandle, f: &PeriodicField, h: &PeriodicField, tau: f64) -> PeriodicField {
    let f = complex(f);
    let plus = op.eval(&axpy(&f, C64::new(tau, 0.0), h));
    let minus = op.eval(&axpy(&f, C64::new(-tau, 0.0), h));
    PeriodicField::new(
        plus.samples()
            .iter()
            .zip(minus.samples())
            .map(|(a, b)| (a - b) / (2.0 * tau))
            .collect(),
    )
}

/// Outcome of [`verify_hypotheses`]. Failures are reported, never raised.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    /// Operator name.
    pub operator: String,
    /// Number of random directions.
    pub trials: usize,
    /// Whether the derivative is the central-difference surrogate.
    pub surrogate_derivative: bool,
    /// Largest ‖FD(τ) − D_fT\[h\]‖_{H^k}/‖h‖_{H^k} at τ = 1e−3.
    pub fd_residual: f64,
    /// Smallest ratio FD residual(τ)/FD residual(τ/2) among trials above the noise level.
    pub fd_order_ratio: Option<f64>,
    /// ‖∂ₓT(f₀) − D_fT(f₀)\[f₀′\]‖_{H^k}/(1 + ‖T(f₀)‖_{H^k}) (condition (d)).
    pub condition_d_residual: f64,
    /// Largest ‖iD_fT\[h\] − D_fT\[ih\]‖_{H^k}/‖h‖_{H^k} (condition (e)).
    pub condition_e_residual: f64,
    /// Tolerance used for every residual.
    pub tolerance: f64,
    /// FD agreement holds (residual below tolerance, or second-order decay).
    pub derivative_ok: bool,
    /// Condition (d) holds.
    pub condition_d_ok: bool,
    /// Condition (e) holds.
    pub condition_e_ok: bool,
}

impl HypothesisReport {
    /// Whether every checked hypothesis holds.
    pub fn all_ok(&self) -> bool {
        self.derivative_ok && self.condition_d_ok && self.condition_e_ok
    }
}

/// Random band-limited direction with |k| ≤ `band` and amplitudes decaying like 1/(1+k²).
pub fn random_direction(n: usize, band: usize, rng: &mut impl Rng) -> Result<PeriodicField> {
    let half = (n / 2) as i64;
    let band = band as i64;
    let mut modes = vec![C64::new(0.0, 0.0); n];
    for (m, slot) in modes.iter_mut().enumerate() {
        let k = m as i64 - half + 1;
        if k.abs() <= band && k.abs() < half {
            let amp = 1.0 / (1.0 + (k * k) as f64);
            *slot = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * amp;
        }
    }
    from_modes(&modes)
}

/// Checks the FD agreement of the derivative and conditions (d) and (e) at f₀
/// over `trials` random band-limited directions drawn from `seed`.
pub fn verify_hypotheses(
    op: &OperatorHandle,
    f0: &PeriodicField,
    trials: usize,
    seed: u64,
    tolerance: f64,
) -> Result<HypothesisReport> {
    if trials == 0 {
        return Err(MuskatError::Config("at least one trial is required".into()));
    }
    let n = f0.n_points();
    let f0c = complex(f0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let band = (n / 8).clamp(1, 8);
    let dirs: Result<Vec<PeriodicField>> = (0..trials).map(|_| random_direction(n, band, &mut rng)).collect();
    let dirs = dirs?;

    let per_trial: Vec<(f64, Option<f64>, f64)> = dirs
        .par_iter()
        .map(|h| {
            let hn = op.norm(h).max(f64::MIN_POSITIVE);
            let d = op.derivative(&f0c, h);
            let fd_err = |tau: f64| op.norm(&central_difference(op, &f0c, h, tau).sub(&d)) / hn;
            let (e1, e2) = (fd_err(1e-3), fd_err(5e-4));
            let ratio = (e1 > 1e3 * tolerance).then(|| e1 / e2);
            let ih = h.scale(I);
            let e_res = op.norm(&op.derivative(&f0c, &ih).sub(&d.scale(I))) / hn;
            (e1, ratio, e_res)
        })
        .collect();
    let fd_residual = per_trial.iter().map(|p| p.0).fold(0.0, f64::max);
    let fd_order_ratio = per_trial.iter().filter_map(|p| p.1).reduce(f64::min);
    let condition_e_residual = per_trial.iter().map(|p| p.2).fold(0.0, f64::max);

    let tf = op.eval(&f0c);
    let dx_t = spectral_derivative(&tf, 1);
    let d_df = op.derivative(&f0c, &spectral_derivative(&f0c, 1));
    let condition_d_residual = op.norm(&dx_t.sub(&d_df)) / (1.0 + op.norm(&tf));

    let derivative_ok = fd_residual <= tolerance
        || per_trial
            .iter()
            .all(|p| p.0 <= tolerance || p.1.is_some_and(|r| (3.5..=4.5).contains(&r)));
    Ok(HypothesisReport {
        operator: op.name.clone(),
        trials,
        surrogate_derivative: op.uses_surrogate(),
        fd_residual,
        fd_order_ratio,
        condition_d_residual,
        condition_e_residual,
        tolerance,
        derivative_ok,
        condition_d_ok: condition_d_residual <= tolerance,
        condition_e_ok: condition_e_residual <= tolerance,
    })
}

/// One sample of the continuation.
#[derive(Debug, Clone)]
pub struct ContinuationPoint {
    /// Complex-time coordinate t (the extension variable is x + it).
    pub t: f64,
    /// f(·, t).
    pub field: PeriodicField,
    /// ‖∂ₓf − T(f)‖_{L²}.
    pub residual: f64,
    /// ‖f(·, t)‖_{H^k}.
    pub hk_norm: f64,
}

/// Result of [`continue_stationary`], ordered by increasing t.
#[derive(Debug, Clone)]
pub struct Continuation {
    /// Samples from the most negative to the most positive time reached.
    pub points: Vec<ContinuationPoint>,
    /// Step size used.
    pub dt: f64,
    /// Whether the forward run left the trust region before t_max.
    pub stopped_forward: bool,
    /// Whether the backward run left the trust region before −t_max.
    pub stopped_backward: bool,
}

impl Continuation {
    /// The t = 0 sample.
    pub fn origin(&self) -> &ContinuationPoint {
        self.points.iter().find(|p| p.t == 0.0).expect("t = 0 is always present")
    }

    /// Largest residual over the run.
    pub fn max_residual(&self) -> f64 {
        self.points.iter().map(|p| p.residual).fold(0.0, f64::max)
    }

    /// Writes `t,residual,h_k_norm` rows.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "t,residual,h_k_norm")?;
        for p in &self.points {
            writeln!(out, "{:.16e},{:.16e},{:.16e}", p.t, p.residual, p.hk_norm)?;
        }
        Ok(())
    }
}

/// ‖∂ₓf − T(f)‖_{L²}.
pub fn stationarity_residual(op: &OperatorHandle, f: &PeriodicField) -> f64 {
    spectral_derivative(f, 1).sub(&op.eval(f)).l2_norm()
}

fn rk4_complex(op: &OperatorHandle, f: &PeriodicField, dt: f64) -> PeriodicField {
    let rhs = |g: &PeriodicField| op.eval(g).scale(I);
    let k1 = rhs(f);
    let k2 = rhs(&axpy(f, C64::new(0.5 * dt, 0.0), &k1));
    let k3 = rhs(&axpy(f, C64::new(0.5 * dt, 0.0), &k2));
    let k4 = rhs(&axpy(f, C64::new(dt, 0.0), &k3));
    PeriodicField::new(
        (0..f.n_points())
            .map(|j| {
                f.samples()[j]
                    + dt / 6.0
                        * (k1.samples()[j] + 2.0 * k2.samples()[j] + 2.0 * k3.samples()[j] + k4.samples()[j])
            })
            .collect(),
    )
}

/// Solves df/dt = iT(f), f(0) = f₀, by RK4 on [−t_max, t_max].
///
/// Fails with [`MuskatError::NotStationary`] when ‖f₀′ − T(f₀)‖_{L²} exceeds
/// 1e−8·‖f₀‖_{H¹}. Each direction stops early once ‖f − f₀‖_{H^k} exceeds
/// the trust region.
pub fn continue_stationary(op: &OperatorHandle, f0: &PeriodicField, t_max: f64, dt: f64) -> Result<Continuation> {
    if !(dt > 0.0) || !(t_max >= 0.0) {
        return Err(MuskatError::Config(format!(
            "dt must be positive and t_max nonnegative, got dt={dt}, t_max={t_max}"
        )));
    }
    let f0c = complex(f0);
    let r0 = stationarity_residual(op, &f0c);
    let tolerance = 1e-8 * sobolev_norm(f0, 1.0);
    if r0 > tolerance {
        return Err(MuskatError::NotStationary { residual: r0, tolerance });
    }
    let steps = (t_max / dt).round() as usize;
    let sample = |t: f64, field: PeriodicField| ContinuationPoint {
        t,
        residual: stationarity_residual(op, &field),
        hk_norm: op.norm(&field),
        field,
    };
    let run = |sign: f64| -> (Vec<ContinuationPoint>, bool) {
        let mut f = f0c.clone();
        let mut out = Vec::with_capacity(steps);
        for s in 1..=steps {
            f = rk4_complex(op, &f, sign * dt);
            if !f.samples().iter().all(|v| v.is_finite()) || op.norm(&f.sub(&f0c)) > op.trust_region {
                return (out, true);
            }
            out.push(sample(sign * s as f64 * dt, f.clone()));
        }
        (out, false)
    };
    let ((back, stopped_backward), (fwd, stopped_forward)) = rayon::join(|| run(-1.0), || run(1.0));
    let mut points: Vec<ContinuationPoint> = back.into_iter().rev().collect();
    points.push(sample(0.0, f0c));
    points.extend(fwd);
    Ok(Continuation {
        points,
        dt,
        stopped_forward,
        stopped_backward,
    })
}

/// Operator-norm estimate of D_fT(f₀) in L² over random band-limited directions.
pub fn estimate_lipschitz(op: &OperatorHandle, f0: &PeriodicField, trials: usize, seed: u64) -> Result<f64> {
    let n = f0.n_points();
    let f0c = complex(f0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for _ in 0..trials.max(1) {
        let h = random_direction(n, (n / 8).clamp(1, 8), &mut rng)?;
        let hn = h.l2_norm();
        if hn > 0.0 {
            best = best.max(op.derivative(&f0c, &h).l2_norm() / hn);
        }
    }
    Ok(best)
}

/// Whether r(t) ≤ 1.1·(r(0) + r(±dt)·|t|/dt)·e^{C|t|} at every sample: the
/// initial residual plus the accumulated one-step error, amplified at most
/// by the Gronwall factor of the linearization.
pub fn gronwall_envelope_holds(cont: &Continuation, lipschitz: f64) -> bool {
    let r0 = cont.origin().residual;
    let step_err = cont
        .points
        .iter()
        .filter(|p| (p.t.abs() - cont.dt).abs() < 1e-12 * cont.dt.max(1.0))
        .map(|p| p.residual)
        .fold(0.0, f64::max);
    cont.points.iter().all(|p| {
        let tau = p.t.abs();
        let envelope = (r0 + step_err * tau / cont.dt) * (lipschitz * tau).exp();
        p.residual <= 1.1 * envelope + f64::EPSILON * (1.0 + p.hk_norm)
    })
}

/// Operators used by the examples, the acceptance checks and the CLI.
pub mod operators {
    use super::*;
    use crate::spectral::{hilbert_transform, lambda_operator};

    /// T(f) = Λf.
    pub fn half_laplacian() -> OperatorHandle {
        OperatorHandle::new("lambda", lambda_operator).with_frechet(|_, h| lambda_operator(h))
    }

    /// T(f) = f² pointwise.
    pub fn square() -> OperatorHandle {
        OperatorHandle::new("square", |f: &PeriodicField| f.mul(f))
            .with_frechet(|f, h| f.mul(h).scale(C64::new(2.0, 0.0)))
    }

    /// T(f) = conj(f), complex antilinear.
    pub fn conjugate() -> OperatorHandle {
        let conj = |f: &PeriodicField| PeriodicField::new(f.samples().iter().map(|v| v.conj()).collect());
        OperatorHandle::new("conj", conj).with_frechet(move |_, h| conj(h))
    }

    /// T(f) = ik₀f, stationary at e^{ik₀x}.
    pub fn mode_rotation(k0: f64) -> OperatorHandle {
        OperatorHandle::new(format!("mode_rotation_{k0}"), move |f: &PeriodicField| {
            f.scale(I * k0)
        })
        .with_frechet(move |_, h| h.scale(I * k0))
    }

    /// T ≡ 0, stationary at constants.
    pub fn zero() -> OperatorHandle {
        OperatorHandle::new("zero", |f: &PeriodicField| PeriodicField::zeros(f.n_points()))
            .with_frechet(|_, h| PeriodicField::zeros(h.n_points()))
    }

    /// T(f) = if + (iHf − f)f, stationary at e^{ix}.
    pub fn quadratic_transport() -> OperatorHandle {
        let apply = |f: &PeriodicField| {
            let q = hilbert_transform(f).scale(I).sub(f);
            f.scale(I).add(&q.mul(f))
        };
        let frechet = |f: &PeriodicField, h: &PeriodicField| {
            let qf = hilbert_transform(f).scale(I).sub(f);
            let qh = hilbert_transform(h).scale(I).sub(h);
            h.scale(I).add(&qh.mul(f)).add(&qf.mul(h))
        };
        OperatorHandle::new("quadratic_transport", apply).with_frechet(frechet)
    }

    /// Looks an operator up by name (`lambda`, `square`, `conj`,
    /// `mode_rotation`, `zero`, `quadratic_transport`).
    pub fn by_name(name: &str, k0: f64) -> Result<OperatorHandle> {
        Ok(match name {
            "lambda" => half_laplacian(),
            "square" => square(),
            "conj" => conjugate(),
            "mode_rotation" => mode_rotation(k0),
            "zero" => zero(),
            "quadratic_transport" => quadratic_transport(),
            other => return Err(MuskatError::Config(format!("unknown operator `{other}`"))),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::operators::*;
    use super::*;
    use crate::spectral::SpectralGrid;

    fn grid() -> SpectralGrid {
        SpectralGrid::new(64).unwrap()
    }

    #[test]
    fn linear_operator_passes_all_hypotheses() {
        let f0 = grid().sample_real(|x| x.cos() + 0.3 * (2.0 * x).sin());
        let rep = verify_hypotheses(&half_laplacian(), &f0, 8, 1, 1e-10).unwrap();
        assert!(rep.all_ok(), "{rep:?}");
    }

    #[test]
    fn square_passes_with_low_modes() {
        let f0 = grid().sample(|x| C64::from_polar(1.0, x) * 0.5 + 0.2);
        let rep = verify_hypotheses(&square(), &f0, 8, 2, 1e-8).unwrap();
        assert!(rep.all_ok(), "{rep:?}");
    }

    #[test]
    fn conjugation_fails_condition_e() {
        let f0 = grid().sample_real(|x| x.cos());
        let rep = verify_hypotheses(&conjugate(), &f0, 4, 3, 1e-8).unwrap();
        assert!(rep.derivative_ok && rep.condition_d_ok);
        assert!(!rep.condition_e_ok);
    }

    #[test]
    fn surrogate_derivative_is_flagged_and_accurate() {
        let op = OperatorHandle::new("square_fd", |f: &PeriodicField| f.mul(f));
        let f0 = grid().sample(|x| C64::from_polar(1.0, x) * 0.5);
        let rep = verify_hypotheses(&op, &f0, 4, 4, 1e-6).unwrap();
        assert!(rep.surrogate_derivative);
        assert!(rep.condition_e_residual < 1e-6);
    }

    #[test]
    fn mode_rotation_decays_exactly() {
        let f0 = grid().sample(|x| C64::from_polar(1.0, 2.0 * x));
        let cont = continue_stationary(&mode_rotation(2.0), &f0, 0.5, 1e-3).unwrap();
        for p in &cont.points {
            let amp = p.field.mode(2).norm();
            assert!((amp - (-2.0 * p.t).exp()).abs() < 1e-8, "t={} amp={amp}", p.t);
            assert!(p.residual <= 1e-10);
        }
        assert_eq!(cont.points.len(), 1001);
    }

    #[test]
    fn zero_operator_keeps_constants() {
        let f0 = grid().sample_real(|_| 2.5);
        let cont = continue_stationary(&zero(), &f0, 0.1, 1e-2).unwrap();
        assert_eq!(cont.max_residual(), 0.0);
    }

    #[test]
    fn non_stationary_datum_is_rejected() {
        let f0 = grid().sample(|x| C64::from_polar(1.0, 2.0 * x) + 1e-2 * x.sin());
        assert!(matches!(
            continue_stationary(&mode_rotation(2.0), &f0, 0.1, 1e-2),
            Err(MuskatError::NotStationary { .. })
        ));
    }

    #[test]
    fn residual_is_translation_invariant() {
        let g = grid();
        let f0 = g.sample(|x| C64::from_polar(1.0, x));
        let a = continue_stationary(&quadratic_transport(), &f0, 0.1, 1e-2).unwrap();
        let b = continue_stationary(&quadratic_transport(), &f0.shift_nodes(7), 0.1, 1e-2).unwrap();
        for (p, q) in a.points.iter().zip(&b.points) {
            assert!((p.residual - q.residual).abs() <= 1e-14 + 1e-9 * p.residual);
        }
    }

    #[test]
    fn nonlinear_residual_stays_in_gronwall_envelope() {
        let g = grid();
        let f0 = g.sample(|x| C64::from_polar(1.0, x));
        let op = quadratic_transport().with_trust_region(10.0);
        let rep = verify_hypotheses(&op, &f0, 6, 5, 1e-8).unwrap();
        assert!(rep.all_ok(), "{rep:?}");
        let cont = continue_stationary(&op, &f0, 0.3, 1e-2).unwrap();
        let c = estimate_lipschitz(&op, &f0, 16, 6).unwrap();
        assert!(gronwall_envelope_holds(&cont, c));
        assert!(cont.max_residual() < 1e-6);
    }

    #[test]
    fn trust_region_stops_early() {
        let f0 = grid().sample(|x| C64::from_polar(1.0, 2.0 * x));
        let op = mode_rotation(2.0).with_trust_region(0.5);
        let cont = continue_stationary(&op, &f0, 1.0, 1e-2).unwrap();
        assert!(cont.stopped_forward && cont.stopped_backward);
        assert!(cont.points.len() < 201);
    }
}
