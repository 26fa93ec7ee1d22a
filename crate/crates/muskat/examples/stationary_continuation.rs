//! Continuation of stationary solutions of f′ = T(f) into complex time.
//!
//! Checks the structural hypotheses for a few operators, then continues
//! e^{2ix} under T = i·2·f, whose second mode decays like e^{−2t}.
//!
//! ```text
//! cargo run --release --example stationary_continuation
//! ```

use muskat::spectral::{SpectralGrid, C64};
use muskat::stationary::{continue_stationary, operators, verify_hypotheses};

fn main() -> muskat::Result<()> {
    let grid = SpectralGrid::new(64)?;
    let f0 = grid.sample(|x| C64::from_polar(1.0, 2.0 * x));
    for name in ["lambda", "square", "conj", "mode_rotation"] {
        let op = operators::by_name(name, 2.0)?;
        let rep = verify_hypotheses(&op, &f0, 4, 1, 1e-8)?;
        println!(
            "{name:>14}: derivative {} condition (d) {} condition (e) {}",
            rep.derivative_ok, rep.condition_d_ok, rep.condition_e_ok
        );
    }
    let cont = continue_stationary(&operators::mode_rotation(2.0), &f0, 0.5, 1e-3)?;
    for p in cont.points.iter().step_by(100) {
        println!(
            "t={:+.2} |mode 2|={:.10} exp(-2t)={:.10} residual={:.2e}",
            p.t,
            p.field.mode(2).norm(),
            (-2.0 * p.t).exp(),
            p.residual
        );
    }
    Ok(())
}
