//! Turnover diagnostics of the bent interface f = (α − b sin α, a cos α).
//!
//! For b > 1 the horizontal tangent vanishes at α = arccos(1/b); for b = 1
//! the zero is double and the report is degenerate.
//!
//! ```text
//! cargo run --release --example turnover_diagnostics
//! ```

use muskat::config::{scenario, Scenario, ScenarioName};
use muskat::diagnostics::turnover_condition;
use muskat::evolution::muskat_rhs;
use muskat::spectral::{PeriodicField, SpectralGrid};

fn main() -> muskat::Result<()> {
    let grid = SpectralGrid::new(256)?;
    for b in [0.5, 1.5, 2.0, 3.0] {
        let f = scenario(&grid, &Scenario { name: ScenarioName::Turnover, a: 0.1, b })?;
        let rhs = muskat_rhs(&grid, &f, 1.0)?;
        match turnover_condition(&grid, &f, &rhs, 1.0)? {
            Some(r) => println!(
                "b={b}: Z1={:.12} (arccos(1/b)={:.12}), dZ1/dt={:.4e}, condition sign {:.4e}",
                r.z1_location,
                (1.0 / b).acos(),
                r.z1_speed,
                r.condition_sign
            ),
            None => println!("b={b}: no turnover"),
        }
    }
    let cusp = scenario(&grid, &Scenario { name: ScenarioName::Turnover, a: 0.1, b: 1.0 })?;
    let zero = PeriodicField::zeros(grid.n_points());
    match turnover_condition(&grid, &cusp, &[zero.clone(), zero], 1.0) {
        Err(e) => println!("b=1: {e}"),
        Ok(r) => println!("b=1: {r:?}"),
    }
    Ok(())
}
