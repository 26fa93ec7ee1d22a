//! Cauchy–Riemann certificate of the stable family.
//!
//! Evolves the γ-family of the stable scenario and prints the residual of
//! A₀(z) at the final time.
//!
//! ```text
//! cargo run --release --example cr_certificate -- [n] [gamma_count] [dt] [t_final] [centered|evolved] [delta_c]
//! ```

use muskat::config::{scenario, Scenario, ScenarioName};
use muskat::diagnostics::{cr_residual, GammaDerivative};
use muskat::evolution::{evolve_family, EvolveOptions, FamilyState};
use muskat::localization::CutoffPair;
use muskat::spectral::SpectralGrid;

fn main() -> muskat::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: &str| args.get(i).cloned().unwrap_or_else(|| default.to_string());
    let n: usize = arg(0, "128").parse().expect("n");
    let count: usize = arg(1, "9").parse().expect("gamma_count");
    let dt: f64 = arg(2, "1e-4").parse().expect("dt");
    let t_final: f64 = arg(3, "0.005").parse().expect("t_final");
    let source = match arg(4, "evolved").as_str() {
        "centered" => GammaDerivative::Centered,
        _ => GammaDerivative::Evolved,
    };

    let grid = SpectralGrid::new(n)?;
    let f = scenario(&grid, &Scenario { name: ScenarioName::Stable, a: 0.1, b: 0.0 })?;
    let delta_c: f64 = arg(5, "0.5").parse().expect("delta_c");
    let cutoffs = CutoffPair::new(&grid, 1.5, delta_c)?;
    let family = FamilyState::initial(&grid, &f, &cutoffs, count, source == GammaDerivative::Evolved, 1.0)?;
    let options = EvolveOptions {
        dt,
        t_final,
        record_every: usize::MAX,
        full_diagnostics: false,
        stop_on_margin: false,
        gamma_derivative: source,
        ..EvolveOptions::default()
    };
    let start = std::time::Instant::now();
    let history = evolve_family(family, &options)?;
    let residual = cr_residual(&history.final_state, source)?;
    println!(
        "n={n} M={count} dgamma={:.4} dt={dt:.2e} t={:.4} stop={:?} cr_residual={residual:.6e} ({:.1?})",
        history.final_state.gamma_spacing(),
        history.final_state.t,
        history.stop_reason,
        start.elapsed()
    );
    Ok(())
}
