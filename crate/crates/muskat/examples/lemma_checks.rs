//! The two commutation identities of the Cauchy–Riemann operator A₀.
//!
//! Prints the residuals on the derived test families and the refinement
//! ratios on generic families, then the decay of one residual with Δγ.
//!
//! ```text
//! cargo run --release --example lemma_checks
//! ```

use muskat::diagnostics::check_lemma_switch;
use muskat::verify::{lemma_checks, lemma_cutoffs};

fn main() -> muskat::Result<()> {
    for check in lemma_checks(1e-6)? {
        println!("{check}");
    }
    let (grid, cut) = lemma_cutoffs()?;
    let h = |g: f64| grid.sample_real(move |x| (x + g).sin().exp());
    for k in 3..7 {
        let dg = 1.0 / f64::from(1u32 << k);
        println!("dgamma=1/{}: switch residual {:.3e}", 1u32 << k, check_lemma_switch(&cut, &h, 0.3, dg, 0.05));
    }
    Ok(())
}
