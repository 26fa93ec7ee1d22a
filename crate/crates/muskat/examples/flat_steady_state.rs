//! The flat interface is a steady state.
//!
//! Evaluates the full and the localized contour equations on f = (α, 0) and
//! on a small cosine perturbation, where the vertical velocity is close to
//! a multiple of −Λf₂.
//!
//! ```text
//! cargo run --release --example flat_steady_state
//! ```

use muskat::evolution::{localized_rhs, muskat_rhs, Contour};
use muskat::localization::{split_contour, CutoffPair};
use muskat::spectral::{lambda_operator, SpectralGrid};

fn main() -> muskat::Result<()> {
    let grid = SpectralGrid::new(256)?;
    let flat = Contour::flat(&grid);
    let rhs = muskat_rhs(&grid, &flat, 1.0)?;
    let cutoffs = CutoffPair::new(&grid, 1.5, 0.5)?;
    let local = localized_rhs(&split_contour(&grid, &flat, &cutoffs), 1.0)?;
    println!("flat: |rhs| = {:.3e}, |localized rhs| = {:.3e}", rhs[1].sup_norm(), local[1].sup_norm());

    for eps in [1e-2, 1e-3, 1e-4] {
        let f = Contour::from_fn(&grid, |_| 0.0, move |x| eps * x.cos());
        let r = muskat_rhs(&grid, &f, 1.0)?;
        let lam = lambda_operator(&f.g2);
        let ratio = r[1].l2_norm() / lam.l2_norm();
        println!("eps={eps:.0e}: |rhs2|/|Lambda f2| = {ratio:.6}, |rhs2 + Lambda f2|/eps^2 = {:.3e}",
            r[1].add(&lam).l2_norm() / (eps * eps));
    }
    Ok(())
}
