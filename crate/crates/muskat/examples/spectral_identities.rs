//! Spectral operators on the torus.
//!
//! Applies the Hilbert transform, the half-Laplacian Λ and the spectral
//! derivative to a few test fields and prints the identity checks.
//!
//! ```text
//! cargo run --release --example spectral_identities
//! ```

use muskat::spectral::{hilbert_transform, lambda_operator, spectral_derivative, SpectralGrid};
use muskat::verify::spectral_checks;

fn main() -> muskat::Result<()> {
    let grid = SpectralGrid::new(64)?;
    let g = grid.sample_real(|x| (3.0 * x).cos() + 0.5 * x.sin());
    let h = hilbert_transform(&g);
    let expected = grid.sample_real(|x| (3.0 * x).sin() - 0.5 * x.cos());
    println!("H(cos 3x + 0.5 sin x) error: {:.3e}", h.sub(&expected).sup_norm());

    let composed = hilbert_transform(&spectral_derivative(&g, 1));
    println!("|Lambda g - H dg|: {:.3e}", lambda_operator(&g).sub(&composed).sup_norm());

    for check in spectral_checks(256, 1e-11)? {
        println!("{check}");
    }
    Ok(())
}
