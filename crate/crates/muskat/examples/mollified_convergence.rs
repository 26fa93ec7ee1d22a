//! Convergence of the mollified operator to the exact slice operator.
//!
//! The regularized kernel adds sin²((α−β)/2)/n to the squared modulus of the
//! denominator, so the difference decays like 1/n.
//!
//! ```text
//! cargo run --release --example mollified_convergence
//! ```

use muskat::evolution::{complex_t, mollified_t, Background, FamilySlice, SliceGeometry, SliceOperator};
use muskat::localization::{split_contour, CutoffPair};
use muskat::spectral::SpectralGrid;
use muskat::evolution::Contour;

fn main() -> muskat::Result<()> {
    let grid = SpectralGrid::new(64)?;
    let f = Contour::from_fn(&grid, |x| 0.1 * x.sin(), |x| 0.2 * x.cos());
    let cutoffs = CutoffPair::new(&grid, 1.5, 0.5)?;
    let split = split_contour(&grid, &f, &cutoffs);
    let geom = SliceGeometry::new(&grid, &cutoffs);
    let bg = Background::from_split(&split);
    let z = FamilySlice::initial(&split, &geom, 0.5).z;
    let op = SliceOperator::new(&geom, &bg, 0.5, 0.01, 1.0);
    let exact = complex_t(&op, &z)?;
    let mut previous: Option<f64> = None;
    for n in [10u64, 100, 1_000, 10_000, 100_000] {
        let m = mollified_t(&op, &z, n)?;
        let err = m[0].sub(&exact[0]).l2_norm().hypot(m[1].sub(&exact[1]).l2_norm());
        let rate = previous.map_or(String::new(), |p| format!(" (ratio {:.2})", p / err));
        println!("n={n:>6}: error {err:.3e}{rate}");
        previous = Some(err);
    }
    Ok(())
}
