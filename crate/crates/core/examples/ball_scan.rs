//! Free energy of uniform balls `ρ_R` for three potentials on `H²`. A strong
//! logarithmic singularity drives the energy to `−∞` as `R → 0`; a weak
//! linear potential drives it to `−∞` as `R → ∞`; a strong linear one is
//! bounded below.
//!
//! ```text
//! cargo run --release --example ball_scan
//! ```

use hypenergy::energy::{divergence_scan, ScanOptions};
use hypenergy::potentials::{classify_regime, Potential};
use hypenergy::quadrature::log_space;
use hypenergy::{Result, Space};

fn main() -> Result<()> {
    let s = Space::new(2, 1.0)?;
    let radii = log_space(1e-4, 50.0, 13);
    for (name, h) in
        [("5 log θ", Potential::log(5.0)?), ("0.5 θ", Potential::linear(0.5)?), ("3 θ", Potential::linear(3.0)?)]
    {
        let regime = classify_regime(&h, 2, 1.0, 1.0)?;
        let scan = divergence_scan(&s, &h, &radii, ScanOptions::default())?;
        println!("h = {name}: regime {} ({}), scan {}", regime.tag, regime.witness, scan.verdict);
        println!("  {:>10} {:>12} {:>12}", "R", "E[ρ_R]", "bound");
        for p in scan.points.iter().step_by(3) {
            println!("  {:>10.4e} {:>12.5} {:>12.5}", p.radius, p.total, p.bound);
        }
        println!("  slope in log R near 0: {:.3}, slope in R at large R: {:.3}\n", scan.small_slope, scan.large_slope);
    }
    Ok(())
}
