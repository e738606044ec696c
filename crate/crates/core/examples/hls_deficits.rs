//! Logarithmic HLS deficits on hyperbolic space for the built-in densities,
//! with the constant estimated from Gaussians in the tangent space.
//!
//! ```text
//! cargo run --release --example hls_deficits
//! ```

use hypenergy::hls::{builtin_family, integrated_hls_deficit, log_hls_deficit, pole_correction, HlsConfig};
use hypenergy::{Result, Space};

fn main() -> Result<()> {
    for n in [2, 3] {
        let cfg = HlsConfig::estimated(n)?;
        println!("n = {n}: C0 = {:.6}", cfg.c0);
        for c in [0.25, 4.0] {
            let s = Space::new(n, c)?;
            println!("  c = {c}");
            for (name, rho) in builtin_family(&s)? {
                println!(
                    "    {name:<20} entropy {:>9.4}  pole {:>8.4}  deficits {:>9.5} {:>9.5}",
                    rho.entropy(),
                    pole_correction(&rho),
                    log_hls_deficit(&rho, &cfg),
                    integrated_hls_deficit(&rho, &cfg)
                );
            }
        }
    }
    Ok(())
}
