//! Interacting particles on `H²` under weak and strong linear attraction.
//! The weak run spreads; the strong one settles into a bounded cloud.
//!
//! ```text
//! cargo run --release --example particle_flow
//! ```

use hypenergy::particles::{run, SimConfig};
use hypenergy::potentials::Potential;
use hypenergy::{Result, Space};

fn main() -> Result<()> {
    let s = Space::new(2, 1.0)?;
    for slope in [0.5, 3.0] {
        let cfg = SimConfig { particles: 150, steps: 1500, observe_every: 250, ..SimConfig::default() };
        let report = run(&cfg, &Potential::linear(slope)?, &s)?;
        println!("h = {slope} θ");
        println!("  {:>6} {:>10} {:>10} {:>10}", "t", "mean d", "dispersion", "min d");
        for o in &report.observations {
            println!("  {:>6.2} {:>10.4} {:>10.4} {:>10.2e}", o.t, o.mean_dist, o.dispersion, o.min_dist);
        }
        println!(
            "  verdict {} (distance slope {:.4}, escaped {})\n",
            report.verdict, report.distance_slope, report.escaped
        );
    }
    Ok(())
}
