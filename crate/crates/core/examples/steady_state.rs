//! Radial steady states by damped fixed-point iteration
//!
//! ```text
//! ρ ← (1 − λ) ρ + λ e^{−h∗ρ} / ∫ e^{−h∗ρ}
//! ```
//!
//! for a strong and a weak linear potential.
//!
//! ```text
//! cargo run --release --example steady_state
//! ```

use hypenergy::potentials::Potential;
use hypenergy::steady::{fixed_point, initial_guess, SteadyOptions, SteadyOutcome};
use hypenergy::{Result, Space};

fn main() -> Result<()> {
    let s = Space::new(2, 1.0)?;
    for slope in [3.0, 0.5] {
        let res = fixed_point(&initial_guess(&s)?, &Potential::linear(slope)?, SteadyOptions::default())?;
        print!("h = {slope} θ: {} after {} iterations, damping {}", res.outcome.as_str(), res.iterations, res.damping);
        match &res.outcome {
            SteadyOutcome::Converged { density, energy, residual } => {
                println!(", energy {energy:.6}, residual {residual:.2e}, mean radius {:.4}", density.first_moment())
            }
            SteadyOutcome::MassEscape { tail_mass, theta_max } => {
                println!(", tail mass {tail_mass:.3} on a grid reaching θ = {theta_max:.1}")
            }
            other => println!(" {other:?}"),
        }
    }
    Ok(())
}
