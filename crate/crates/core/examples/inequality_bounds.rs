//! The pairwise-distance sandwich against the first moment and the energy
//! lower bound for `h = 3θ` on `H²`.
//!
//! ```text
//! (2 − √2)·W₁ ≤ ∬ d(x, y) ρρ ≤ 2·W₁
//! E[ρ] ≥ lower bound from the scan constants (ε, C)
//! ```
//!
//! ```text
//! cargo run --release --example inequality_bounds
//! ```

use hypenergy::energy::{energy_lower_bound_check, pair_distance_sandwich, total_energy};
use hypenergy::hls::{builtin_family, estimate_c0};
use hypenergy::potentials::{lower_bound_constants, Potential};
use hypenergy::{Result, Space};

fn main() -> Result<()> {
    let s = Space::new(2, 1.0)?;
    let h = Potential::linear(3.0)?;
    let consts = lower_bound_constants(&h, 2, 1.0, None)?;
    let c0 = estimate_c0(2)?;
    println!("eps = {}, C = {:.5}, C0 = {c0:.5}\n", consts.eps, consts.c_const);
    println!("{:<20} {:>9} {:>9} {:>9} {:>10} {:>10}", "density", "lower", "pairs", "upper", "energy", "gap");
    for (name, rho) in builtin_family(&s)? {
        let w = pair_distance_sandwich(&rho);
        let e = total_energy(&rho, &h)?;
        let gap = energy_lower_bound_check(&rho, &h, c0, &consts)?;
        println!("{name:<20} {:>9.4} {:>9.4} {:>9.4} {:>10.4} {:>10.4}", w.lhs, w.mid, w.rhs, e.total, gap);
    }
    Ok(())
}
