//! A coarse phase sweep of `h = A₂(n − 1)√c θ` on `H²`, comparing the analytic
//! regime with the ball scan and the fixed point, then a bisection for the
//! log-family blow-up threshold `A₁ = 2n`.
//!
//! ```text
//! cargo run --release --example phase_sweep
//! ```

use hypenergy::phase::{sweep, threshold_estimate, FamilyKind, Method, PhaseOptions};
use hypenergy::{Result, Space};

fn main() -> Result<()> {
    let s = Space::new(2, 1.0)?;
    let opts = PhaseOptions { methods: vec![Method::BallScan, Method::FixedPoint], ..PhaseOptions::default() };
    let table = sweep(&[s], FamilyKind::Linear, &[0.5, 1.5, 2.5], &opts)?;
    table.write_csv(std::io::stdout())?;

    let t = threshold_estimate(&s, FamilyKind::Log, Method::BallScan, (2.0, 6.0), &opts)?;
    println!(
        "\nlog family threshold by ball scan: {:.3} in [{:.3}, {:.3}] ({} below, {} above)",
        t.estimate, t.lo, t.hi, t.lo_verdict, t.hi_verdict
    );
    Ok(())
}
