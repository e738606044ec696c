//! Hyperboloid geometry: distances, exponential and logarithm maps, the
//! Jacobian of `exp_o`, comparison bands and the Karcher mean.
//!
//! ```text
//! cargo run --release --example geometry_kernel
//! ```

use hypenergy::geometry::Isometry;
use hypenergy::{Result, Space};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let s = Space::new(3, 1.0)?.with_band(0.5, 2.0)?;
    let x = s.polar_point(1.0, &[1.0, 0.0, 0.0]);
    let y = s.polar_point(2.0, &[0.0, 1.0, 0.0]);
    let d = s.distance(&x, &y)?;
    println!("d(x, y) = {d:.6}  (polar form {:.6})", s.polar_distance(1.0, 2.0, std::f64::consts::FRAC_PI_2));

    let v = s.log_map(&x, &y)?;
    let back = s.exp_map(&x, &v);
    println!("|log_x y| = {:.6}, d(exp_x log_x y, y) = {:.2e}", v.norm(), s.distance(&back, &y)?);
    println!("rauch gap at the pole = {:.6}", s.rauch_gap(&x, &y, &s.pole())?);

    println!("\n{:>6} {:>12} {:>12} {:>12}", "r", "jac_lo", "J(r)", "jac_hi");
    for r in [0.1, 0.5, 1.0, 2.0, 4.0] {
        let b = s.comparison_bands(r)?;
        println!("{r:>6} {:>12.5} {:>12.5} {:>12.5}", b.jac_lo, s.jacobian_exp(r), b.jac_hi);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let centre = s.polar_point(0.7, &[0.0, 0.0, 1.0]);
    let shift = Isometry::boost_from_pole(&s, &centre);
    let cloud: Vec<_> = (0..50)
        .map(|_| {
            let v = s.gaussian_tangent(&s.pole(), &mut rng, 0.3);
            shift.apply(&s, &s.exp_map(&s.pole(), &v))
        })
        .collect();
    let mean = s.karcher_mean_uniform(&cloud)?;
    println!(
        "\nkarcher mean of 50 points around a centre at radius 0.7: d(mean, centre) = {:.4}",
        s.distance(&mean, &centre)?
    );
    Ok(())
}
