//! Particle runs in the three regimes: weak attraction spreads, strong
//! linear attraction equilibrates, a strong logarithmic singularity collapses.

use hypenergy::geometry::Space;
use hypenergy::particles::{run, InitialCondition, SimConfig, TrajectoryVerdict};
use hypenergy::potentials::Potential;

fn plane() -> Space {
    Space::new(2, 1.0).unwrap()
}

#[test]
fn weak_linear_attraction_spreads() {
    let cfg = SimConfig { particles: 200, dt: 0.01, steps: 10_000, ..SimConfig::default() };
    let r = run(&cfg, &Potential::linear(0.5).unwrap(), &plane()).unwrap();
    assert_eq!(r.verdict, TrajectoryVerdict::Spreading, "slope {}", r.distance_slope);
}

#[test]
fn strong_linear_attraction_equilibrates() {
    let cfg = SimConfig { particles: 200, dt: 0.01, steps: 2000, ..SimConfig::default() };
    let r = run(&cfg, &Potential::linear(3.0).unwrap(), &plane()).unwrap();
    assert_eq!(r.verdict, TrajectoryVerdict::Equilibrated, "slope {}", r.distance_slope);
    assert!(!r.escaped);
    let last = r.observations.last().unwrap();
    assert!(last.mean_dist > 0.1 && last.mean_dist < 3.0, "mean distance {}", last.mean_dist);
}

#[test]
fn strong_log_singularity_collapses() {
    let cfg = SimConfig {
        particles: 60,
        dt: 2e-4,
        steps: 8000,
        initial: InitialCondition::Ball { radius: 1.0 },
        ..SimConfig::default()
    };
    let r = run(&cfg, &Potential::log_linear(5.0, 3.0).unwrap(), &plane()).unwrap();
    assert_eq!(r.verdict, TrajectoryVerdict::Collapse, "dispersion slope {}", r.dispersion_slope);
    let (first, last) = (r.observations.first().unwrap(), r.observations.last().unwrap());
    assert!(last.dispersion < first.dispersion);
}
