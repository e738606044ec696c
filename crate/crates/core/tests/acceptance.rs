//! Acceptance suite. Each criterion prints one `PASS` or `FAIL` line with
//! its measured quantities and runtime; the process exits nonzero if any
//! criterion fails.
//!
//! ```text
//! cargo test --release --test acceptance
//! ```

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use hypenergy::density::RadialDensity;
use hypenergy::energy::{ball_energy, ball_energy_upper_bound, energy_lower_bound_check, pair_distance_sandwich};
use hypenergy::geometry::{Isometry, Space};
use hypenergy::hls::{builtin_family, estimate_c0, integrated_hls_deficit, log_hls_deficit, HlsConfig};
use hypenergy::phase::{sweep, FamilyKind, Method, PhaseOptions};
use hypenergy::potentials::{lower_bound_constants, Potential};
use hypenergy::quadrature::{log_space, ls_slope};
use hypenergy::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Smallest value, with NaN treated as the smallest of all.
fn nan_min(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.min(b)
    }
}

/// Largest value, with NaN treated as the largest of all.
fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { passed, detail })
}

/// Blow-up: `E[ρ_R] ~ (A₁/2 − n) log R` as `R → 0` for `h = A₁ log θ`.
fn blow_up_divergence() -> Result<Outcome> {
    let s = Space::new(2, 1.0)?;
    let a1 = 5.0;
    let h = Potential::log(a1)?;
    let radii = log_space(1e-4, 1e-2, 9);
    let mut logs = Vec::new();
    let mut energies = Vec::new();
    for &r in &radii {
        let (e, i) = ball_energy(&s, &h, r)?;
        logs.push(r.ln());
        energies.push(e + i);
    }
    let slope = ls_slope(&logs, &energies);
    let expected = a1 / 2.0 - 2.0;
    let decreasing = energies.windows(2).all(|w| w[1] > w[0]);
    outcome(
        decreasing && (slope - expected).abs() <= 0.1 * expected,
        format!("log R coefficient {slope:.5} (expected {expected}), E[rho_1e-4] = {:.4}", energies[0]),
    )
}

/// Spreading: for `h = 0.5θ` on `H²` the ball energy has a negative linear trend.
fn spreading_divergence() -> Result<Outcome> {
    let s = Space::new(2, 1.0)?;
    let h = Potential::linear(0.5)?;
    let radii: Vec<f64> = (0..9).map(|k| 10.0 + 5.0 * k as f64).collect();
    let mut energies = Vec::new();
    for &r in &radii {
        let (e, i) = ball_energy(&s, &h, r)?;
        energies.push(e + i);
    }
    let slope = ls_slope(&radii, &energies);
    let decreasing = energies.windows(2).all(|w| w[1] < w[0]);
    outcome(
        decreasing && slope < 0.0,
        format!("slope in R {slope:.5}, E[rho_50] = {:.4}", energies[energies.len() - 1]),
    )
}

/// Computed ball energies never exceed the analytic upper bound.
fn ball_bound_dominance() -> Result<Outcome> {
    let s = Space::new(2, 1.0)?;
    let mut worst = f64::NEG_INFINITY;
    let mut count = 0;
    for h in [Potential::linear(3.0)?, Potential::linear(0.5)?] {
        for r in log_space(1e-3, 50.0, 30) {
            for eps in [0.1, 0.5, 0.9] {
                let b = ball_energy_upper_bound(&s, &h, r, eps)?;
                worst = nan_max(worst, b.energy - b.bound);
                count += 1;
            }
        }
    }
    outcome(worst <= 1e-4, format!("{count} cases, max(energy - bound) = {worst:.4e}"))
}

/// Distance to the pole along a geodesic is no shorter than in the tangent space.
fn rauch_property() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = f64::INFINITY;
    let mut count = 0;
    let spaces: Vec<(usize, f64)> = [2, 3, 4].iter().flat_map(|&n| [0.25, 1.0, 4.0].map(|c| (n, c))).collect();
    for (k, &(n, c)) in spaces.iter().enumerate() {
        let s = Space::new(n, c)?;
        let pairs = 10_000 / spaces.len() + usize::from(k < 10_000 % spaces.len());
        let spread = 2.0 / s.sqrt_c();
        for _ in 0..pairs {
            let x = Isometry::random(&s, &mut rng, spread).apply(&s, &s.pole());
            let y = Isometry::random(&s, &mut rng, spread).apply(&s, &s.pole());
            worst = nan_min(worst, s.rauch_gap(&x, &y, &s.pole())?);
            count += 1;
        }
    }
    outcome(worst >= -1e-9, format!("{count} pairs, min gap {worst:.3e}"))
}

/// Jacobian and volume comparison bands with band `(c/2, 2c)` contain the exact values.
fn comparison_sandwich() -> Result<Outcome> {
    let mut worst = f64::NEG_INFINITY;
    let mut count = 0;
    for n in [2, 3, 4] {
        for c in log_space(0.1, 10.0, 10) {
            let s = Space::new(n, c)?.with_band(0.5 * c, 2.0 * c)?;
            for r in log_space(1e-3, 5.0, 10) {
                let b = s.comparison_bands(r)?;
                let (j, v) = (s.jacobian_exp(r), s.ball_volume(r));
                // positive values are violations, measured relative to the exact value
                for violation in [(b.jac_lo - j) / j, (j - b.jac_hi) / j, (b.vol_lo - v) / v, (v - b.vol_hi) / v] {
                    worst = nan_max(worst, violation);
                }
                count += 1;
            }
        }
    }
    outcome(worst <= 1e-10, format!("{count} (n, c, r) points, max relative violation {worst:.3e}"))
}

fn sandwich_family() -> Result<Vec<(String, RadialDensity)>> {
    let mut out = Vec::new();
    for (n, c) in [(2, 1.0), (3, 0.5)] {
        let s = Space::new(n, c)?;
        for r in [0.01, 0.3, 1.0, 2.5, 6.0] {
            out.push((format!("n{n}_ball_R{r}"), RadialDensity::uniform_ball(&s, r)?));
        }
        for sigma in [0.05, 0.5, 1.0, 2.0, 5.0] {
            out.push((format!("n{n}_gaussian_sigma{sigma}"), RadialDensity::gaussian_like_with(&s, sigma, 96)?));
        }
    }
    Ok(out)
}

/// `(2 − √2)·W₁ ≤ ∬ d ρρ ≤ 2·W₁` with `W₁` the first radial moment.
fn distance_sandwich() -> Result<Outcome> {
    let family = sandwich_family()?;
    let mut failed = Vec::new();
    let mut tightest = f64::INFINITY;
    for (name, rho) in &family {
        let w = pair_distance_sandwich(rho);
        tightest = nan_min(nan_min(tightest, w.mid - w.lhs), w.rhs - w.mid);
        if !w.holds(1e-6) {
            failed.push(name.clone());
        }
    }
    outcome(
        failed.is_empty(),
        format!("{} densities, smallest margin {tightest:.3e}, failures {failed:?}", family.len()),
    )
}

/// Both log-HLS deficits are nonnegative with the Gaussian-estimated constant.
fn manifold_log_hls() -> Result<Outcome> {
    let mut worst = f64::INFINITY;
    let mut count = 0;
    for n in [2, 3] {
        let cfg = HlsConfig::user(estimate_c0(n)?);
        for c in [0.25, 1.0, 4.0] {
            for (_, rho) in builtin_family(&Space::new(n, c)?)? {
                worst = nan_min(nan_min(worst, log_hls_deficit(&rho, &cfg)), integrated_hls_deficit(&rho, &cfg));
                count += 1;
            }
        }
    }
    outcome(worst >= -1e-6, format!("{count} densities, min deficit {worst:.4e}"))
}

/// Entropy identity for the pushforward by `log_o`, with second-order grid convergence.
fn pushforward_identity() -> Result<Outcome> {
    let s = Space::new(2, 1.0)?;
    let family = [
        RadialDensity::uniform_ball(&s, 0.5)?,
        RadialDensity::uniform_ball(&s, 1.0)?,
        RadialDensity::uniform_ball(&s, 2.0)?,
        RadialDensity::gaussian_like(&s, 0.5)?,
        RadialDensity::gaussian_like(&s, 1.0)?,
    ];
    let mut worst = 0.0f64;
    let mut worst_ratio = 0.0f64;
    for rho in &family {
        let r0 = rho.pushforward_entropy_residual();
        let r1 = rho.refined().pushforward_entropy_residual();
        worst = nan_max(worst, r0.abs());
        worst_ratio = nan_max(worst_ratio, r1.abs() / r0.abs().max(f64::MIN_POSITIVE));
    }
    outcome(
        worst < 1e-6 && worst_ratio <= 0.5,
        format!("max |residual| {worst:.3e}, max refined/default ratio {worst_ratio:.3}"),
    )
}

/// Energy lower bound for `h = 3θ` with `ε = 1` and `C` the grid infimum.
fn energy_lower_bound() -> Result<Outcome> {
    let s = Space::new(2, 1.0)?;
    let h = Potential::linear(3.0)?;
    let consts = lower_bound_constants(&h, 2, 1.0, None)?;
    let c0 = estimate_c0(2)?;
    let mut worst = f64::INFINITY;
    let mut count = 0;
    for (_, rho) in builtin_family(&s)? {
        worst = nan_min(worst, energy_lower_bound_check(&rho, &h, c0, &consts)?);
        count += 1;
    }
    outcome(
        (consts.eps - 1.0).abs() < 1e-12 && worst >= -1e-4,
        format!("eps {} C {:.5}, {count} densities, min gap {worst:.4e}", consts.eps, consts.c_const),
    )
}

/// Linear-family sweep: subcritical slopes spread, supercritical slopes equilibrate.
fn phase_consistency() -> Result<Outcome> {
    let s = Space::new(2, 1.0)?;
    let coefs: Vec<f64> = (1..=12).map(|k| 0.25 * k as f64).collect();
    let opts = PhaseOptions { methods: vec![Method::FixedPoint, Method::Particles], ..PhaseOptions::default() };
    let table = sweep(&[s], FamilyKind::Linear, &coefs, &opts)?;
    let mut bad = Vec::new();
    let mut summary = Vec::new();
    for row in &table.rows {
        let (fp, pa) = (row.fixed_point.label(), row.particles.label());
        summary.push(format!("{}:{fp}/{pa}", row.coef));
        let ok = if row.coef < 1.0 {
            fp == "MassEscape" && pa == "Spreading"
        } else if row.coef > 2.0 {
            fp == "Converged" && pa == "Equilibrated"
        } else {
            true
        };
        if !ok {
            bad.push(row.coef);
        }
    }
    outcome(bad.is_empty(), format!("violations at {bad:?}; rows {}", summary.join(" ")))
}

const QUICK_CONFIG: &str = r#"
seed = 5

[potential]
family = "linear"
slope = 3.0

[density]
kind = "gaussian_like"
sigma = 0.8

[simulate]
particles = 40
steps = 200

[steady]
cells = 128
tol = 1e-8

[phase]
coefs = [0.5, 3.0]
methods = ["ball_scan", "particles"]
particles = 40
steps = 100
"#;

fn run_all(bin: &str, config: &Path, out: &Path) -> std::io::Result<Vec<(String, Vec<u8>)>> {
    let commands = ["energy", "ball-scan", "hls", "bounds", "simulate", "steady", "phase", "selftest"];
    let mut files = Vec::new();
    for cmd in commands {
        let dir = out.join(cmd);
        let status = Command::new(bin)
            .arg("--config")
            .arg(config)
            .arg("--out")
            .arg(&dir)
            .arg(cmd)
            .stdout(std::process::Stdio::null())
            .status()?;
        if status.code() != Some(0) {
            return Err(std::io::Error::other(format!("{cmd} exited with {status}")));
        }
        let mut names: Vec<_> = std::fs::read_dir(&dir)?.collect::<std::io::Result<Vec<_>>>()?;
        names.sort_by_key(|e| e.file_name());
        for e in names {
            files.push((format!("{cmd}/{}", e.file_name().to_string_lossy()), std::fs::read(e.path())?));
        }
    }
    Ok(files)
}

/// Every subcommand reproduces its output files byte for byte.
fn determinism() -> Result<Outcome> {
    let bin = env!("CARGO_BIN_EXE_hypenergy");
    let tmp = tempfile::tempdir().map_err(|e| hypenergy::Error::Io(e.to_string()))?;
    let config = tmp.path().join("quick.toml");
    std::fs::write(&config, QUICK_CONFIG).map_err(|e| hypenergy::Error::Io(e.to_string()))?;
    let io = |e: std::io::Error| hypenergy::Error::Io(e.to_string());
    let a = run_all(bin, &config, &tmp.path().join("a")).map_err(io)?;
    let b = run_all(bin, &config, &tmp.path().join("b")).map_err(io)?;
    let names_match = a.iter().map(|f| &f.0).eq(b.iter().map(|f| &f.0));
    let differing: Vec<&String> = a.iter().zip(&b).filter(|(x, y)| x.1 != y.1).map(|(x, _)| &x.0).collect();
    outcome(
        names_match && differing.is_empty() && !a.is_empty(),
        format!("{} files compared, differing {differing:?}", a.len()),
    )
}

type Criterion = (&'static str, Duration, fn() -> Result<Outcome>);

fn main() {
    let criteria: [Criterion; 11] = [
        ("blow-up divergence", Duration::from_secs(10), blow_up_divergence),
        ("spreading divergence", Duration::from_secs(10), spreading_divergence),
        ("ball energy below bound", Duration::from_secs(30), ball_bound_dominance),
        ("rauch property", Duration::from_secs(5), rauch_property),
        ("comparison sandwich", Duration::from_secs(5), comparison_sandwich),
        ("pair distance sandwich", Duration::from_secs(60), distance_sandwich),
        ("manifold log-hls", Duration::from_secs(120), manifold_log_hls),
        ("pushforward entropy identity", Duration::from_secs(30), pushforward_identity),
        ("energy lower bound", Duration::from_secs(60), energy_lower_bound),
        ("phase threshold consistency", Duration::from_secs(900), phase_consistency),
        ("determinism", Duration::MAX, determinism),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failures = 0;
    for (k, (name, budget, check)) in criteria.iter().enumerate() {
        let id = k + 1;
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let (passed, detail) = match result {
            Ok(o) => (o.passed && elapsed <= *budget, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failures += 1;
        }
        let limit = if *budget == Duration::MAX { String::new() } else { format!(" (limit {}s)", budget.as_secs()) };
        println!(
            "{} {id:>2} {name}: {detail}; {:.2}s{limit}",
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {failures} failed");
    if failures > 0 {
        std::process::exit(1);
    }
}
