//! The `hypenergy` command line: parse and validate a configuration, run one
//! experiment, write CSV files and a manifest into the output directory.
//!
//! ```text
//! exit 0   success
//! exit 1   a checked inequality failed
//! exit 2   configuration error
//! exit 3   numerical failure
//! ```
//!
//! Errors are reported on stderr as one `key=value` line.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{write_points, Config};
use crate::density::RadialDensity;
use crate::energy::{
    ball_energy_upper_bound, divergence_scan, energy_lower_bound_check, entropy_lower_bound_check,
    pair_distance_sandwich, total_energy, DivergenceVerdict, ScanOptions,
};
use crate::error::{Error, Result};
use crate::geometry::{Isometry, Space};
use crate::hls::{builtin_family, estimate_c0, integrated_hls_deficit, log_hls_deficit, pole_correction, HlsConfig};
use crate::particles::{run, step, ParticleState};
use crate::phase::sweep;
use crate::potentials::{lower_bound_constants, Potential};
use crate::quadrature::log_space;
use crate::steady::{euler_lagrange_residual, fixed_point, SteadyOutcome};

#[derive(Debug, Parser)]
#[command(name = "hypenergy", version, about = "Free-energy experiments for aggregation-diffusion on hyperbolic space")]
pub struct Cli {
    /// TOML configuration; defaults are used when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `out` in the configuration.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; all cores when absent.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Print the default configuration and exit.
    #[arg(long)]
    pub dump_defaults: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Entropy, interaction and total energy of the configured density.
    Energy,
    /// Energies of uniform balls against their upper bound, with a divergence verdict.
    BallScan,
    /// Log-HLS deficits across the built-in densities.
    Hls,
    /// Pairwise-distance sandwich and the two energy lower bounds.
    Bounds,
    /// Interacting-particle run.
    Simulate,
    /// Radial steady state by damped fixed-point iteration.
    Steady,
    /// Coefficient sweep against the analytic thresholds.
    Phase,
    /// Reduced-resolution property checks.
    Selftest,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Energy => "energy",
            Command::BallScan => "ball-scan",
            Command::Hls => "hls",
            Command::Bounds => "bounds",
            Command::Simulate => "simulate",
            Command::Steady => "steady",
            Command::Phase => "phase",
            Command::Selftest => "selftest",
        }
    }
}

/// Whether every checked inequality held.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Violation,
}

pub fn exit_code(result: &Result<Status>) -> i32 {
    match result {
        Ok(Status::Ok) => 0,
        Ok(Status::Violation) => 1,
        Err(Error::Config(_)) | Err(Error::Io(_)) => 2,
        Err(_) => 3,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Config(_) => "config",
        Error::Io(_) => "io",
        Error::Degenerate(_) | Error::DegenerateInput(_) => "degenerate",
        Error::IterationLimit { .. } => "iteration_limit",
        Error::Domain(_) => "domain",
        Error::ClassificationInput(_) => "classification_input",
        Error::Infeasible(_) => "infeasible",
        Error::Divergent(_) => "divergent",
        Error::Bracket(_) => "bracket",
        Error::Numerical(_) => "numerical",
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = execute(&cli);
    if let Err(e) = &result {
        let msg = e.to_string().replace('\n', " ");
        eprintln!("error code={} kind={} message={:?}", exit_code(&result), error_kind(e), msg);
    }
    exit_code(&result)
}

pub fn execute(cli: &Cli) -> Result<Status> {
    if cli.dump_defaults {
        print!("{}", Config::default().to_toml());
        return Ok(Status::Ok);
    }
    let command = cli.command.ok_or_else(|| Error::Config("no subcommand given (see --help)".into()))?;
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        // a second initialization in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    run_command(command, &cfg)
}

/// Runs one subcommand with a validated configuration.
pub fn run_command(command: Command, cfg: &Config) -> Result<Status> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::Io(format!("{}: {e}", cfg.out.display())))?;
    write_manifest(command, cfg)?;
    let space = cfg.space.build()?;
    match command {
        Command::Energy => energy_cmd(cfg, &space),
        Command::BallScan => ball_scan_cmd(cfg, &space),
        Command::Hls => hls_cmd(cfg),
        Command::Bounds => bounds_cmd(cfg, &space),
        Command::Simulate => simulate_cmd(cfg, &space),
        Command::Steady => steady_cmd(cfg, &space),
        Command::Phase => phase_cmd(cfg),
        Command::Selftest => selftest(cfg),
    }
}

fn create(dir: &Path, name: &str) -> Result<File> {
    let path = dir.join(name);
    File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn io<T>(r: std::io::Result<T>) -> Result<T> {
    r.map_err(|e| Error::Io(e.to_string()))
}

fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config_sha256: String,
    seed: u64,
    version: &'a str,
    config: &'a Config,
}

fn config_hash(cfg: &Config) -> String {
    Sha256::digest(cfg.to_toml().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// `manifest.toml`: the resolved configuration, its hash, the seed and the
/// crate version. The output directory and timestamps are left out, so the
/// same experiment reproduces the manifest exactly wherever it is written.
fn write_manifest(command: Command, cfg: &Config) -> Result<()> {
    let recorded = Config { out: PathBuf::new(), ..cfg.clone() };
    let m = Manifest {
        command: command.name(),
        config_sha256: config_hash(&recorded),
        seed: cfg.seed,
        version: env!("CARGO_PKG_VERSION"),
        config: &recorded,
    };
    let text = toml::to_string(&m).map_err(|e| Error::Io(e.to_string()))?;
    io(create(&cfg.out, "manifest.toml")?.write_all(text.as_bytes()))
}

fn energy_cmd(cfg: &Config, space: &Space) -> Result<Status> {
    let h = cfg.potential.build(space)?;
    let rho = cfg.density.build(space)?;
    let r = total_energy(&rho, &h)?;
    let mut w = csv::Writer::from_writer(create(&cfg.out, "energy.csv")?);
    w.write_record(["entropy", "interaction", "total", "quad_error"])?;
    w.write_record([fmt(r.entropy), fmt(r.interaction), fmt(r.total), fmt(r.quad_error)])?;
    io(w.flush())?;
    println!("energy total={} entropy={} interaction={}", fmt(r.total), fmt(r.entropy), fmt(r.interaction));
    Ok(Status::Ok)
}

/// Tolerance for computed energies against their analytic upper bound.
const BOUND_TOL: f64 = 1e-4;

fn ball_scan_cmd(cfg: &Config, space: &Space) -> Result<Status> {
    let h = cfg.potential.build(space)?;
    let scan = divergence_scan(space, &h, &cfg.scan.radii(), cfg.scan.options())?;
    let mut w = csv::Writer::from_writer(create(&cfg.out, "ball_scan.csv")?);
    w.write_record(["radius", "entropy", "interaction", "total", "bound"])?;
    let mut status = Status::Ok;
    for p in &scan.points {
        w.write_record([fmt(p.radius), fmt(p.entropy), fmt(p.interaction), fmt(p.total), fmt(p.bound)])?;
        if !(p.total <= p.bound + BOUND_TOL) {
            status = Status::Violation;
        }
    }
    io(w.flush())?;
    println!(
        "ball-scan verdict={} small_slope={} large_slope={}",
        scan.verdict,
        fmt(scan.small_slope),
        fmt(scan.large_slope)
    );
    Ok(status)
}

fn hls_config(cfg: &Config, n: usize) -> Result<HlsConfig> {
    Ok(match cfg.hls.c0 {
        Some(c0) => HlsConfig::user(c0),
        None => HlsConfig::estimated(n)?,
    })
}

fn hls_cmd(cfg: &Config) -> Result<Status> {
    let space = cfg.space.build()?;
    let hcfg = hls_config(cfg, space.dim())?;
    let mut w = csv::Writer::from_writer(create(&cfg.out, "hls.csv")?);
    w.write_record([
        "density",
        "n",
        "c",
        "c0",
        "entropy",
        "pole_correction",
        "deficit_pointwise",
        "deficit_integrated",
    ])?;
    let mut status = Status::Ok;
    for (name, rho) in builtin_family(&space)? {
        let a = log_hls_deficit(&rho, &hcfg);
        let b = integrated_hls_deficit(&rho, &hcfg);
        if !(a >= -cfg.hls.tol && b >= -cfg.hls.tol) {
            status = Status::Violation;
        }
        w.write_record([
            name,
            space.dim().to_string(),
            space.curvature().to_string(),
            fmt(hcfg.c0),
            fmt(rho.entropy()),
            fmt(pole_correction(&rho)),
            fmt(a),
            fmt(b),
        ])?;
    }
    io(w.flush())?;
    println!("hls c0={} source={:?}", fmt(hcfg.c0), hcfg.source);
    Ok(status)
}

fn bounds_cmd(cfg: &Config, space: &Space) -> Result<Status> {
    let h = cfg.potential.build(space)?;
    let c0 = hls_config(cfg, space.dim())?.c0;
    let tol = cfg.bounds.tol;
    let consts = lower_bound_constants(&h, space.dim(), space.curvature(), cfg.bounds.eps);
    if let Err(e) = &consts {
        log::warn!("energy lower bound skipped: {e}");
    }
    let mut w = csv::Writer::from_writer(create(&cfg.out, "bounds.csv")?);
    w.write_record(["density", "check", "lhs", "rhs", "gap"])?;
    let mut status = Status::Ok;
    let mut record = |w: &mut csv::Writer<File>, name: &str, check: &str, lhs: f64, rhs: f64| -> Result<()> {
        let gap = rhs - lhs;
        if !(gap >= -tol) {
            status = Status::Violation;
        }
        w.write_record([name.to_string(), check.to_string(), fmt(lhs), fmt(rhs), fmt(gap)])?;
        Ok(())
    };
    for (name, rho) in builtin_family(space)? {
        let s = pair_distance_sandwich(&rho);
        record(&mut w, &name, "pair_distance_lower", s.lhs, s.mid)?;
        record(&mut w, &name, "pair_distance_upper", s.mid, s.rhs)?;
        if let Ok(k) = &consts {
            let gap = energy_lower_bound_check(&rho, &h, c0, k)?;
            record(&mut w, &name, "energy_linear_lower", 0.0, gap)?;
        }
        match entropy_lower_bound_check(&rho, &h, c0) {
            Ok(gap) => record(&mut w, &name, "energy_entropy_lower", 0.0, gap)?,
            Err(e) => log::debug!("entropy lower bound skipped: {e}"),
        }
    }
    io(w.flush())?;
    println!("bounds status={status:?}");
    Ok(status)
}

fn simulate_cmd(cfg: &Config, space: &Space) -> Result<Status> {
    let h = cfg.potential.build(space)?;
    let sim = cfg.simulate.build(space, cfg.seed)?;
    let report = run(&sim, &h, space)?;
    let mut w = csv::Writer::from_writer(create(&cfg.out, "trajectory.csv")?);
    w.write_record(["t", "mean_dist", "dispersion", "min_dist", "nn_p10"])?;
    for o in &report.observations {
        w.write_record([fmt(o.t), fmt(o.mean_dist), fmt(o.dispersion), fmt(o.min_dist), fmt(o.nn_p10)])?;
    }
    io(w.flush())?;
    write_points(&report.final_state.points, create(&cfg.out, "final_state.csv")?)?;
    println!(
        "simulate verdict={} distance_slope={} dispersion_slope={} escaped={} singular_pairs={}",
        report.verdict,
        fmt(report.distance_slope),
        fmt(report.dispersion_slope),
        report.escaped,
        report.singular_pairs
    );
    Ok(Status::Ok)
}

#[derive(Serialize)]
struct SteadyMeta {
    outcome: String,
    potential: String,
    n: usize,
    c: f64,
    iterations: usize,
    damping: f64,
    expansions: usize,
    energy_increases: usize,
    energy: Option<f64>,
    residual: Option<f64>,
}

fn steady_cmd(cfg: &Config, space: &Space) -> Result<Status> {
    let h = cfg.potential.build(space)?;
    let rho0 = cfg.steady.initial(space)?;
    let res = fixed_point(&rho0, &h, cfg.steady.options()?)?;
    let (energy, residual) = match &res.outcome {
        SteadyOutcome::Converged { energy, residual, .. } => (Some(*energy), Some(*residual)),
        _ => (None, None),
    };
    res.last.write_csv(create(&cfg.out, "profile.csv")?)?;
    let meta = SteadyMeta {
        outcome: res.outcome.as_str().to_string(),
        potential: toml::to_string(&cfg.potential).map_err(|e| Error::Io(e.to_string()))?.replace('\n', "; "),
        n: space.dim(),
        c: space.curvature(),
        iterations: res.iterations,
        damping: res.damping,
        expansions: res.expansions,
        energy_increases: res.energy_increases,
        energy,
        residual,
    };
    let text = toml::to_string(&meta).map_err(|e| Error::Io(e.to_string()))?;
    io(create(&cfg.out, "profile.toml")?.write_all(text.as_bytes()))?;
    println!("steady outcome={} iterations={}", meta.outcome, res.iterations);
    Ok(Status::Ok)
}

fn phase_cmd(cfg: &Config) -> Result<Status> {
    let opts = cfg.phase.options(cfg)?;
    let table = sweep(&cfg.phase.spaces()?, cfg.phase.family()?, &cfg.phase.coefs, &opts)?;
    table.write_csv(create(&cfg.out, "phase.csv")?)?;
    let disagree = table.rows.iter().filter(|r| !r.agree).count();
    println!("phase rows={} disagreements={disagree}", table.rows.len());
    Ok(Status::Ok)
}

/// Largest value, or NaN if any value is NaN.
fn max_or_nan(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(f64::NEG_INFINITY, |m, v| if m.is_nan() || v.is_nan() { f64::NAN } else { m.max(v) })
}

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> Check {
    match f() {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check { name, passed: false, detail: e.to_string() },
    }
}

/// Reduced-resolution versions of the library's property checks.
pub fn selftest(cfg: &Config) -> Result<Status> {
    let s2 = Space::new(2, 1.0)?;
    let mut checks = Vec::new();

    checks.push(check("rauch_gap_nonnegative", || {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut worst = f64::INFINITY;
        for (n, c) in [(2, 0.25), (3, 1.0), (4, 4.0)] {
            let s = Space::new(n, c)?;
            for _ in 0..300 {
                let iso = Isometry::random(&s, &mut rng, 1.5);
                let x = iso.apply(&s, &s.pole());
                let jso = Isometry::random(&s, &mut rng, 1.5);
                let y = jso.apply(&s, &s.pole());
                worst = -max_or_nan([-worst, -s.rauch_gap(&x, &y, &s.pole())?].into_iter());
            }
        }
        Ok((worst >= -1e-9, format!("min gap {worst:e}")))
    }));

    checks.push(check("comparison_bands_contain_exact", || {
        let mut ok = true;
        for c in [0.25, 1.0, 4.0] {
            let s = Space::new(3, c)?.with_band(0.5 * c, 2.0 * c)?;
            for r in log_space(0.01, 5.0, 20) {
                let b = s.comparison_bands(r)?;
                let (j, v) = (s.jacobian_exp(r), s.ball_volume(r));
                ok &= b.jac_lo <= j && j <= b.jac_hi && b.vol_lo <= v && v <= b.vol_hi;
            }
        }
        Ok((ok, String::new()))
    }));

    let family: Vec<RadialDensity> = vec![
        RadialDensity::uniform_ball_with(&s2, 0.5, 16)?,
        RadialDensity::uniform_ball_with(&s2, 2.0, 16)?,
        RadialDensity::gaussian_like_with(&s2, 1.0, 32)?,
    ];

    checks.push(check("pair_distance_sandwich", || {
        let ok = family.iter().all(|rho| pair_distance_sandwich(rho).holds(1e-6));
        Ok((ok, String::new()))
    }));

    checks.push(check("log_hls_deficits_nonnegative", || {
        let hcfg = HlsConfig::user(estimate_c0(2)?);
        let worst =
            family.iter().flat_map(|rho| [log_hls_deficit(rho, &hcfg), integrated_hls_deficit(rho, &hcfg)]).map(|d| -d);
        let worst = -max_or_nan(worst);
        Ok((worst >= -1e-6, format!("min deficit {worst:e}")))
    }));

    checks.push(check("pushforward_entropy_identity", || {
        // midpoint error on coarse grids is second order; refine and compare
        let worst = max_or_nan(family.iter().map(|rho| rho.pushforward_entropy_residual().abs()));
        let fine = max_or_nan(family.iter().map(|rho| rho.refined().pushforward_entropy_residual().abs()));
        Ok((worst < 1e-4 && fine < 0.5 * worst.max(1e-12), format!("max residual {worst:e} refined {fine:e}")))
    }));

    checks.push(check("ball_scan_blow_up", || {
        let scan = divergence_scan(&s2, &Potential::log(5.0)?, &log_space(1e-4, 1.0, 9), ScanOptions::default())?;
        Ok((scan.verdict == DivergenceVerdict::BlowUpDiverges, format!("small slope {:.4}", scan.small_slope)))
    }));

    checks.push(check("ball_scan_spreading", || {
        let scan = divergence_scan(&s2, &Potential::linear(0.5)?, &log_space(0.05, 50.0, 9), ScanOptions::default())?;
        Ok((scan.verdict == DivergenceVerdict::SpreadDiverges, format!("large slope {:.4}", scan.large_slope)))
    }));

    checks.push(check("ball_energy_below_bound", || {
        let h = Potential::linear(0.5)?;
        let mut ok = true;
        for r in log_space(0.01, 20.0, 8) {
            let b = ball_energy_upper_bound(&s2, &h, r, 0.5)?;
            ok &= b.energy <= b.bound + BOUND_TOL;
        }
        Ok((ok, String::new()))
    }));

    checks.push(check("steady_state_residual", || {
        let h = Potential::linear(3.0)?;
        let edges = crate::quadrature::lin_edges(0.0, 10.0, 96);
        let values = edges.windows(2).map(|w| (-0.125 * (w[0] + w[1]).powi(2)).exp()).collect();
        let rho0 = RadialDensity::normalized(&s2, edges, values)?.0;
        let res = fixed_point(&rho0, &h, crate::steady::SteadyOptions { tol: 1e-8, ..Default::default() })?;
        match &res.outcome {
            SteadyOutcome::Converged { density, .. } => {
                let r = euler_lagrange_residual(density, &h)?;
                Ok((r < 1e-6, format!("residual {r:e}")))
            }
            other => Ok((false, other.as_str().to_string())),
        }
    }));

    checks.push(check("two_body_closing_speed", || {
        let h = Potential::linear(1.0)?;
        let st = ParticleState::new(vec![s2.polar_point(0.5, &[1.0, 0.0]), s2.polar_point(0.5, &[-1.0, 0.0])]);
        let (next, _) = step(&s2, &st, &h, 1e-3, false, 0, 0)?;
        let d = s2.distance(&next.points[0], &next.points[1])?;
        Ok(((1.0 - d - 1e-3).abs() < 1e-9, format!("distance {d}")))
    }));

    let mut w = csv::Writer::from_writer(create(&cfg.out, "selftest.csv")?);
    w.write_record(["check", "passed", "detail"])?;
    let mut status = Status::Ok;
    for c in &checks {
        println!("{} {} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        w.write_record([c.name, if c.passed { "true" } else { "false" }, &c.detail])?;
        if !c.passed {
            status = Status::Violation;
        }
    }
    io(w.flush())?;
    Ok(status)
}
