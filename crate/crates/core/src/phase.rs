//! Phase sweeps: each coefficient of a one-parameter potential family is
//! classified analytically and by up to three numerical probes, and the
//! verdicts are compared.
//!
//! ```text
//! linear family   h(θ) = A₂ √c θ            spreading below n−1, existence above 2(n−1)
//! log family      h(θ) = A₁ log θ + 2n √c θ  blow-up above 2n
//! ```
//!
//! The log family carries a confining linear part so that only the
//! behaviour at the origin is in play.

use rayon::prelude::*;
use serde::Serialize;

use crate::energy::{divergence_scan, DivergenceVerdict, ScanOptions};
use crate::error::{Error, Result};
use crate::geometry::Space;
use crate::particles::{run, stream, SimConfig, TrajectoryVerdict};
use crate::potentials::{classify_regime, Potential, RegimeTag};
use crate::quadrature::log_space;
use crate::steady::{fixed_point, initial_guess, SteadyOptions, SteadyOutcome};

use rand::RngCore;

/// Bisection halvings used by `threshold_estimate`.
pub const BISECTION_STEPS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FamilyKind {
    Linear,
    Log,
}

impl FamilyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FamilyKind::Linear => "linear",
            FamilyKind::Log => "log",
        }
    }

    pub fn potential(&self, space: &Space, coef: f64) -> Result<Potential> {
        match self {
            FamilyKind::Linear => Potential::linear_a2(coef, space.curvature()),
            FamilyKind::Log => Potential::log_linear(coef, 2.0 * space.dim() as f64 * space.sqrt_c()),
        }
    }
}

impl std::str::FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(FamilyKind::Linear),
            "log" => Ok(FamilyKind::Log),
            other => Err(Error::Config(format!("unknown family `{other}`, expected linear or log"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Method {
    BallScan,
    FixedPoint,
    Particles,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::BallScan => "ball_scan",
            Method::FixedPoint => "fixed_point",
            Method::Particles => "particles",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ball_scan" => Ok(Method::BallScan),
            "fixed_point" => Ok(Method::FixedPoint),
            "particles" => Ok(Method::Particles),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

/// What a verdict says about minimizers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Phase {
    Spreading,
    BlowUp,
    Exists,
    Unknown,
}

impl Phase {
    pub fn of_regime(tag: RegimeTag) -> Self {
        match tag {
            RegimeTag::NonexistenceBlowUp => Phase::BlowUp,
            RegimeTag::NonexistenceSpreading => Phase::Spreading,
            RegimeTag::ExistenceGeneral | RegimeTag::ExistenceHomogeneous => Phase::Exists,
            RegimeTag::Undetermined => Phase::Unknown,
        }
    }

    pub fn of_label(label: &str) -> Self {
        match label {
            "SpreadDiverges" | "MassEscape" | "Spreading" => Phase::Spreading,
            "BlowUpDiverges" | "Collapse" => Phase::BlowUp,
            "BoundedBelow" | "Converged" | "Equilibrated" => Phase::Exists,
            _ => Phase::Unknown,
        }
    }
}

/// Outcome of one method on one row: a verdict label, or the error text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Probe {
    Skipped,
    Verdict(String),
    Failed(String),
}

impl Probe {
    pub fn label(&self) -> &str {
        match self {
            Probe::Skipped => "-",
            Probe::Verdict(v) => v,
            Probe::Failed(_) => "error",
        }
    }

    pub fn phase(&self) -> Phase {
        match self {
            Probe::Verdict(v) => Phase::of_label(v),
            _ => Phase::Unknown,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseOptions {
    pub methods: Vec<Method>,
    pub radii: Vec<f64>,
    pub scan: ScanOptions,
    pub steady: SteadyOptions,
    /// Particle settings; the seed of row `k` is derived from this seed and `k`.
    pub sim: SimConfig,
}

impl Default for PhaseOptions {
    fn default() -> Self {
        Self {
            methods: vec![Method::BallScan, Method::FixedPoint, Method::Particles],
            radii: log_space(1e-4, 50.0, 25),
            scan: ScanOptions::default(),
            steady: SteadyOptions::default(),
            sim: SimConfig { particles: 400, dt: 0.02, steps: 1000, ..SimConfig::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseRow {
    pub n: usize,
    pub c: f64,
    pub family: FamilyKind,
    pub coef: f64,
    pub analytic: RegimeTag,
    pub ball_scan: Probe,
    pub fixed_point: Probe,
    pub particles: Probe,
    pub agree: bool,
}

impl PhaseRow {
    pub fn probe(&self, method: Method) -> &Probe {
        match method {
            Method::BallScan => &self.ball_scan,
            Method::FixedPoint => &self.fixed_point,
            Method::Particles => &self.particles,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTable {
    pub rows: Vec<PhaseRow>,
}

impl PhaseTable {
    pub const HEADER: [&'static str; 9] =
        ["n", "c", "family", "coef", "analytic", "ball_scan", "fixed_point", "particles", "agree"];

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                r.c.to_string(),
                r.family.as_str().to_string(),
                r.coef.to_string(),
                r.analytic.as_str().to_string(),
                r.ball_scan.label().to_string(),
                r.fixed_point.label().to_string(),
                r.particles.label().to_string(),
                r.agree.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::Io(e.to_string()))?;
        Ok(())
    }
}

/// Verdict of a single method for one potential.
pub fn probe(space: &Space, h: &Potential, method: Method, opts: &PhaseOptions, seed: u64) -> Probe {
    let outcome = match method {
        Method::BallScan => divergence_scan(space, h, &opts.radii, opts.scan).map(|s| s.verdict.as_str().to_string()),
        Method::FixedPoint => initial_guess(space)
            .and_then(|rho| fixed_point(&rho, h, opts.steady))
            .map(|r| r.outcome.as_str().to_string()),
        Method::Particles => {
            let cfg = SimConfig { seed, ..opts.sim.clone() };
            run(&cfg, h, space).map(|r| r.verdict.as_str().to_string())
        }
    };
    match outcome {
        Ok(v) => Probe::Verdict(v),
        Err(e) => {
            log::warn!("{} failed: {e}", method.as_str());
            Probe::Failed(e.to_string())
        }
    }
}

fn row_seed(seed: u64, index: usize) -> u64 {
    stream(seed, index as u64, 0).next_u64()
}

/// Every probe agrees with the analytic phase, or says nothing.
fn agrees(analytic: Phase, probes: &[&Probe]) -> bool {
    analytic == Phase::Unknown || probes.iter().all(|p| matches!(p.phase(), Phase::Unknown) || p.phase() == analytic)
}

/// One row per `(space, coefficient)`, in input order. Rows run in parallel;
/// a failing method is recorded in its column and the sweep continues.
pub fn sweep(spaces: &[Space], family: FamilyKind, coefs: &[f64], opts: &PhaseOptions) -> Result<PhaseTable> {
    let jobs: Vec<(usize, &Space, f64)> = spaces
        .iter()
        .flat_map(|s| coefs.iter().map(move |&a| (s, a)))
        .enumerate()
        .map(|(i, (s, a))| (i, s, a))
        .collect();
    let rows = jobs
        .into_par_iter()
        .map(|(index, space, coef)| {
            let h = family.potential(space, coef)?;
            let analytic = classify_regime(&h, space.dim(), space.c_lower(), space.c_upper())?.tag;
            let run_method = |m: Method| {
                if opts.methods.contains(&m) {
                    probe(space, &h, m, opts, row_seed(opts.sim.seed, index))
                } else {
                    Probe::Skipped
                }
            };
            let ball_scan = run_method(Method::BallScan);
            let fixed_point = run_method(Method::FixedPoint);
            let particles = run_method(Method::Particles);
            let agree = agrees(Phase::of_regime(analytic), &[&ball_scan, &fixed_point, &particles]);
            Ok(PhaseRow {
                n: space.dim(),
                c: space.curvature(),
                family,
                coef,
                analytic,
                ball_scan,
                fixed_point,
                particles,
                agree,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseTable { rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdEstimate {
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
    pub lo_verdict: String,
    pub hi_verdict: String,
}

/// Bisects the coefficient between two verdicts of different phases until the
/// bracket is `BISECTION_STEPS` halvings narrower.
pub fn threshold_estimate(
    space: &Space,
    family: FamilyKind,
    method: Method,
    bracket: (f64, f64),
    opts: &PhaseOptions,
) -> Result<ThresholdEstimate> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) {
        return Err(Error::Bracket(format!("bracket [{lo}, {hi}] is empty")));
    }
    let label = |coef: f64| -> Result<String> {
        match probe(space, &family.potential(space, coef)?, method, opts, opts.sim.seed) {
            Probe::Verdict(v) => Ok(v),
            Probe::Failed(e) => Err(Error::Numerical(e)),
            Probe::Skipped => unreachable!(),
        }
    };
    let mut lo_verdict = label(lo)?;
    let mut hi_verdict = label(hi)?;
    let lo_phase = Phase::of_label(&lo_verdict);
    if lo_phase == Phase::of_label(&hi_verdict) {
        return Err(Error::Bracket(format!("both ends of [{lo}, {hi}] give {lo_verdict}")));
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let v = label(mid)?;
        if Phase::of_label(&v) == lo_phase {
            lo = mid;
            lo_verdict = v;
        } else {
            hi = mid;
            hi_verdict = v;
        }
    }
    Ok(ThresholdEstimate { estimate: 0.5 * (lo + hi), lo, hi, lo_verdict, hi_verdict })
}

/// `DivergenceVerdict` labels as a phase, for callers holding the enum.
pub fn scan_phase(v: DivergenceVerdict) -> Phase {
    Phase::of_label(v.as_str())
}

/// `SteadyOutcome` labels as a phase.
pub fn steady_phase(o: &SteadyOutcome) -> Phase {
    Phase::of_label(o.as_str())
}

/// `TrajectoryVerdict` labels as a phase.
pub fn particle_phase(v: TrajectoryVerdict) -> Phase {
    Phase::of_label(v.as_str())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h2() -> Space {
        Space::new(2, 1.0).unwrap()
    }

    fn scan_only() -> PhaseOptions {
        PhaseOptions { methods: vec![Method::BallScan], ..PhaseOptions::default() }
    }

    #[test]
    fn analytic_only_table() {
        let opts = PhaseOptions { methods: vec![], ..PhaseOptions::default() };
        let coefs: Vec<f64> = (1..=12).map(|k| 0.25 * k as f64).collect();
        let t = sweep(&[h2()], FamilyKind::Linear, &coefs, &opts).unwrap();
        assert_eq!(t.rows.len(), 12);
        for r in &t.rows {
            assert_eq!(r.ball_scan, Probe::Skipped);
            assert!(r.agree);
            let expect = if r.coef < 1.0 {
                RegimeTag::NonexistenceSpreading
            } else if r.coef > 2.0 {
                RegimeTag::ExistenceHomogeneous
            } else {
                RegimeTag::Undetermined
            };
            assert_eq!(r.analytic, expect, "A2 = {}", r.coef);
        }
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n,c,family,coef,analytic,ball_scan,fixed_point,particles,agree\n"));
        assert!(text.contains("2,1,linear,0.25,NonexistenceSpreading,-,-,-,true"));
    }

    #[test]
    fn log_family_blows_up_above_2n() {
        let coefs: Vec<f64> = (1..=6).map(|k| k as f64).collect();
        let t = sweep(&[h2()], FamilyKind::Log, &coefs, &scan_only()).unwrap();
        for r in &t.rows {
            let expect = if r.coef > 4.0 { Phase::BlowUp } else { Phase::Exists };
            if r.coef != 4.0 {
                assert_eq!(Phase::of_regime(r.analytic), expect);
            }
            assert_eq!(r.ball_scan.phase(), expect, "A1 = {}", r.coef);
            assert!(r.agree);
        }
    }

    #[test]
    fn log_threshold_by_ball_scan() {
        let est = threshold_estimate(&h2(), FamilyKind::Log, Method::BallScan, (2.0, 6.0), &scan_only()).unwrap();
        assert!((est.estimate - 4.0).abs() <= 0.25, "{est:?}");
        assert!(est.hi - est.lo <= 4.0 / 256.0 + 1e-12);
        assert_ne!(Phase::of_label(&est.lo_verdict), Phase::of_label(&est.hi_verdict));
    }

    #[test]
    fn degenerate_bracket_is_an_error() {
        let r = threshold_estimate(&h2(), FamilyKind::Log, Method::BallScan, (5.0, 6.0), &scan_only());
        assert!(matches!(r, Err(Error::Bracket(_))));
        let r = threshold_estimate(&h2(), FamilyKind::Log, Method::BallScan, (6.0, 5.0), &scan_only());
        assert!(matches!(r, Err(Error::Bracket(_))));
    }

    #[test]
    fn agreement_semantics() {
        let v = |s: &str| Probe::Verdict(s.to_string());
        assert!(agrees(Phase::Spreading, &[&v("SpreadDiverges"), &v("MassEscape"), &Probe::Skipped]));
        assert!(!agrees(Phase::Spreading, &[&v("SpreadDiverges"), &v("Converged")]));
        assert!(agrees(Phase::Unknown, &[&v("Collapse"), &v("Converged")]));
        assert!(agrees(Phase::Exists, &[&v("BoundedBelow"), &v("IterationLimit"), &Probe::Failed("x".into())]));
    }
}
