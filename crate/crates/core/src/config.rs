//! Experiment configuration, read from TOML with unknown keys rejected.
//!
//! ```text
//! seed = 1
//! out = "out"
//!
//! [space]
//! n = 2
//! c = 1.0
//!
//! [potential]
//! family = "linear"
//! slope = 3.0
//! ```
//!
//! Every section has defaults, so an empty file is a valid configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::density::RadialDensity;
use crate::energy::{Rules, ScanOptions};
use crate::error::{Error, Result};
use crate::geometry::{Point, Space};
use crate::particles::{InitialCondition, SimConfig, VerdictOptions};
use crate::phase::{FamilyKind, Method, PhaseOptions};
use crate::potentials::{Descriptors, Envelope, Growth, Potential, Singularity};
use crate::quadrature::log_space;
use crate::steady::SteadyOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub seed: u64,
    pub out: PathBuf,
    pub space: SpaceSpec,
    pub potential: PotentialSpec,
    pub density: DensitySpec,
    pub scan: ScanSpec,
    pub hls: HlsSpec,
    pub bounds: BoundsSpec,
    pub simulate: SimulateSpec,
    pub steady: SteadySpec,
    pub phase: PhaseSpec,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 1,
            out: PathBuf::from("out"),
            space: SpaceSpec::default(),
            potential: PotentialSpec::Linear { slope: 3.0 },
            density: DensitySpec::UniformBall { radius: 1.0, cells: None },
            scan: ScanSpec::default(),
            hls: HlsSpec::default(),
            bounds: BoundsSpec::default(),
            simulate: SimulateSpec::default(),
            steady: SteadySpec::default(),
            phase: PhaseSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpaceSpec {
    pub n: usize,
    pub c: f64,
    /// Comparison band `[c_M, c_m]`.
    pub band: Option<[f64; 2]>,
}

impl Default for SpaceSpec {
    fn default() -> Self {
        Self { n: 2, c: 1.0, band: None }
    }
}

impl SpaceSpec {
    pub fn build(&self) -> Result<Space> {
        let s = Space::new(self.n, self.c)?;
        match self.band {
            Some([lo, hi]) => s.with_band(lo, hi),
            None => Ok(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Zero,
    Constant {
        value: f64,
    },
    PowerLaw {
        coeff: f64,
        alpha: f64,
    },
    Log {
        a1: f64,
    },
    LogLinear {
        a1: f64,
        slope: f64,
    },
    Linear {
        slope: f64,
    },
    /// `A₂·√c·θ`.
    LinearA2 {
        a2: f64,
    },
    Exponential {
        coeff: f64,
        rate: f64,
    },
    Tabulated {
        theta: Vec<f64>,
        values: Vec<f64>,
        /// `bounded`, `log:<A₁>` or `power:<k>`.
        singularity: String,
        /// `sublinear`, `linear:<slope>` or `superlinear:<coeff>:<rate>` (exponential envelope).
        growth: String,
    },
}

fn parse_singularity(s: &str) -> Result<Singularity> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |i: usize| -> Result<f64> {
        parts
            .get(i)
            .ok_or_else(|| Error::Config(format!("singularity `{s}` is missing a number")))?
            .parse::<f64>()
            .map_err(|e| Error::Config(format!("singularity `{s}`: {e}")))
    };
    match parts[0] {
        "bounded" => Ok(Singularity::Bounded),
        "log" => Ok(Singularity::Log { a1: num(1)? }),
        "power" => Ok(Singularity::Power { k: num(1)? }),
        other => Err(Error::Config(format!("unknown singularity `{other}`"))),
    }
}

fn parse_growth(s: &str) -> Result<Growth> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |i: usize| -> Result<f64> {
        parts
            .get(i)
            .ok_or_else(|| Error::Config(format!("growth `{s}` is missing a number")))?
            .parse::<f64>()
            .map_err(|e| Error::Config(format!("growth `{s}`: {e}")))
    };
    match parts[0] {
        "sublinear" => Ok(Growth::Sublinear),
        "linear" => Ok(Growth::Linear { slope: num(1)? }),
        "superlinear" => Ok(Growth::Superlinear { envelope: Envelope::Exponential { coeff: num(1)?, rate: num(2)? } }),
        other => Err(Error::Config(format!("unknown growth `{other}`"))),
    }
}

impl PotentialSpec {
    pub fn build(&self, space: &Space) -> Result<Potential> {
        match self {
            PotentialSpec::Zero => Ok(Potential::zero()),
            PotentialSpec::Constant { value } => Ok(Potential::constant(*value)),
            PotentialSpec::PowerLaw { coeff, alpha } => Potential::power_law(*coeff, *alpha),
            PotentialSpec::Log { a1 } => Potential::log(*a1),
            PotentialSpec::LogLinear { a1, slope } => Potential::log_linear(*a1, *slope),
            PotentialSpec::Linear { slope } => Potential::linear(*slope),
            PotentialSpec::LinearA2 { a2 } => Potential::linear_a2(*a2, space.curvature()),
            PotentialSpec::Exponential { coeff, rate } => Potential::exponential(*coeff, *rate),
            PotentialSpec::Tabulated { theta, values, singularity, growth } => Potential::tabulated(
                theta.clone(),
                values.clone(),
                Descriptors { singularity: Some(parse_singularity(singularity)?), growth: Some(parse_growth(growth)?) },
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    UniformBall {
        radius: f64,
        cells: Option<usize>,
    },
    GaussianLike {
        sigma: f64,
        cells: Option<usize>,
    },
    /// A `theta,rho` CSV, relative to the working directory.
    File {
        path: PathBuf,
    },
}

impl DensitySpec {
    pub fn build(&self, space: &Space) -> Result<RadialDensity> {
        match self {
            DensitySpec::UniformBall { radius, cells } => {
                RadialDensity::uniform_ball_with(space, *radius, cells.unwrap_or(crate::density::BALL_CELLS))
            }
            DensitySpec::GaussianLike { sigma, cells } => {
                RadialDensity::gaussian_like_with(space, *sigma, cells.unwrap_or(crate::density::GAUSSIAN_CELLS))
            }
            DensitySpec::File { path } => {
                let f = std::fs::File::open(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                let (rho, factor) = RadialDensity::read_csv(space, f)?;
                if (factor - 1.0).abs() > crate::density::MASS_TOL {
                    log::warn!("density file renormalized by factor {factor}");
                }
                Ok(rho)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub count: usize,
    pub threshold: f64,
    pub bound_eps: f64,
}

impl Default for ScanSpec {
    fn default() -> Self {
        Self { r_min: 1e-4, r_max: 50.0, count: 25, threshold: 0.1, bound_eps: 0.5 }
    }
}

impl ScanSpec {
    pub fn radii(&self) -> Vec<f64> {
        log_space(self.r_min, self.r_max, self.count)
    }

    pub fn options(&self) -> ScanOptions {
        ScanOptions { threshold: self.threshold, bound_eps: self.bound_eps }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HlsSpec {
    /// User-supplied `C₀`; estimated from Gaussians when absent.
    pub c0: Option<f64>,
    pub tol: f64,
}

impl Default for HlsSpec {
    fn default() -> Self {
        Self { c0: None, tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsSpec {
    /// `ε` hint for the small-distance constants; the theory value is used when absent.
    pub eps: Option<f64>,
    pub tol: f64,
}

impl Default for BoundsSpec {
    fn default() -> Self {
        Self { eps: None, tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSpec {
    pub particles: usize,
    pub dt: f64,
    pub steps: usize,
    pub diffusion: bool,
    /// Initial uniform ball radius; ignored when `init_file` is set.
    pub init_radius: f64,
    /// CSV of ambient coordinates `x0,x1,…`.
    pub init_file: Option<PathBuf>,
    pub observe_every: usize,
    pub recenter: bool,
    pub escape_scale: f64,
    pub spread_slope: f64,
    pub collapse_ratio: f64,
    pub collapse_distance: f64,
    pub bounded_factor: f64,
}

impl Default for SimulateSpec {
    fn default() -> Self {
        let s = SimConfig::default();
        let v = VerdictOptions::default();
        Self {
            particles: s.particles,
            dt: s.dt,
            steps: s.steps,
            diffusion: s.diffusion,
            init_radius: 1.0,
            init_file: None,
            observe_every: s.observe_every,
            recenter: s.recenter,
            escape_scale: s.escape_scale,
            spread_slope: v.spread_slope,
            collapse_ratio: v.collapse_ratio,
            collapse_distance: v.collapse_distance,
            bounded_factor: v.bounded_factor,
        }
    }
}

impl SimulateSpec {
    pub fn build(&self, space: &Space, seed: u64) -> Result<SimConfig> {
        let initial = match &self.init_file {
            Some(path) => InitialCondition::Points(read_points(space, path)?),
            None => InitialCondition::Ball { radius: self.init_radius },
        };
        let cfg = SimConfig {
            particles: self.particles,
            dt: self.dt,
            steps: self.steps,
            diffusion: self.diffusion,
            seed,
            initial,
            observe_every: self.observe_every,
            recenter: self.recenter,
            escape_scale: self.escape_scale,
            verdict: VerdictOptions {
                spread_slope: self.spread_slope,
                collapse_ratio: self.collapse_ratio,
                collapse_distance: self.collapse_distance,
                bounded_factor: self.bounded_factor,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Reads a point cloud written by `write_points`.
pub fn read_points(space: &Space, path: &Path) -> Result<Vec<Point>> {
    let f = std::fs::File::open(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut r = csv::Reader::from_reader(f);
    let width = r.headers()?.len();
    if width != space.dim() + 1 {
        return Err(Error::Config(format!(
            "{}: {width} columns, expected {} ambient coordinates",
            path.display(),
            space.dim() + 1
        )));
    }
    let mut points = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let coords = rec
            .iter()
            .map(|v| {
                v.trim().parse::<f64>().map_err(|e| Error::Config(format!("{} row {}: {e}", path.display(), line + 2)))
            })
            .collect::<Result<Vec<f64>>>()?;
        points.push(space.point(coords)?);
    }
    Ok(points)
}

/// Writes ambient coordinates with header `x0,x1,…`.
pub fn write_points<W: std::io::Write>(points: &[Point], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let dim = points.first().map_or(0, |p| p.coords().len());
    w.write_record((0..dim).map(|i| format!("x{i}")))?;
    for p in points {
        w.write_record(p.coords().iter().map(|v| format!("{v:.17e}")))?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SteadySpec {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub escape_patience: usize,
    pub max_expansions: usize,
    pub zooms: usize,
    /// Working grid; the default is 512 cells on `[0, 20/√c]`.
    pub cells: usize,
    pub radius_scale: f64,
}

impl Default for SteadySpec {
    fn default() -> Self {
        let s = SteadyOptions::default();
        Self {
            damping: s.damping,
            tol: s.tol,
            max_iter: s.max_iter,
            escape_patience: s.escape_patience,
            max_expansions: s.max_expansions,
            zooms: s.zooms,
            cells: crate::density::DEFAULT_CELLS,
            radius_scale: crate::density::DEFAULT_RADIUS_SCALE,
        }
    }
}

impl SteadySpec {
    pub fn options(&self) -> Result<SteadyOptions> {
        let opts = SteadyOptions {
            damping: self.damping,
            tol: self.tol,
            max_iter: self.max_iter,
            escape_patience: self.escape_patience,
            max_expansions: self.max_expansions,
            zooms: self.zooms,
            rules: Rules::default(),
            ..SteadyOptions::default()
        };
        opts.validate()?;
        if self.cells < 8 || !(self.radius_scale > 0.0) {
            return Err(Error::Config("steady grid needs at least 8 cells and a positive radius".into()));
        }
        Ok(opts)
    }

    /// Gaussian start on the configured grid.
    pub fn initial(&self, space: &Space) -> Result<RadialDensity> {
        let edges = crate::quadrature::lin_edges(0.0, self.radius_scale / space.sqrt_c(), self.cells);
        let values = edges.windows(2).map(|w| (-0.125 * (w[0] + w[1]).powi(2)).exp()).collect();
        Ok(RadialDensity::normalized(space, edges, values)?.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseSpec {
    pub family: String,
    pub coefs: Vec<f64>,
    pub methods: Vec<String>,
    pub ns: Vec<usize>,
    pub cs: Vec<f64>,
    /// Particle budget per row; the remaining particle settings come from `[simulate]`.
    pub particles: usize,
    pub dt: f64,
    pub steps: usize,
}

impl Default for PhaseSpec {
    fn default() -> Self {
        Self {
            family: "linear".into(),
            coefs: (1..=12).map(|k| 0.25 * k as f64).collect(),
            methods: vec!["ball_scan".into(), "fixed_point".into(), "particles".into()],
            ns: vec![2],
            cs: vec![1.0],
            particles: 400,
            dt: 0.02,
            steps: 1000,
        }
    }
}

impl PhaseSpec {
    pub fn family(&self) -> Result<FamilyKind> {
        self.family.parse()
    }

    pub fn spaces(&self) -> Result<Vec<Space>> {
        let mut out = Vec::new();
        for &n in &self.ns {
            for &c in &self.cs {
                out.push(Space::new(n, c)?);
            }
        }
        if out.is_empty() {
            return Err(Error::Config("phase sweep needs at least one n and one c".into()));
        }
        Ok(out)
    }

    pub fn options(&self, cfg: &Config) -> Result<PhaseOptions> {
        let methods = self.methods.iter().map(|m| m.parse::<Method>()).collect::<Result<Vec<_>>>()?;
        let mut sim = cfg.simulate.build(&Space::new(2, 1.0)?, cfg.seed)?;
        sim.particles = self.particles;
        sim.dt = self.dt;
        sim.steps = self.steps;
        sim.initial = InitialCondition::Ball { radius: cfg.simulate.init_radius };
        sim.validate()?;
        Ok(PhaseOptions {
            methods,
            radii: cfg.scan.radii(),
            scan: cfg.scan.options(),
            steady: cfg.steady.options()?,
            sim,
        })
    }
}

impl Config {
    /// Parses and validates; nothing is computed.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let space = self.space.build()?;
        self.potential.build(&space)?;
        if let DensitySpec::UniformBall { radius, .. } = self.density {
            if !(radius > 0.0) {
                return Err(Error::Config(format!("density.radius must be positive, got {radius}")));
            }
        }
        if let DensitySpec::GaussianLike { sigma, .. } = self.density {
            if !(sigma > 0.0) {
                return Err(Error::Config(format!("density.sigma must be positive, got {sigma}")));
            }
        }
        if !(self.scan.r_min > 0.0 && self.scan.r_max > self.scan.r_min) || self.scan.count < 3 {
            return Err(Error::Config("scan needs 0 < r_min < r_max and count >= 3".into()));
        }
        if !(self.scan.bound_eps > 0.0 && self.scan.bound_eps < 1.0) {
            return Err(Error::Config(format!("scan.bound_eps must lie in (0, 1), got {}", self.scan.bound_eps)));
        }
        if self.simulate.particles < 2 || !(self.simulate.dt > 0.0) || self.simulate.observe_every == 0 {
            return Err(Error::Config("simulate needs particles >= 2, dt > 0 and observe_every >= 1".into()));
        }
        self.steady.options()?;
        self.phase.family()?;
        self.phase.spaces()?;
        for m in &self.phase.methods {
            m.parse::<Method>()?;
        }
        Ok(())
    }
}
