//! Interacting particles on `Hⁿ`: a geodesic Euler–Maruyama discretization of
//!
//! ```text
//! ∂ₜρ = Δρ + ∇·(ρ ∇(W*ρ)),    W(x,y) = h(d(x,y))
//! ```
//!
//! Each step moves particle `i` along
//!
//! ```text
//! Xᵢ ← exp_{Xᵢ}(dt·vᵢ + √(2dt)·ξᵢ),    vᵢ = (1/N) Σ_{j≠i} h′(dᵢⱼ) log_{Xᵢ}(Xⱼ)/dᵢⱼ
//! ```
//!
//! with `ξᵢ` standard Gaussian in `T_{Xᵢ}`. The noise for particle `i` at step
//! `k` comes from its own generator seeded by `(seed, i, k)`, so trajectories
//! do not depend on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::density::RadialDensity;
use crate::error::{Error, Result};
use crate::geometry::{dist_raw, exp_raw, gaussian_tangent_raw, log_raw, Isometry, Point, Space, Tangent};
use crate::potentials::Potential;
use crate::quadrature::ls_slope;

/// Pairs closer than this exert no force.
pub const COINCIDENCE: f64 = 1e-12;

/// Largest radius, in units of `1/√c`, at which hyperboloid coordinates still
/// resolve nearby pairs: a point at radius `θ` has `x₀ ≈ e^{√c θ}/2` and pair
/// distances lose about `ε x₀²` to cancellation.
pub const RADIUS_LIMIT: f64 = 14.0;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// Uniform sample of the geodesic ball of this radius about the pole.
    Ball {
        radius: f64,
    },
    Points(Vec<Point>),
}

/// Thresholds of the trajectory classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerdictOptions {
    /// Spreading when the mean pairwise distance grows faster than this times `√c`.
    pub spread_slope: f64,
    /// Collapse when the dispersion falls below this fraction of its initial value.
    pub collapse_ratio: f64,
    /// Collapse when the 10th percentile of nearest-neighbour distances falls below this
    /// while the dispersion trends down.
    pub collapse_distance: f64,
    /// Equilibrated requires the final dispersion to stay below this multiple of its
    /// running median over the window.
    pub bounded_factor: f64,
}

impl Default for VerdictOptions {
    fn default() -> Self {
        Self { spread_slope: 0.02, collapse_ratio: 0.01, collapse_distance: 1e-3, bounded_factor: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub particles: usize,
    pub dt: f64,
    pub steps: usize,
    pub diffusion: bool,
    pub seed: u64,
    pub initial: InitialCondition,
    /// Observables are recorded every this many steps.
    pub observe_every: usize,
    /// Move the Karcher mean to the pole at each observation.
    pub recenter: bool,
    /// Stop early, as Spreading, once the mean pairwise distance exceeds this
    /// multiple of `1/√c` or a particle passes `RADIUS_LIMIT`.
    pub escape_scale: f64,
    pub verdict: VerdictOptions,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            particles: 200,
            dt: 0.01,
            steps: 10_000,
            diffusion: true,
            seed: 1,
            initial: InitialCondition::Ball { radius: 1.0 },
            observe_every: 10,
            recenter: true,
            escape_scale: 10.0,
            verdict: VerdictOptions::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.particles < 2 {
            return Err(Error::Config("simulation needs at least 2 particles".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.observe_every == 0 {
            return Err(Error::Config("observe_every must be positive".into()));
        }
        if let InitialCondition::Ball { radius } = self.initial {
            if !(radius > 0.0) {
                return Err(Error::Config(format!("initial ball radius must be positive, got {radius}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleState {
    pub points: Vec<Point>,
    pub time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observation {
    pub t: f64,
    pub mean_dist: f64,
    /// Mean squared distance to the Karcher mean.
    pub dispersion: f64,
    pub min_dist: f64,
    /// 10th percentile of nearest-neighbour distances.
    pub nn_p10: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TrajectoryVerdict {
    Spreading,
    Collapse,
    Equilibrated,
    Undetermined,
}

impl TrajectoryVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrajectoryVerdict::Spreading => "Spreading",
            TrajectoryVerdict::Collapse => "Collapse",
            TrajectoryVerdict::Equilibrated => "Equilibrated",
            TrajectoryVerdict::Undetermined => "Undetermined",
        }
    }
}

impl std::fmt::Display for TrajectoryVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryReport {
    pub observations: Vec<Observation>,
    pub verdict: TrajectoryVerdict,
    /// Trend of the mean pairwise distance over the final half, per unit time.
    pub distance_slope: f64,
    /// Trend of the dispersion over the final half, per unit time.
    pub dispersion_slope: f64,
    /// Run stopped early because the cloud left the escape radius.
    pub escaped: bool,
    /// Pairs skipped because `h′` was infinite at coincidence.
    pub singular_pairs: usize,
    pub final_state: ParticleState,
}

/// `splitmix64` finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for particle `index` at step `step`.
pub fn stream(seed: u64, index: u64, step: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(mix(mix(seed) ^ index) ^ step))
}

fn max_radius(space: &Space, state: &ParticleState) -> f64 {
    state.points.iter().map(|p| radius_of(space, p)).fold(0.0, f64::max)
}

/// Geodesic distance from the pole.
pub fn radius_of(space: &Space, p: &Point) -> f64 {
    let s: f64 = p.spatial().iter().map(|v| v * v).sum::<f64>().sqrt();
    (space.sqrt_c() * s).asinh() / space.sqrt_c()
}

fn random_direction<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        if v.iter().map(|x| x * x).sum::<f64>() > 1e-24 {
            return v;
        }
    }
}

/// `count` independent draws from a radial density: a cell by mass, a radius
/// inside it by rejection against the sphere area, a uniform direction.
pub fn sample_radial<R: Rng + ?Sized>(rho: &RadialDensity, count: usize, rng: &mut R) -> Vec<Point> {
    let space = rho.space();
    let masses = rho.cell_masses();
    let mut cumulative = Vec::with_capacity(masses.len());
    let mut acc = 0.0;
    for m in &masses {
        acc += m;
        cumulative.push(acc);
    }
    let edges = rho.edges();
    (0..count)
        .map(|_| {
            let u = rng.random::<f64>() * acc;
            let i = cumulative.partition_point(|&c| c < u).min(masses.len() - 1);
            let (lo, hi) = (edges[i], edges[i + 1]);
            let cap = space.sphere_area(hi);
            let t = loop {
                let t = lo + (hi - lo) * rng.random::<f64>();
                if rng.random::<f64>() * cap <= space.sphere_area(t) {
                    break t;
                }
            };
            space.polar_point(t, &random_direction(space.dim(), rng))
        })
        .collect()
}

impl ParticleState {
    pub fn new(points: Vec<Point>) -> Self {
        Self { points, time: 0.0 }
    }

    /// Initial state from the configuration; ball samples use a generator
    /// derived from the seed alone.
    pub fn initial(space: &Space, config: &SimConfig) -> Result<Self> {
        match &config.initial {
            InitialCondition::Ball { radius } => {
                let rho = RadialDensity::uniform_ball(space, *radius)?;
                let mut rng = stream(config.seed, u64::MAX, u64::MAX);
                Ok(Self::new(sample_radial(&rho, config.particles, &mut rng)))
            }
            InitialCondition::Points(points) => {
                if points.len() < 2 {
                    return Err(Error::Config("initial cloud needs at least 2 points".into()));
                }
                Ok(Self::new(points.clone()))
            }
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Full symmetric matrix of pairwise distances, row-major.
    pub fn distance_matrix(&self, space: &Space) -> Result<Vec<f64>> {
        let n = self.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            Ok(0.0)
                        } else {
                            dist_raw(space.curvature(), &self.points[i].coords, &self.points[j].coords)
                        }
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(rows.into_iter().flatten().collect())
    }

    /// `(1/2N²) Σᵢ Σⱼ h(dᵢⱼ)`, the empirical interaction energy.
    pub fn interaction_sum(&self, space: &Space, h: &Potential) -> Result<f64> {
        let n = self.len();
        let d = self.distance_matrix(space)?;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    acc += h.eval(d[i * n + j]);
                }
            }
        }
        Ok(acc / (2.0 * (n * n) as f64))
    }
}

/// Drift of every particle and the number of pairs skipped for an infinite
/// `h′`.
pub fn drift(space: &Space, state: &ParticleState, h: &Potential) -> Result<(Vec<Tangent>, usize)> {
    let (raw, singular) = drift_raw(space, state, h)?;
    let tangents = raw.into_iter().zip(&state.points).map(|(v, p)| space.tangent(p, v)).collect();
    Ok((tangents, singular))
}

fn drift_raw(space: &Space, state: &ParticleState, h: &Potential) -> Result<(Vec<Vec<f64>>, usize)> {
    let n = state.len();
    let dim = space.dim() + 1;
    let inv_n = 1.0 / n as f64;
    let rows: Vec<(Vec<f64>, usize)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = &state.points[i].coords;
            let mut v = vec![0.0; dim];
            let mut tmp = vec![0.0; dim];
            let mut singular = 0;
            for (j, pj) in state.points.iter().enumerate() {
                if i == j {
                    continue;
                }
                let d = dist_raw(space.curvature(), xi, &pj.coords)?;
                if d < COINCIDENCE {
                    continue;
                }
                let slope = h.deriv(d);
                if !slope.is_finite() {
                    singular += 1;
                    continue;
                }
                if slope == 0.0 {
                    continue;
                }
                log_raw(space, xi, &pj.coords, d, &mut tmp);
                let w = inv_n * slope / d;
                for k in 0..dim {
                    v[k] += w * tmp[k];
                }
            }
            Ok((v, singular))
        })
        .collect::<Result<Vec<_>>>()?;
    let singular = rows.iter().map(|r| r.1).sum::<usize>() / 2;
    Ok((rows.into_iter().map(|r| r.0).collect(), singular))
}

/// One Euler–Maruyama step; `step_index` selects the noise streams.
pub fn step(
    space: &Space,
    state: &ParticleState,
    h: &Potential,
    dt: f64,
    diffusion: bool,
    seed: u64,
    step_index: u64,
) -> Result<(ParticleState, usize)> {
    let (v, singular) = drift_raw(space, state, h)?;
    let noise = (2.0 * dt).sqrt();
    let points: Vec<Point> = state
        .points
        .par_iter()
        .zip(v.par_iter())
        .enumerate()
        .map(|(i, (p, vi))| {
            let dim = p.coords.len();
            let mut inc: Vec<f64> = vi.iter().map(|x| dt * x).collect();
            if diffusion {
                let mut rng = stream(seed, i as u64, step_index);
                let mut xi = vec![0.0; dim];
                gaussian_tangent_raw(space, &p.coords, &mut rng, noise, &mut xi);
                for k in 0..dim {
                    inc[k] += xi[k];
                }
            }
            let mut out = vec![0.0; dim];
            exp_raw(space, &p.coords, &inc, &mut out);
            Point { coords: out }
        })
        .collect();
    for (i, p) in points.iter().enumerate() {
        if p.coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical(format!(
                "particle {i} left the sheet at t = {}: coords {:?}",
                state.time + dt,
                p.coords
            )));
        }
    }
    Ok((ParticleState { points, time: state.time + dt }, singular))
}

/// Applies the boost taking the Karcher mean to the pole.
pub fn recenter(space: &Space, state: &ParticleState) -> Result<ParticleState> {
    let mean = space.karcher_mean_uniform(&state.points)?;
    let boost = Isometry::boost_to_pole(space, &mean);
    Ok(ParticleState { points: state.points.iter().map(|p| boost.apply(space, p)).collect(), time: state.time })
}

/// Histogram of geodesic radii on `edges`, divided by shell volumes.
pub fn empirical_radial_profile(space: &Space, state: &ParticleState, edges: &[f64]) -> Result<RadialDensity> {
    let cells = edges.len().saturating_sub(1);
    let mut counts = vec![0.0; cells];
    let mut kept = 0usize;
    for p in &state.points {
        let t = radius_of(space, p);
        let i = edges.partition_point(|&e| e <= t);
        if i >= 1 && i <= cells {
            counts[i - 1] += 1.0;
            kept += 1;
        }
    }
    if kept == 0 {
        return Err(Error::DegenerateInput("no particle falls inside the profile grid".into()));
    }
    let values = counts.iter().zip(edges.windows(2)).map(|(c, w)| c / space.shell_volume(w[0], w[1])).collect();
    Ok(RadialDensity::normalized(space, edges.to_vec(), values)?.0)
}

/// Mean, minimum and nearest-neighbour 10th percentile of pairwise distances,
/// plus the dispersion about the Karcher mean.
pub fn observe(space: &Space, state: &ParticleState) -> Result<Observation> {
    let n = state.len();
    let d = state.distance_matrix(space)?;
    let mut sum = 0.0;
    let mut min = f64::INFINITY;
    let mut nearest = vec![f64::INFINITY; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let v = d[i * n + j];
                nearest[i] = nearest[i].min(v);
                if j > i {
                    sum += v;
                    min = min.min(v);
                }
            }
        }
    }
    nearest.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let p10 = nearest[(n - 1) / 10];
    let mean = space.karcher_mean_uniform(&state.points)?;
    let mut disp = 0.0;
    for p in &state.points {
        let r = space.distance(&mean, p)?;
        disp += r * r;
    }
    Ok(Observation {
        t: state.time,
        mean_dist: sum / (n * (n - 1) / 2) as f64,
        dispersion: disp / n as f64,
        min_dist: min,
        nn_p10: p10,
    })
}

fn classify(space: &Space, obs: &[Observation], escaped: bool, opts: &VerdictOptions) -> (TrajectoryVerdict, f64, f64) {
    let half = &obs[obs.len() / 2..];
    let ts: Vec<f64> = half.iter().map(|o| o.t).collect();
    let dist_slope = ls_slope(&ts, &half.iter().map(|o| o.mean_dist).collect::<Vec<_>>());
    let disp_slope = ls_slope(&ts, &half.iter().map(|o| o.dispersion).collect::<Vec<_>>());
    if escaped {
        return (TrajectoryVerdict::Spreading, dist_slope, disp_slope);
    }
    let first = obs[0];
    let last = obs[obs.len() - 1];
    if dist_slope > opts.spread_slope * space.sqrt_c() {
        return (TrajectoryVerdict::Spreading, dist_slope, disp_slope);
    }
    let shrunk = last.dispersion < opts.collapse_ratio * first.dispersion;
    let touching = last.nn_p10 < opts.collapse_distance && disp_slope < 0.0;
    if shrunk || touching {
        return (TrajectoryVerdict::Collapse, dist_slope, disp_slope);
    }
    let mut window: Vec<f64> = half.iter().map(|o| o.dispersion).collect();
    window.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = window[window.len() / 2];
    let bounded = last.dispersion.is_finite() && last.dispersion <= opts.bounded_factor * median;
    if dist_slope.abs() <= opts.spread_slope * space.sqrt_c() && bounded {
        return (TrajectoryVerdict::Equilibrated, dist_slope, disp_slope);
    }
    (TrajectoryVerdict::Undetermined, dist_slope, disp_slope)
}

/// Runs the flow from the configured initial condition and classifies the
/// trajectory.
pub fn run(config: &SimConfig, h: &Potential, space: &Space) -> Result<TrajectoryReport> {
    config.validate()?;
    let state = ParticleState::initial(space, config)?;
    run_from(config, h, space, state)
}

pub fn run_from(
    config: &SimConfig,
    h: &Potential,
    space: &Space,
    mut state: ParticleState,
) -> Result<TrajectoryReport> {
    config.validate()?;
    if config.recenter {
        state = recenter(space, &state)?;
    }
    let first = observe(space, &state)?;
    if config.dt * h.deriv(first.min_dist.max(COINCIDENCE)).abs() > 0.1 {
        log::warn!(
            "stability guard: dt·h'(d_min) = {:.3e} exceeds 0.1",
            config.dt * h.deriv(first.min_dist.max(COINCIDENCE))
        );
    }
    let escape = config.escape_scale / space.sqrt_c();
    let radius_limit = RADIUS_LIMIT / space.sqrt_c();
    let mut observations = vec![first];
    let mut singular_pairs = 0;
    let mut escaped = false;
    for k in 0..config.steps {
        let (next, singular) = step(space, &state, h, config.dt, config.diffusion, config.seed, k as u64)?;
        state = next;
        singular_pairs += singular;
        if (k + 1) % config.observe_every == 0 || k + 1 == config.steps {
            if config.recenter {
                state = recenter(space, &state)?;
            }
            let o = observe(space, &state)?;
            observations.push(o);
            if o.mean_dist > escape || max_radius(space, &state) > radius_limit {
                escaped = true;
                break;
            }
        }
    }
    if singular_pairs > 0 {
        log::warn!("{singular_pairs} coincident pairs with infinite h' were skipped");
    }
    let (verdict, distance_slope, dispersion_slope) = classify(space, &observations, escaped, &config.verdict);
    Ok(TrajectoryReport {
        observations,
        verdict,
        distance_slope,
        dispersion_slope,
        escaped,
        singular_pairs,
        final_state: state,
    })
}
