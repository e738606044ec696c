//! The free energy of a radial density,
//!
//! ```text
//! E[ρ] = ∫ ρ log ρ + ½ ∬ h(d(x,y)) ρ(x) ρ(y) dx dy,
//! ```
//!
//! the trial-family upper bound for uniform balls, the divergence scan over
//! ball radii, and the lower-bound inequalities checked on radial densities.

pub mod engine;

use std::f64::consts::SQRT_2;

use serde::Serialize;

use crate::density::RadialDensity;
use crate::error::{Error, Result};
use crate::geometry::Space;
use crate::potentials::{
    beta_eps, grid_infimum, LowerBoundConstants, Potential, Singularity, SCAN_POINTS, SCAN_THETA_MAX, SCAN_THETA_MIN,
};
use crate::quadrature::{adaptive_integrate, log_sinhc, ls_slope, unit_ball_volume, unit_sphere_area};

pub use engine::{KernelMatrix, Metric, Rules};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    pub entropy: f64,
    pub interaction: f64,
    pub total: f64,
    /// Difference against the same evaluation with coarser rules.
    pub quad_error: f64,
}

/// Kernel matrix of `f` on the grid of `rho`.
pub fn kernel_matrix<F>(rho: &RadialDensity, f: &F, rules: Rules) -> KernelMatrix
where
    F: Fn(f64) -> f64 + Sync + ?Sized,
{
    let space = rho.space();
    KernelMatrix::build(Metric::Hyperbolic { c: space.curvature() }, space.dim(), rho.edges(), f, rules)
}

/// `∬ f(d(x,y)) ρ(x) ρ(y)`.
pub fn pair_integral<F>(rho: &RadialDensity, f: &F, rules: Rules) -> f64
where
    F: Fn(f64) -> f64 + Sync + ?Sized,
{
    kernel_matrix(rho, f, rules).pair_sum(&rho.cell_masses())
}

fn check_integrable(rho: &RadialDensity, h: &Potential) -> Result<()> {
    if h.is_nonintegrable(rho.space().dim()) {
        return Err(Error::Divergent(format!(
            "singularity {:?} is not integrable in dimension {}",
            h.descriptors().singularity,
            rho.space().dim()
        )));
    }
    Ok(())
}

/// `½ ∬ h(d) ρρ` with the default rules.
pub fn interaction_energy(rho: &RadialDensity, h: &Potential) -> Result<f64> {
    interaction_energy_with(rho, h, Rules::default())
}

pub fn interaction_energy_with(rho: &RadialDensity, h: &Potential, rules: Rules) -> Result<f64> {
    check_integrable(rho, h)?;
    Ok(0.5 * pair_integral(rho, &|d| h.eval(d), rules))
}

/// Entropy plus interaction, with a quadrature error estimate.
pub fn total_energy(rho: &RadialDensity, h: &Potential) -> Result<EnergyReport> {
    total_energy_with(rho, h, Rules::default())
}

pub fn total_energy_with(rho: &RadialDensity, h: &Potential, rules: Rules) -> Result<EnergyReport> {
    let interaction = interaction_energy_with(rho, h, rules)?;
    let coarse = interaction_energy_with(rho, h, rules.coarse())?;
    let entropy = rho.entropy();
    Ok(EnergyReport { entropy, interaction, total: entropy + interaction, quad_error: (interaction - coarse).abs() })
}

/// Uniform-ball energy without the error estimate; used by scans.
pub fn ball_energy(space: &Space, h: &Potential, radius: f64) -> Result<(f64, f64)> {
    let rho = RadialDensity::uniform_ball(space, radius)?;
    let interaction = interaction_energy(&rho, h)?;
    Ok((rho.entropy(), interaction))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBoundReport {
    pub radius: f64,
    pub eps: f64,
    /// `√c_M (n−1)(1−ε)`.
    pub a: f64,
    pub beta_eps: f64,
    pub p_a: f64,
    pub bound: f64,
    /// Computed `E[ρ_R]`.
    pub energy: f64,
}

/// `p_a(R) = e^{−aR} ∫₀^R θ^{n−1} e^{aθ} dθ`.
pub fn p_a(n: usize, a: f64, radius: f64) -> f64 {
    adaptive_integrate(|t| t.powi(n as i32 - 1) * (-a * (radius - t)).exp(), 0.0, radius, 1e-12)
}

/// Upper bound on `E[ρ_R]` valid on any manifold with curvature `≤ −c_M`,
/// where `c_M` is the upper end of the space's curvature band (or its
/// curvature). The energy itself is evaluated on the space.
///
/// ```text
/// c_M > 0:  −log(nω β_ε^{n−1}) − aR − log p_a(R) + h(2R)/2
/// c_M = 0:  −log ω − n log R + h(2R)/2
/// ```
pub fn ball_energy_upper_bound(space: &Space, h: &Potential, radius: f64, eps: f64) -> Result<EnergyBoundReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !(radius > 0.0) {
        return Err(Error::Config(format!("ball radius must be positive, got {radius}")));
    }
    let n = space.dim();
    let nf = n as f64;
    let c_big_m = space.c_upper();
    let interaction_bound = 0.5 * h.eval(2.0 * radius);
    let (a, beta, pa, bound) = if c_big_m > 0.0 {
        let a = c_big_m.sqrt() * (nf - 1.0) * (1.0 - eps);
        let beta = beta_eps(eps)?;
        let pa = p_a(n, a, radius);
        let bound = -(unit_sphere_area(n) * beta.powi(n as i32 - 1)).ln() - a * radius - pa.ln() + interaction_bound;
        (a, beta, pa, bound)
    } else {
        let bound = -unit_ball_volume(n).ln() - nf * radius.ln() + interaction_bound;
        (0.0, 1.0, radius.powi(n as i32) / nf, bound)
    };
    let (entropy, interaction) = ball_energy(space, h, radius)?;
    Ok(EnergyBoundReport { radius, eps, a, beta_eps: beta, p_a: pa, bound, energy: entropy + interaction })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DivergenceVerdict {
    BlowUpDiverges,
    SpreadDiverges,
    BoundedBelow,
}

impl DivergenceVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            DivergenceVerdict::BlowUpDiverges => "BlowUpDiverges",
            DivergenceVerdict::SpreadDiverges => "SpreadDiverges",
            DivergenceVerdict::BoundedBelow => "BoundedBelow",
        }
    }
}

impl std::fmt::Display for DivergenceVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanPoint {
    pub radius: f64,
    pub entropy: f64,
    pub interaction: f64,
    pub total: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceScan {
    pub points: Vec<ScanPoint>,
    /// Slope of `E` against `log R` over the smallest decade.
    pub small_slope: f64,
    /// Slope of `E` against `R` over the largest decade.
    pub large_slope: f64,
    pub verdict: DivergenceVerdict,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// Slope magnitude that declares divergence.
    pub threshold: f64,
    /// `ε` used for the bound column.
    pub bound_eps: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { threshold: 0.1, bound_eps: 0.5 }
    }
}

/// `E[ρ_R]` over the radii, with a slope test at each end: a positive slope in
/// `log R` over the smallest decade means `E → −∞` as `R → 0`; a negative
/// slope in `R` over the largest decade means `E → −∞` as `R → ∞`.
pub fn divergence_scan(space: &Space, h: &Potential, radii: &[f64], opts: ScanOptions) -> Result<DivergenceScan> {
    if radii.len() < 3 || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::Config("divergence scan needs at least 3 positive radii".into()));
    }
    let mut sorted = radii.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (r_min, r_max) = (sorted[0], sorted[sorted.len() - 1]);
    if r_max / r_min < 999.0 {
        return Err(Error::Config("divergence scan radii must span at least 3 decades".into()));
    }
    let points = sorted
        .iter()
        .map(|&r| {
            let (entropy, interaction) = ball_energy(space, h, r)?;
            let bound = ball_energy_upper_bound_only(space, h, r, opts.bound_eps)?;
            Ok(ScanPoint { radius: r, entropy, interaction, total: entropy + interaction, bound })
        })
        .collect::<Result<Vec<_>>>()?;

    let small: Vec<&ScanPoint> = points.iter().filter(|p| p.radius <= 10.0 * r_min * (1.0 + 1e-12)).collect();
    let large: Vec<&ScanPoint> = points.iter().filter(|p| p.radius >= 0.1 * r_max * (1.0 - 1e-12)).collect();
    let small_slope = ls_slope(
        &small.iter().map(|p| p.radius.ln()).collect::<Vec<_>>(),
        &small.iter().map(|p| p.total).collect::<Vec<_>>(),
    );
    let large_slope = ls_slope(
        &large.iter().map(|p| p.radius).collect::<Vec<_>>(),
        &large.iter().map(|p| p.total).collect::<Vec<_>>(),
    );
    let verdict = if small.len() >= 2 && small_slope > opts.threshold {
        DivergenceVerdict::BlowUpDiverges
    } else if large.len() >= 2 && large_slope < -opts.threshold {
        DivergenceVerdict::SpreadDiverges
    } else {
        DivergenceVerdict::BoundedBelow
    };
    Ok(DivergenceScan { points, small_slope, large_slope, verdict })
}

/// The bound value alone, without evaluating `E[ρ_R]`.
fn ball_energy_upper_bound_only(space: &Space, h: &Potential, radius: f64, eps: f64) -> Result<f64> {
    let n = space.dim();
    let nf = n as f64;
    let c_big_m = space.c_upper();
    let half = 0.5 * h.eval(2.0 * radius);
    if c_big_m > 0.0 {
        let a = c_big_m.sqrt() * (nf - 1.0) * (1.0 - eps);
        let beta = beta_eps(eps)?;
        Ok(-(unit_sphere_area(n) * beta.powi(n as i32 - 1)).ln() - a * radius - p_a(n, a, radius).ln() + half)
    } else {
        Ok(-unit_ball_volume(n).ln() - nf * radius.ln() + half)
    }
}

/// `∬ d(x,y) ρρ`.
pub fn mean_pairwise_distance(rho: &RadialDensity) -> f64 {
    pair_integral(rho, &|d| d, Rules::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sandwich {
    /// `(2−√2)·W₁(ρ, δ_o)`.
    pub lhs: f64,
    /// `∬ d ρρ`.
    pub mid: f64,
    /// `2·W₁(ρ, δ_o)`.
    pub rhs: f64,
}

impl Sandwich {
    pub fn holds(&self, tol: f64) -> bool {
        self.lhs <= self.mid + tol && self.mid <= self.rhs + tol
    }
}

/// Both sides of `(2−√2) W₁ ≤ ∬ d ρρ ≤ 2 W₁` for a density about the pole.
pub fn pair_distance_sandwich(rho: &RadialDensity) -> Sandwich {
    let w1 = rho.first_moment();
    Sandwich { lhs: (2.0 - SQRT_2) * w1, mid: mean_pairwise_distance(rho), rhs: 2.0 * w1 }
}

/// `E[ρ] − (−C₀ n + C/2 + ((2−√2)ε/2) W₁)`; nonnegative when the lower bound holds.
pub fn energy_lower_bound_check(
    rho: &RadialDensity,
    h: &Potential,
    c0: f64,
    consts: &LowerBoundConstants,
) -> Result<f64> {
    let n = rho.space().dim() as f64;
    let e = rho.entropy() + interaction_energy(rho, h)?;
    let bound = -c0 * n + 0.5 * consts.c_const + 0.5 * (2.0 - SQRT_2) * consts.eps * rho.first_moment();
    Ok(e - bound)
}

/// Singularity strength `A₁` read off the declared descriptors.
pub fn singular_strength(h: &Potential) -> Result<f64> {
    match h.descriptors().singularity {
        Some(Singularity::Bounded) => Ok(0.0),
        Some(Singularity::Log { a1 }) => Ok(a1),
        Some(Singularity::Power { .. }) => Err(Error::Infeasible("power singularity has no finite A1".into())),
        None => Err(Error::ClassificationInput("singularity at 0 not declared".into())),
    }
}

/// Constants of the entropy lower bound
/// `E[ρ] ≥ δ ∫ρ log ρ − C₀ n (1−δ) + C̄/2` with `A₁ = 2n(1−δ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyBoundConstants {
    pub a1: f64,
    pub delta: f64,
    pub c_bar: f64,
}

/// `δ` from `A₁ = 2n(1−δ)`.
pub fn delta_from_a1(a1: f64, n: usize) -> f64 {
    1.0 - a1 / (2.0 * n as f64)
}

pub fn a1_from_delta(delta: f64, n: usize) -> f64 {
    2.0 * n as f64 * (1.0 - delta)
}

pub fn entropy_bound_constants(h: &Potential, n: usize, c: f64) -> Result<EntropyBoundConstants> {
    let a1 = singular_strength(h)?;
    if a1 >= 2.0 * n as f64 {
        return Err(Error::Infeasible(format!("A1 = {a1} is not below 2n = {}", 2 * n)));
    }
    let nf = n as f64;
    let inf = grid_infimum(
        |t| h.eval(t) - a1 * t.ln() - 2.0 * (nf - 1.0) * log_sinhc(c.sqrt() * t),
        SCAN_THETA_MIN,
        SCAN_THETA_MAX,
        SCAN_POINTS,
    )?;
    Ok(EntropyBoundConstants { a1, delta: delta_from_a1(a1, n), c_bar: inf - 1e-6 })
}

/// `E[ρ] − (δ∫ρ log ρ − C₀ n(1−δ) + C̄/2)`.
pub fn entropy_lower_bound_check(rho: &RadialDensity, h: &Potential, c0: f64) -> Result<f64> {
    let space = rho.space();
    let n = space.dim();
    let k = entropy_bound_constants(h, n, space.curvature())?;
    let entropy = rho.entropy();
    let e = entropy + interaction_energy(rho, h)?;
    let bound = k.delta * entropy - c0 * n as f64 * (1.0 - k.delta) + 0.5 * k.c_bar;
    Ok(e - bound)
}
