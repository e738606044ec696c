//! Logarithmic Hardy–Littlewood–Sobolev deficits.
//!
//! In `ℝⁿ` there is a constant `C₀(n)` with
//!
//! ```text
//! −∬ log|x−y| ρ(x)ρ(y) ≤ (1/n) ∫ ρ log ρ + C₀
//! ```
//!
//! and on a manifold of curvature `≤ 0` the same holds after adding a
//! curvature correction to the right side, either pointwise at the pole
//!
//! ```text
//! ((n−1)/n) ∫ log(sinh(√c θ)/(√c θ)) ρ
//! ```
//!
//! or integrated over pairs, with `θ` replaced by `d(x,z)` and a double
//! integral. A deficit is right side minus left side.
//!
//! `C₀` is estimated from centred Gaussians, whose deficit is
//! `½(log(πe/2) − ψ(n/2))` for every width, and padded by 10%.

use serde::Serialize;

use crate::density::RadialDensity;
use crate::energy::{pair_integral, KernelMatrix, Metric, Rules};
use crate::error::{Error, Result};
use crate::quadrature::{lin_edges, log_sinhc, log_space, unit_ball_volume, GaussLegendre};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum C0Source {
    UserSupplied,
    GaussianEstimated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HlsConfig {
    pub c0: f64,
    pub source: C0Source,
}

impl HlsConfig {
    pub fn user(c0: f64) -> Self {
        Self { c0, source: C0Source::UserSupplied }
    }

    pub fn estimated(n: usize) -> Result<Self> {
        Ok(Self { c0: estimate_c0(n)?, source: C0Source::GaussianEstimated })
    }
}

/// Resolution of the Euclidean probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C0Options {
    pub cells: usize,
    /// Grid extent in units of `σ`.
    pub extent: f64,
    pub sigmas: usize,
    pub margin: f64,
}

impl Default for C0Options {
    fn default() -> Self {
        Self { cells: 96, extent: 10.0, sigmas: 7, margin: 0.1 }
    }
}

/// A radial density in `ℝⁿ`, piecewise constant on shells.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanRadial {
    pub n: usize,
    pub edges: Vec<f64>,
    pub masses: Vec<f64>,
}

impl EuclideanRadial {
    /// Cell masses of `profile(r)` integrated against `nω r^{n−1}`.
    pub fn from_profile<F: Fn(f64) -> f64>(n: usize, edges: Vec<f64>, profile: F) -> Result<Self> {
        let rule = GaussLegendre::new(8);
        let area = Metric::Euclidean;
        let masses: Vec<f64> =
            edges.windows(2).map(|w| rule.integrate(w[0], w[1], |r| profile(r) * area.sphere_area(n, r))).collect();
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) {
            return Err(Error::DegenerateInput("profile has zero mass".into()));
        }
        Ok(Self { n, edges, masses: masses.into_iter().map(|m| m / total).collect() })
    }

    pub fn gaussian(n: usize, sigma: f64, cells: usize, extent: f64) -> Result<Self> {
        Self::from_profile(n, lin_edges(0.0, extent * sigma, cells), |r| (-r * r / (2.0 * sigma * sigma)).exp())
    }

    fn shell(&self, i: usize) -> f64 {
        let n = self.n as i32;
        unit_ball_volume(self.n) * (self.edges[i + 1].powi(n) - self.edges[i].powi(n))
    }

    pub fn entropy(&self) -> f64 {
        (0..self.masses.len())
            .filter(|&i| self.masses[i] > 0.0)
            .map(|i| self.masses[i] * (self.masses[i] / self.shell(i)).ln())
            .sum()
    }

    /// `∬ log|x−y| ρρ`.
    pub fn log_pair_integral(&self, rules: Rules) -> f64 {
        KernelMatrix::build(Metric::Euclidean, self.n, &self.edges, &|d: f64| d.ln(), rules).pair_sum(&self.masses)
    }

    /// `(1/n)∫ρ log ρ + C₀ + ∬ log|x−y| ρρ` with `C₀ = 0`.
    pub fn euclidean_deficit_without_c0(&self, rules: Rules) -> f64 {
        self.entropy() / self.n as f64 + self.log_pair_integral(rules)
    }
}

/// `−∬ log|x−y| g g − (1/n)∫ g log g` for the centred Gaussian of width `σ`.
pub fn gaussian_deficit(n: usize, sigma: f64, opts: C0Options) -> Result<f64> {
    let g = EuclideanRadial::gaussian(n, sigma, opts.cells, opts.extent)?;
    Ok(-g.euclidean_deficit_without_c0(Rules::default()))
}

/// Largest Gaussian deficit over `σ ∈ [1/8, 8]`, plus the margin.
pub fn estimate_c0(n: usize) -> Result<f64> {
    estimate_c0_with(n, C0Options::default())
}

pub fn estimate_c0_with(n: usize, opts: C0Options) -> Result<f64> {
    if n < 2 {
        return Err(Error::Config(format!("dimension must be at least 2, got {n}")));
    }
    let mut best = f64::NEG_INFINITY;
    for sigma in log_space(0.125, 8.0, opts.sigmas) {
        best = best.max(gaussian_deficit(n, sigma, opts)?);
    }
    Ok(best + opts.margin * best.abs())
}

/// Pointwise-at-the-pole manifold deficit.
pub fn log_hls_deficit(rho: &RadialDensity, config: &HlsConfig) -> f64 {
    let space = rho.space();
    let nf = space.dim() as f64;
    let k = space.sqrt_c();
    let correction = rho.radial_integral(|t| log_sinhc(k * t));
    let log_pairs = pair_integral(rho, &|d: f64| d.ln(), Rules::default());
    rho.entropy() / nf + (nf - 1.0) / nf * correction + config.c0 + log_pairs
}

/// Integrated manifold deficit, with the correction averaged over pairs.
pub fn integrated_hls_deficit(rho: &RadialDensity, config: &HlsConfig) -> f64 {
    let space = rho.space();
    let nf = space.dim() as f64;
    let k = space.sqrt_c();
    let correction = pair_integral(rho, &|d: f64| log_sinhc(k * d), Rules::default());
    let log_pairs = pair_integral(rho, &|d: f64| d.ln(), Rules::default());
    rho.entropy() / nf + (nf - 1.0) / nf * correction + config.c0 + log_pairs
}

/// `∫ log(sinh(√c θ)/(√c θ)) ρ`.
pub fn pole_correction(rho: &RadialDensity) -> f64 {
    let k = rho.space().sqrt_c();
    rho.radial_integral(|t| log_sinhc(k * t))
}

/// The built-in radial family used by the deficit sweeps.
pub fn builtin_family(space: &crate::geometry::Space) -> Result<Vec<(String, RadialDensity)>> {
    let mut out = Vec::new();
    for &r in &[1e-3, 0.1, 1.0, 3.0] {
        out.push((format!("ball_R{r}"), RadialDensity::uniform_ball(space, r)?));
    }
    for &s in &[0.5, 1.0, 2.0, 4.0] {
        out.push((format!("gaussian_sigma{s}"), RadialDensity::gaussian_like_with(space, s, 128)?));
    }
    Ok(out)
}
