//! Radial steady states by damped Picard iteration on the Euler–Lagrange
//! condition of the free energy
//!
//! ```text
//! log ρ + W*ρ = const
//! ρₖ₊₁ = (1−λ) ρₖ + λ Z⁻¹ exp(−W*ρₖ)
//! ```
//!
//! `W*ρ` is taken as its average over each radial cell, so the discrete
//! interaction energy is exactly `½ Σᵢ (W*ρ)ᵢ mᵢ`.
//!
//! Two failure modes are reported rather than treated as errors: mass piling
//! up at the outer edge of the grid (spreading) and mass piling up in the
//! innermost cells (concentration).

use serde::Serialize;

use crate::density::{default_edges, RadialDensity};
use crate::energy::{kernel_matrix, KernelMatrix, Rules};
use crate::error::{Error, Result};
use crate::geometry::Space;
use crate::potentials::Potential;
use crate::quadrature::lin_edges;

/// Cells with less mass density than this are ignored by the residual.
pub const RESIDUAL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyOptions {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Fraction of outermost cells watched by the tail guard.
    pub tail_cells: f64,
    /// Tail mass that trips the guard.
    pub tail_mass: f64,
    /// Consecutive trips at full extent that count as escape.
    pub escape_patience: usize,
    /// Number of times the grid may be doubled.
    pub max_expansions: usize,
    /// Mass in the two innermost cells that counts as concentration.
    pub collapse_mass: f64,
    /// Mass in the two innermost cells of a converged profile that triggers a
    /// finer look at the origin.
    pub grid_limited_mass: f64,
    /// How many times the innermost cell may be refined.
    pub zooms: usize,
    #[serde(skip)]
    pub rules: Rules,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        Self {
            damping: 0.3,
            tol: 1e-9,
            max_iter: 5000,
            tail_cells: 0.1,
            tail_mass: 0.01,
            escape_patience: 10,
            max_expansions: 2,
            collapse_mass: 0.99,
            grid_limited_mass: 0.5,
            zooms: 1,
            rules: Rules::default(),
        }
    }
}

impl SteadyOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Config(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::Config("steady tolerance and iteration budget must be positive".into()));
        }
        if !(self.tail_cells > 0.0 && self.tail_cells < 1.0) {
            return Err(Error::Config(format!("tail_cells must lie in (0, 1), got {}", self.tail_cells)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SteadyOutcome {
    Converged { density: RadialDensity, energy: f64, residual: f64 },
    MassEscape { tail_mass: f64, theta_max: f64 },
    Collapse { inner_mass: f64, entropy: f64 },
    IterationLimit { change: f64, residual: f64 },
}

impl SteadyOutcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            SteadyOutcome::Converged { .. } => "Converged",
            SteadyOutcome::MassEscape { .. } => "MassEscape",
            SteadyOutcome::Collapse { .. } => "Collapse",
            SteadyOutcome::IterationLimit { .. } => "IterationLimit",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyResult {
    pub outcome: SteadyOutcome,
    pub iterations: usize,
    /// Damping in force when the iteration stopped.
    pub damping: f64,
    /// Grid doublings performed.
    pub expansions: usize,
    /// Free energy of each iterate on its grid.
    pub energies: Vec<f64>,
    /// Iterates after the tenth whose energy rose.
    pub energy_increases: usize,
    /// Last iterate, whatever the outcome.
    pub last: RadialDensity,
}

/// `W*ρ` averaged over each cell of `ρ`'s grid.
pub fn convolve_potential(rho: &RadialDensity, h: &Potential) -> Result<Vec<f64>> {
    convolve_with(rho, h, Rules::default())
}

pub fn convolve_with(rho: &RadialDensity, h: &Potential, rules: Rules) -> Result<Vec<f64>> {
    Ok(potential_kernel(rho, h, rules)?.apply(&rho.cell_masses()))
}

fn potential_kernel(rho: &RadialDensity, h: &Potential, rules: Rules) -> Result<KernelMatrix> {
    if h.is_nonintegrable(rho.space().dim()) {
        return Err(Error::Divergent(format!("{:?} in dimension {}", h.descriptors().singularity, rho.space().dim())));
    }
    Ok(kernel_matrix(rho, &|d| h.eval(d), rules))
}

fn residual_from(rho: &RadialDensity, field: &[f64]) -> f64 {
    let masses = rho.cell_masses();
    let terms: Vec<Option<f64>> =
        rho.values().iter().zip(field).map(|(v, w)| (*v > RESIDUAL_FLOOR).then(|| v.ln() + w)).collect();
    let kept: f64 = terms.iter().zip(&masses).filter(|(t, _)| t.is_some()).map(|(_, m)| m).sum();
    let mean: f64 = terms.iter().zip(&masses).filter_map(|(t, m)| t.map(|t| t * m)).sum::<f64>() / kept;
    terms.iter().flatten().map(|t| (t - mean).abs()).fold(0.0, f64::max)
}

/// `sup |log ρᵢ + (W*ρ)ᵢ − m|` over cells with `ρᵢ > 1e−12`, with `m` the
/// `ρ`-weighted mean of `log ρ + W*ρ`.
pub fn euler_lagrange_residual(rho: &RadialDensity, h: &Potential) -> Result<f64> {
    Ok(residual_from(rho, &convolve_potential(rho, h)?))
}

/// Gaussian start `exp(−θ²/2)` on the default grid.
pub fn initial_guess(space: &Space) -> Result<RadialDensity> {
    let edges = default_edges(space);
    let values = edges.windows(2).map(|w| (-0.125 * (w[0] + w[1]).powi(2)).exp()).collect();
    Ok(RadialDensity::normalized(space, edges, values)?.0)
}

/// `Z⁻¹ exp(−φ)` on the grid of `rho`.
fn gibbs(rho: &RadialDensity, field: &[f64]) -> Result<RadialDensity> {
    let shift = field.iter().copied().fold(f64::INFINITY, f64::min);
    let values = field.iter().map(|w| (shift - w).exp()).collect();
    Ok(RadialDensity::normalized(rho.space(), rho.edges().to_vec(), values)?.0)
}

/// Same profile on a grid of the same cell count and twice the extent.
fn expand(rho: &RadialDensity) -> Result<RadialDensity> {
    let cells = rho.cells();
    let edges = lin_edges(0.0, 2.0 * rho.theta_max(), cells);
    let old = rho.edges();
    let values = edges
        .windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            let i = old.partition_point(|&e| e <= mid);
            if i >= 1 && i <= cells {
                rho.values()[i - 1]
            } else {
                0.0
            }
        })
        .collect();
    Ok(RadialDensity::normalized(rho.space(), edges, values)?.0)
}

/// Runs the iteration. A converged profile that still holds most of its mass
/// in the two innermost cells is resolved further by splitting the first cell;
/// if the mass follows the grid down, the outcome is concentration.
pub fn fixed_point(rho0: &RadialDensity, h: &Potential, opts: SteadyOptions) -> Result<SteadyResult> {
    opts.validate()?;
    let mut result = iterate(rho0, h, opts)?;
    for _ in 0..opts.zooms {
        let SteadyOutcome::Converged { density, .. } = &result.outcome else { break };
        if inner_mass(density) <= opts.grid_limited_mass {
            break;
        }
        let previous = result.iterations;
        result = iterate(&zoom(density, ZOOM_SPLIT)?, h, opts)?;
        result.iterations += previous;
        if let SteadyOutcome::Converged { density, .. } = &result.outcome {
            let inner = inner_mass(density);
            if inner > opts.grid_limited_mass {
                result.outcome = SteadyOutcome::Collapse { inner_mass: inner, entropy: density.entropy() };
            }
        }
    }
    Ok(result)
}

/// Cells the innermost cell is split into when resolving a concentrated profile.
const ZOOM_SPLIT: usize = 16;

fn inner_mass(rho: &RadialDensity) -> f64 {
    rho.cell_masses().iter().take(2).sum()
}

/// Splits the innermost cell into `parts` equal cells.
fn zoom(rho: &RadialDensity, parts: usize) -> Result<RadialDensity> {
    let edges = rho.edges();
    let mut new_edges: Vec<f64> = (0..parts).map(|k| edges[1] * k as f64 / parts as f64).collect();
    new_edges.extend_from_slice(&edges[1..]);
    let mut values = vec![rho.values()[0]; parts];
    values.extend_from_slice(&rho.values()[1..]);
    Ok(RadialDensity::normalized(rho.space(), new_edges, values)?.0)
}

fn iterate(rho0: &RadialDensity, h: &Potential, opts: SteadyOptions) -> Result<SteadyResult> {
    let mut rho = rho0.clone();
    let mut kernel = potential_kernel(&rho, h, opts.rules)?;
    let mut damping = opts.damping;
    let mut expansions = 0;
    let mut trips = 0;
    let mut energies = Vec::new();
    let mut energy_increases = 0;
    let mut last_update: Option<Vec<f64>> = None;
    let mut change = f64::INFINITY;
    let mut residual = f64::INFINITY;
    let mut prev_entropy = f64::NEG_INFINITY;

    for iter in 0..opts.max_iter {
        let masses = rho.cell_masses();
        let field = kernel.apply(&masses);
        let energy = rho.entropy() + 0.5 * field.iter().zip(&masses).map(|(w, m)| w * m).sum::<f64>();
        if iter > 10 && energy > energies.last().copied().unwrap_or(f64::INFINITY) + 1e-12 * energy.abs().max(1.0) {
            energy_increases += 1;
            log::debug!("energy rose at iterate {iter}: {energy}");
        }
        energies.push(energy);
        residual = residual_from(&rho, &field);

        let inner: f64 = masses.iter().take(2).sum();
        // ∫ρ log ρ grows as the profile sharpens
        let entropy = rho.entropy();
        let sharpening = entropy >= prev_entropy;
        prev_entropy = entropy;
        if inner > opts.collapse_mass && sharpening {
            return Ok(SteadyResult {
                outcome: SteadyOutcome::Collapse { inner_mass: inner, entropy },
                iterations: iter,
                damping,
                expansions,
                energies,
                energy_increases,
                last: rho,
            });
        }

        let tail_start = masses.len() - ((opts.tail_cells * masses.len() as f64).ceil() as usize).max(1);
        let tail: f64 = masses[tail_start..].iter().sum();
        if tail > opts.tail_mass {
            if expansions < opts.max_expansions {
                expansions += 1;
                rho = expand(&rho)?;
                kernel = potential_kernel(&rho, h, opts.rules)?;
                last_update = None;
                continue;
            }
            trips += 1;
            if trips >= opts.escape_patience {
                return Ok(SteadyResult {
                    outcome: SteadyOutcome::MassEscape { tail_mass: tail, theta_max: rho.theta_max() },
                    iterations: iter + 1,
                    damping,
                    expansions,
                    energies,
                    energy_increases,
                    last: rho,
                });
            }
        } else {
            trips = 0;
        }

        let target = gibbs(&rho, &field)?;
        let update: Vec<f64> = target.values().iter().zip(rho.values()).map(|(t, v)| t - v).collect();
        if let Some(prev) = &last_update {
            let flips = update.iter().zip(prev).filter(|(a, b)| **a * **b < 0.0).count();
            if 2 * flips > update.len() && damping > 1e-3 {
                damping *= 0.5;
                log::debug!("oscillation at iterate {iter}, damping now {damping}");
            }
        }
        let values: Vec<f64> = rho.values().iter().zip(&update).map(|(v, u)| v + damping * u).collect();
        let next = RadialDensity::normalized(rho.space(), rho.edges().to_vec(), values)?.0;
        let scale = next.values().iter().copied().fold(0.0, f64::max);
        change = next.values().iter().zip(rho.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
        last_update = Some(update);
        rho = next;

        if change < opts.tol {
            let masses = rho.cell_masses();
            let field = kernel.apply(&masses);
            residual = residual_from(&rho, &field);
            if residual < 10.0 * opts.tol {
                let energy = rho.entropy() + 0.5 * field.iter().zip(&masses).map(|(w, m)| w * m).sum::<f64>();
                energies.push(energy);
                return Ok(SteadyResult {
                    outcome: SteadyOutcome::Converged { density: rho.clone(), energy, residual },
                    iterations: iter + 1,
                    damping,
                    expansions,
                    energies,
                    energy_increases,
                    last: rho,
                });
            }
        }
    }
    Ok(SteadyResult {
        outcome: SteadyOutcome::IterationLimit { change, residual },
        iterations: opts.max_iter,
        damping,
        expansions,
        energies,
        energy_increases,
        last: rho,
    })
}
