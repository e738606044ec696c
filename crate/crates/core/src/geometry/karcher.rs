//! Riemannian centre of mass (Karcher mean) by fixed-point gradient descent
//! `x ← exp_x(λ Σ wᵢ log_x pᵢ)`.

use super::{dist_raw, exp_raw, log_raw, minkowski, Point, Space};
use crate::error::{Error, Result};

/// Gradient size accepted once backtracking stalls at rounding level.
const STALL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub struct KarcherOptions {
    /// Stop when `|Σ wᵢ log_x pᵢ| < tol`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for KarcherOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 10_000 }
    }
}

impl Space {
    /// Weighted Karcher mean with default options.
    pub fn karcher_mean(&self, points: &[Point], weights: &[f64]) -> Result<Point> {
        self.karcher_mean_with(points, weights, KarcherOptions::default())
    }

    /// Equal-weight Karcher mean.
    pub fn karcher_mean_uniform(&self, points: &[Point]) -> Result<Point> {
        let w = vec![1.0 / points.len().max(1) as f64; points.len()];
        self.karcher_mean(points, &w)
    }

    pub fn karcher_mean_with(&self, points: &[Point], weights: &[f64], opts: KarcherOptions) -> Result<Point> {
        if points.is_empty() {
            return Err(Error::Config("karcher mean of an empty set".into()));
        }
        if weights.len() != points.len() || weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::Config("karcher weights must be nonnegative, one per point".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("karcher weights sum to {total}, expected 1")));
        }
        let dim = self.dim() + 1;

        // Lorentzian centroid as the starting guess.
        let mut x = vec![0.0; dim];
        for (p, &w) in points.iter().zip(weights) {
            for (xi, pi) in x.iter_mut().zip(&p.coords) {
                *xi += w * pi;
            }
        }
        self.renormalize(&mut x);

        let mut grad = vec![0.0; dim];
        let mut tmp = vec![0.0; dim];
        let mut trial = vec![0.0; dim];
        let mut step = 1.0;
        let mut objective = self.karcher_objective(&x, points, weights)?;
        for _ in 0..opts.max_iter {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for (p, &w) in points.iter().zip(weights) {
                if w == 0.0 {
                    continue;
                }
                let d = dist_raw(self.curvature(), &x, &p.coords)?;
                if d == 0.0 {
                    continue;
                }
                log_raw(self, &x, &p.coords, d, &mut tmp);
                for i in 0..dim {
                    grad[i] += w * tmp[i];
                }
            }
            let gnorm = minkowski(&grad, &grad).max(0.0).sqrt();
            if gnorm < opts.tol {
                return Ok(Point { coords: x });
            }
            // Unit steps are the default; halve only if the objective rises.
            loop {
                let scaled: Vec<f64> = grad.iter().map(|g| g * step).collect();
                exp_raw(self, &x, &scaled, &mut trial);
                let f = self.karcher_objective(&trial, points, weights)?;
                if f <= objective {
                    objective = f;
                    std::mem::swap(&mut x, &mut trial);
                    break;
                }
                if step < 1e-6 {
                    // No descent at any step length: the objective is flat to
                    // rounding, so accept a near-stationary point.
                    if gnorm < STALL_TOL {
                        return Ok(Point { coords: x });
                    }
                    objective = f;
                    std::mem::swap(&mut x, &mut trial);
                    break;
                }
                step *= 0.5;
            }
            step = (step * 2.0).min(1.0);
        }
        let residual = {
            let mut g = vec![0.0; dim];
            for (p, &w) in points.iter().zip(weights) {
                let d = dist_raw(self.curvature(), &x, &p.coords)?;
                if d > 0.0 {
                    log_raw(self, &x, &p.coords, d, &mut tmp);
                    for i in 0..dim {
                        g[i] += w * tmp[i];
                    }
                }
            }
            minkowski(&g, &g).max(0.0).sqrt()
        };
        Err(Error::IterationLimit { limit: opts.max_iter, residual })
    }

    fn karcher_objective(&self, x: &[f64], points: &[Point], weights: &[f64]) -> Result<f64> {
        let mut f = 0.0;
        for (p, &w) in points.iter().zip(weights) {
            let d = dist_raw(self.curvature(), x, &p.coords)?;
            f += 0.5 * w * d * d;
        }
        Ok(f)
    }
}
