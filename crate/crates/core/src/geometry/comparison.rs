//! Volume distortion of the exponential map and the comparison bounds that
//! hold on manifolds whose sectional curvature is pinched in `[-c_m, -c_M]`.
//!
//! At constant curvature `-c` the Jacobian of `exp_o` at radius `r` is
//! `(sinh(√c r)/(√c r))^{n-1}`; the band calculators evaluate the same
//! expression at the two ends of the band.

use super::Space;
use crate::error::{Error, Result};
use crate::quadrature::{adaptive_integrate, log_sinhc, sinhc, unit_ball_volume, unit_sphere_area, GaussLegendre};

/// Jacobian and ball-volume bounds at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bands {
    pub jac_lo: f64,
    pub jac_hi: f64,
    pub vol_lo: f64,
    pub vol_hi: f64,
}

const VOLUME_REL_TOL: f64 = 1e-13;

impl Space {
    /// Jacobian of `exp_o` at radius `r`; equals 1 at `r = 0`.
    pub fn jacobian_exp(&self, r: f64) -> f64 {
        jacobian_at(self.dim(), self.curvature(), r)
    }

    /// `log J(r)`, bounded above by `(n−1)√c·r`.
    pub fn log_jacobian_exp(&self, r: f64) -> f64 {
        (self.dim() - 1) as f64 * log_sinhc(self.sqrt_c() * r)
    }

    /// Area of the geodesic sphere of radius `theta`.
    pub fn sphere_area(&self, theta: f64) -> f64 {
        sphere_area_at(self.dim(), self.curvature(), theta)
    }

    /// Volume of the geodesic ball of radius `r`.
    pub fn ball_volume(&self, r: f64) -> f64 {
        ball_volume_at(self.dim(), self.curvature(), r)
    }

    /// Volume of the shell `{a ≤ θ < b}`.
    pub fn shell_volume(&self, a: f64, b: f64) -> f64 {
        let (n, c) = (self.dim(), self.curvature());
        if n == 2 {
            let k = c.sqrt();
            // 2π(cosh kb − cosh ka)/c written as a product
            4.0 * std::f64::consts::PI / c * (0.5 * k * (a + b)).sinh() * (0.5 * k * (b - a)).sinh()
        } else {
            let rule = GaussLegendre::new(12);
            rule.integrate(a, b, |t| sphere_area_at(n, c, t))
        }
    }

    /// Bounds on the Jacobian and on ball volumes valid on any manifold with
    /// curvature in the attached band `[-c_m, -c_M]`.
    pub fn comparison_bands(&self, r: f64) -> Result<Bands> {
        let (lo, hi) = self.band().ok_or_else(|| Error::Config("comparison_bands needs a curvature band".into()))?;
        if !(lo >= 0.0 && lo <= hi) {
            return Err(Error::Config(format!("invalid band ({lo}, {hi})")));
        }
        let n = self.dim();
        let jac_lo = if lo == 0.0 { 1.0 } else { jacobian_at(n, lo, r) };
        let jac_hi = jacobian_at(n, hi, r);
        let vol_lo = if lo == 0.0 { unit_ball_volume(n) * r.powi(n as i32) } else { ball_volume_at(n, lo, r) };
        let vol_hi = ball_volume_at(n, hi, r);
        Ok(Bands { jac_lo, jac_hi, vol_lo, vol_hi })
    }
}

pub(crate) fn jacobian_at(n: usize, c: f64, r: f64) -> f64 {
    sinhc(c.sqrt() * r).powi(n as i32 - 1)
}

pub(crate) fn sphere_area_at(n: usize, c: f64, theta: f64) -> f64 {
    let k = c.sqrt();
    unit_sphere_area(n) * ((k * theta).sinh() / k).powi(n as i32 - 1)
}

pub(crate) fn ball_volume_at(n: usize, c: f64, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let k = c.sqrt();
    if n == 2 {
        let s = (0.5 * k * r).sinh();
        return 4.0 * std::f64::consts::PI * s * s / c;
    }
    ball_volume_quadrature(n, c, r)
}

/// `nω(n)∫₀^R (sinh(√c t)/√c)^{n−1} dt` by adaptive quadrature, any `n`.
pub(crate) fn ball_volume_quadrature(n: usize, c: f64, r: f64) -> f64 {
    adaptive_integrate(|t| sphere_area_at(n, c, t), 0.0, r, VOLUME_REL_TOL)
}
