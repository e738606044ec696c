//! Radial probability densities about the pole, piecewise constant on a grid
//! of geodesic shells.
//!
//! A density is stored as values `ρᵢ` per unit Riemannian volume on cells
//! `[θᵢ, θᵢ₊₁)`. Cell volumes are exact shell volumes, so mass and entropy are
//! exact sums:
//!
//! ```text
//! mass    = Σ ρᵢ ΔVᵢ
//! entropy = Σ ρᵢ log ρᵢ ΔVᵢ        (0·log 0 = 0)
//! ```
//!
//! Radial moments `∫ g(θ) ρ S(θ) dθ` use Gauss–Legendre per cell, where
//! `S(θ) = nω(n) (sinh(√c θ)/√c)^{n−1}` is the geodesic sphere area.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::geometry::Space;
use crate::quadrature::{lin_edges, log_sinhc, unit_ball_volume, GaussLegendre};

/// Cells used by the built-in trial families.
pub const BALL_CELLS: usize = 64;
pub const GAUSSIAN_CELLS: usize = 256;
/// Cells of the default working grid on `[0, 20/√c]`.
pub const DEFAULT_CELLS: usize = 512;
pub const DEFAULT_RADIUS_SCALE: f64 = 20.0;

/// Tolerance on total mass for every constructor.
pub const MASS_TOL: f64 = 1e-8;

/// Sub-intervals per cell for the tangent-space side of the pushforward identity.
const PUSHFORWARD_SUBDIVISION: usize = 32;
const MOMENT_NODES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct RadialDensity {
    space: Space,
    edges: Vec<f64>,
    values: Vec<f64>,
    volumes: Vec<f64>,
}

/// `[0, 20/√c]` split into `DEFAULT_CELLS` equal cells.
pub fn default_edges(space: &Space) -> Vec<f64> {
    lin_edges(0.0, DEFAULT_RADIUS_SCALE / space.sqrt_c(), DEFAULT_CELLS)
}

fn validate_edges(edges: &[f64]) -> Result<()> {
    if edges.len() < 2 {
        return Err(Error::Config("a radial grid needs at least one cell".into()));
    }
    if edges[0] != 0.0 {
        return Err(Error::Config(format!("radial grid must start at 0, got {}", edges[0])));
    }
    if edges.windows(2).any(|w| !(w[1] > w[0])) || !edges[edges.len() - 1].is_finite() {
        return Err(Error::Config("radial grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

impl RadialDensity {
    /// Builds a density from nonnegative cell values and rescales it to unit
    /// mass. Returns the applied factor alongside.
    pub fn normalized(space: &Space, edges: Vec<f64>, values: Vec<f64>) -> Result<(Self, f64)> {
        validate_edges(&edges)?;
        if values.len() + 1 != edges.len() {
            return Err(Error::Config(format!("{} values do not match {} cells", values.len(), edges.len() - 1)));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::DegenerateInput("density values must be finite and nonnegative".into()));
        }
        let volumes: Vec<f64> = edges.windows(2).map(|w| space.shell_volume(w[0], w[1])).collect();
        if volumes.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "shell volumes overflow on a grid reaching theta = {}",
                edges[edges.len() - 1]
            )));
        }
        let mass: f64 = values.iter().zip(&volumes).map(|(v, dv)| v * dv).sum();
        if !(mass > 0.0) {
            return Err(Error::DegenerateInput("density has zero mass".into()));
        }
        let factor = 1.0 / mass;
        let values = values.into_iter().map(|v| v * factor).collect();
        Ok((Self { space: *space, edges, values, volumes }, factor))
    }

    /// Tabulated cell values on a grid; renormalized, factor reported.
    pub fn tabulated(space: &Space, edges: Vec<f64>, values: Vec<f64>) -> Result<(Self, f64)> {
        Self::normalized(space, edges, values)
    }

    /// Uniform density on the geodesic ball `B_R(o)`.
    pub fn uniform_ball(space: &Space, radius: f64) -> Result<Self> {
        Self::uniform_ball_with(space, radius, BALL_CELLS)
    }

    pub fn uniform_ball_with(space: &Space, radius: f64, cells: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || cells == 0 {
            return Err(Error::Config(format!("uniform ball needs R > 0, got {radius}")));
        }
        let edges = lin_edges(0.0, radius, cells);
        Ok(Self::normalized(space, edges, vec![1.0; cells])?.0)
    }

    /// Cell averages of `ρ ∝ exp(−θ²/(2σ²))` on a grid that covers all but a
    /// negligible tail of the radial mass.
    pub fn gaussian_like(space: &Space, sigma: f64) -> Result<Self> {
        Self::gaussian_like_with(space, sigma, GAUSSIAN_CELLS)
    }

    pub fn gaussian_like_with(space: &Space, sigma: f64, cells: usize) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) || cells == 0 {
            return Err(Error::Config(format!("gaussian_like needs sigma > 0, got {sigma}")));
        }
        let n = space.dim() as f64;
        let k = space.sqrt_c();
        // log of the radial mass density, up to a constant
        let log_mass = |t: f64| -t * t / (2.0 * sigma * sigma) + (n - 1.0) * (t.ln() + log_sinhc(k * t));
        let peak = (n - 1.0) * k * sigma * sigma + sigma;
        let scan_hi = 2.0 * peak + 12.0 * sigma;
        let scan = lin_edges(0.0, scan_hi, 4000);
        let top = scan[1..].iter().map(|&t| log_mass(t)).fold(f64::NEG_INFINITY, f64::max);
        let theta_max =
            scan[1..].iter().rev().find(|&&t| log_mass(t) > top - 46.0).copied().unwrap_or(scan_hi).max(sigma);
        let edges = lin_edges(0.0, theta_max, cells);
        let rule = GaussLegendre::new(MOMENT_NODES);
        let values: Vec<f64> = edges
            .windows(2)
            .map(|w| {
                let m = rule.integrate(w[0], w[1], |t| (-t * t / (2.0 * sigma * sigma)).exp() * space.sphere_area(t));
                m / space.shell_volume(w[0], w[1])
            })
            .collect();
        Ok(Self::normalized(space, edges, values)?.0)
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cells(&self) -> usize {
        self.values.len()
    }

    pub fn theta_max(&self) -> f64 {
        self.edges[self.edges.len() - 1]
    }

    pub fn cell_volumes(&self) -> &[f64] {
        &self.volumes
    }

    /// Mass per cell, `ρᵢ ΔVᵢ`.
    pub fn cell_masses(&self) -> Vec<f64> {
        self.values.iter().zip(&self.volumes).map(|(v, dv)| v * dv).collect()
    }

    pub fn mass(&self) -> f64 {
        self.cell_masses().iter().sum()
    }

    /// `∫ρ log ρ`, exact for the piecewise-constant profile.
    pub fn entropy(&self) -> f64 {
        self.values.iter().zip(&self.volumes).filter(|(v, _)| **v > 0.0).map(|(v, dv)| v * v.ln() * dv).sum()
    }

    /// `∫ g(θ) ρ dx` with `MOMENT_NODES` Gauss–Legendre points per cell.
    pub fn radial_integral<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        let rule = GaussLegendre::new(MOMENT_NODES);
        self.edges
            .windows(2)
            .zip(&self.values)
            .filter(|(_, v)| **v > 0.0)
            .map(|(w, v)| v * rule.integrate(w[0], w[1], |t| g(t) * self.space.sphere_area(t)))
            .sum()
    }

    /// `∫ θ ρ dx`, which equals `W₁(ρ, δ_o)` for densities about the pole.
    pub fn first_moment(&self) -> f64 {
        self.radial_integral(|t| t)
    }

    /// `∫ log J(θ) ρ dx` with `J` the Jacobian of `exp_o`.
    pub fn log_jacobian_moment(&self) -> f64 {
        self.radial_integral(|t| self.space.log_jacobian_exp(t))
    }

    /// Difference between the two sides of the pushforward entropy identity
    /// for `log_o`:
    ///
    /// ```text
    /// ∫ρ log ρ + ∫ρ log J   versus   ∫_{T_oM} f#ρ log f#ρ,   f#ρ(v) = ρ(|v|) J(|v|)
    /// ```
    ///
    /// The left side is exact entropy plus Gauss–Legendre; the right side is
    /// a midpoint rule over Euclidean shells of the tangent space.
    pub fn pushforward_entropy_residual(&self) -> f64 {
        self.pushforward_entropy_residual_with(PUSHFORWARD_SUBDIVISION)
    }

    pub fn pushforward_entropy_residual_with(&self, subdivision: usize) -> f64 {
        let lhs = self.entropy() + self.log_jacobian_moment();
        let n = self.space.dim();
        let omega = unit_ball_volume(n);
        let mut rhs = 0.0;
        for (w, &rho) in self.edges.windows(2).zip(&self.values) {
            if rho <= 0.0 {
                continue;
            }
            let sub = lin_edges(w[0], w[1], subdivision.max(1));
            for s in sub.windows(2) {
                let vol = omega * (s[1].powi(n as i32) - s[0].powi(n as i32));
                let mid = 0.5 * (s[0] + s[1]);
                let log_push = rho.ln() + self.space.log_jacobian_exp(mid);
                rhs += vol * log_push.exp() * log_push;
            }
        }
        lhs - rhs
    }

    /// Same profile on a grid whose cells are each split in two.
    pub fn refined(&self) -> Self {
        let mut edges = Vec::with_capacity(2 * self.edges.len());
        let mut values = Vec::with_capacity(2 * self.values.len());
        for (w, &v) in self.edges.windows(2).zip(&self.values) {
            edges.push(w[0]);
            edges.push(0.5 * (w[0] + w[1]));
            values.push(v);
            values.push(v);
        }
        edges.push(self.theta_max());
        let volumes = edges.windows(2).map(|w| self.space.shell_volume(w[0], w[1])).collect();
        Self { space: self.space, edges, values, volumes }
    }

    /// Writes `theta,rho` rows: the left edge and value of each cell, then a
    /// closing row `theta_max,0`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["theta", "rho"])?;
        for (t, v) in self.edges.iter().zip(&self.values) {
            w.write_record([format!("{t:.17e}"), format!("{v:.17e}")])?;
        }
        w.write_record([format!("{:.17e}", self.theta_max()), format!("{:.17e}", 0.0)])?;
        w.flush()?;
        Ok(())
    }

    /// Reads the format of [`RadialDensity::write_csv`]; the result is
    /// renormalized and the factor returned.
    pub fn read_csv<R: Read>(space: &Space, input: R) -> Result<(Self, f64)> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "theta" || &headers[1] != "rho" {
            return Err(Error::Config("density CSV header must be theta,rho".into()));
        }
        let mut edges = Vec::new();
        let mut values = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec[i].trim().parse::<f64>().map_err(|e| Error::Config(format!("row {}: {e}", line + 2)))
            };
            edges.push(parse(0)?);
            values.push(parse(1)?);
        }
        values.pop();
        Self::tabulated(space, edges, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn h2() -> Space {
        Space::new(2, 1.0).unwrap()
    }

    #[test]
    fn uniform_ball_value_and_mass() {
        let rho = RadialDensity::uniform_ball(&h2(), 1.0).unwrap();
        let vol = 2.0 * PI * (1f64.cosh() - 1.0);
        for v in rho.values() {
            assert!((v - 1.0 / vol).abs() < 1e-13);
        }
        assert!((rho.values()[0] - 0.293_06).abs() < 1e-5);
        assert!((rho.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_of_balls() {
        let rho = RadialDensity::uniform_ball(&h2(), 1.0).unwrap();
        assert!((rho.entropy() + (2.0 * PI * (1f64.cosh() - 1.0)).ln()).abs() < 1e-12);
        assert!((rho.entropy() + 1.227380).abs() < 1e-6);
        for n in [2, 3, 4] {
            let s = Space::new(n, 0.7).unwrap();
            for &r in &[0.01, 0.5, 2.0, 6.0] {
                let rho = RadialDensity::uniform_ball(&s, r).unwrap();
                assert!((rho.entropy() + s.ball_volume(r).ln()).abs() < 1e-10);
            }
        }
        let small = RadialDensity::uniform_ball(&h2(), 0.5).unwrap();
        assert!(small.entropy() > rho.entropy());
    }

    #[test]
    fn first_moment_closed_form() {
        let rho = RadialDensity::uniform_ball(&h2(), 1.0).unwrap();
        let exact = (-1f64).exp() / (1f64.cosh() - 1.0);
        assert!((rho.first_moment() - exact).abs() < 1e-12);
        let mut prev = 0.0;
        for &r in &[1e-4, 0.01, 0.1, 1.0, 3.0] {
            let m = RadialDensity::uniform_ball(&h2(), r).unwrap().first_moment();
            assert!(m > prev);
            prev = m;
        }
        assert!(RadialDensity::uniform_ball(&h2(), 1e-6).unwrap().first_moment() < 1e-6);
    }

    #[test]
    fn gaussian_like_is_normalized_and_concentrates() {
        for n in [2, 3] {
            for &c in &[0.25, 1.0, 4.0] {
                let s = Space::new(n, c).unwrap();
                for &sigma in &[0.1, 1.0, 4.0] {
                    let rho = RadialDensity::gaussian_like(&s, sigma).unwrap();
                    assert!((rho.mass() - 1.0).abs() < MASS_TOL);
                    assert!(rho.values().iter().all(|v| *v >= 0.0));
                }
            }
        }
        let m1 = RadialDensity::gaussian_like(&h2(), 1e-3).unwrap().first_moment();
        assert!(m1 < 2e-3);
    }

    #[test]
    fn tabulated_uniform_is_the_ball() {
        let s = h2();
        let ball = RadialDensity::uniform_ball(&s, 1.5).unwrap();
        let (tab, factor) = RadialDensity::tabulated(&s, ball.edges().to_vec(), vec![2.0; BALL_CELLS]).unwrap();
        for (a, b) in tab.values().iter().zip(ball.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((factor * 2.0 - ball.values()[0]).abs() < 1e-12);
        let zero = RadialDensity::tabulated(&s, vec![0.0, 1.0], vec![0.0]);
        assert!(matches!(zero, Err(Error::DegenerateInput(_))));
        assert!(RadialDensity::tabulated(&s, vec![0.0, 1.0], vec![-1.0]).is_err());
        assert!(RadialDensity::tabulated(&s, vec![0.1, 1.0], vec![1.0]).is_err());
    }

    #[test]
    fn pushforward_identity_holds_and_converges() {
        let s = h2();
        let rho = RadialDensity::uniform_ball(&s, 1.0).unwrap();
        let r0 = rho.pushforward_entropy_residual();
        assert!(r0.abs() < 1e-6, "residual {r0}");
        let r1 = rho.refined().pushforward_entropy_residual();
        assert!(r1.abs() <= 0.5 * r0.abs());
        let g = RadialDensity::gaussian_like(&s, 1.0).unwrap();
        assert!(g.pushforward_entropy_residual().abs() < 1e-6);
        let flat = RadialDensity::uniform_ball(&Space::new(2, 1e-6).unwrap(), 1.0).unwrap();
        assert!(flat.log_jacobian_moment().abs() < 1e-6);
        assert!(flat.pushforward_entropy_residual().abs() < 1e-9);
    }

    #[test]
    fn overflowing_grid_is_rejected() {
        let s = Space::new(3, 4.0).unwrap();
        let r = RadialDensity::uniform_ball_with(&s, 200.0, 16);
        assert!(matches!(r, Err(Error::Numerical(_))), "{r:?}");
    }

    #[test]
    fn csv_round_trip() {
        let s = Space::new(3, 2.0).unwrap();
        let rho = RadialDensity::gaussian_like_with(&s, 0.7, 40).unwrap();
        let mut buf = Vec::new();
        rho.write_csv(&mut buf).unwrap();
        let (back, factor) = RadialDensity::read_csv(&s, buf.as_slice()).unwrap();
        assert!((factor - 1.0).abs() < 1e-14);
        assert_eq!(back.edges(), rho.edges());
        for (a, b) in back.values().iter().zip(rho.values()) {
            assert!((a - b).abs() <= 1e-15 * b.abs());
        }
    }
}
