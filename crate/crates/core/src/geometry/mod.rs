//! Exact kernel for hyperbolic space `Hⁿ` of constant sectional curvature `-c`,
//! realized as the upper sheet of the hyperboloid
//!
//! ```text
//! Hⁿ = { x ∈ ℝⁿ⁺¹ : ⟨x,x⟩_L = -1/c, x₀ > 0 },   ⟨x,y⟩_L = -x₀y₀ + Σ xᵢyᵢ
//! ```
//!
//! Distances, exponential and logarithm maps are closed form. Short distances
//! go through the chordal identity `⟨x-y,x-y⟩_L = (4/c)·sinh²(√c·d/2)` so that
//! nearby points keep full relative precision.
//!
//! The comparison calculators for curvature pinched in `[-c_m, -c_M]` live in
//! [`comparison`]; Lorentz isometries in [`isometry`]; the Riemannian centre of
//! mass in [`karcher`].

pub mod comparison;
pub mod isometry;
pub mod karcher;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::quadrature::sinhc;

pub use comparison::Bands;
pub use isometry::Isometry;

/// Tolerance on the Minkowski sheet and tangency constraints.
pub const SHEET_TOL: f64 = 1e-9;

/// How far below 1 the `arccosh` argument may fall before it is a hard error.
const ACOSH_TOL: f64 = 1e-9;

/// Constant-curvature model space `Hⁿ` with curvature `-c`, plus an optional
/// comparison band `(c_M, c_m)` used by the pinched-curvature calculators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Space {
    n: usize,
    c: f64,
    band: Option<(f64, f64)>,
}

impl Space {
    pub fn new(n: usize, c: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("dimension must be >= 2, got {n}")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Config(format!("curvature magnitude must be > 0, got {c}")));
        }
        Ok(Self { n, c, band: None })
    }

    /// Attach a comparison band `c_lo ≤ c ≤ c_hi` (that is `c_M ≤ c ≤ c_m`).
    pub fn with_band(mut self, c_lo: f64, c_hi: f64) -> Result<Self> {
        if !(c_lo >= 0.0 && c_lo <= self.c && self.c <= c_hi && c_hi.is_finite()) {
            return Err(Error::Config(format!("band ({c_lo}, {c_hi}) must satisfy 0 <= c_M <= c = {} <= c_m", self.c)));
        }
        self.band = Some((c_lo, c_hi));
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn curvature(&self) -> f64 {
        self.c
    }

    pub fn sqrt_c(&self) -> f64 {
        self.c.sqrt()
    }

    pub fn band(&self) -> Option<(f64, f64)> {
        self.band
    }

    /// Upper curvature bound magnitude `c_M` (the band's lower end, or `c`).
    pub fn c_upper(&self) -> f64 {
        self.band.map_or(self.c, |b| b.0)
    }

    /// Lower curvature bound magnitude `c_m` (the band's upper end, or `c`).
    pub fn c_lower(&self) -> f64 {
        self.band.map_or(self.c, |b| b.1)
    }

    /// The pole `o = (1/√c, 0, …, 0)`.
    pub fn pole(&self) -> Point {
        let mut coords = vec![0.0; self.n + 1];
        coords[0] = 1.0 / self.sqrt_c();
        Point { coords }
    }

    /// Validate ambient coordinates as a point of this space.
    pub fn point(&self, coords: Vec<f64>) -> Result<Point> {
        if coords.len() != self.n + 1 {
            return Err(Error::Config(format!("point needs {} coordinates, got {}", self.n + 1, coords.len())));
        }
        let p = Point { coords };
        let defect = minkowski(&p.coords, &p.coords) + 1.0 / self.c;
        if defect.abs() > SHEET_TOL * (1.0 + p.coords[0] * p.coords[0]) || p.coords[0] <= 0.0 {
            return Err(Error::Degenerate(format!("coordinates off the hyperboloid sheet (defect {defect:e})")));
        }
        Ok(p)
    }

    /// Lift spatial coordinates `(x₁…xₙ)` onto the upper sheet.
    pub fn lift(&self, spatial: &[f64]) -> Point {
        assert_eq!(spatial.len(), self.n);
        let mut coords = Vec::with_capacity(self.n + 1);
        coords.push(0.0);
        coords.extend_from_slice(spatial);
        let mut p = Point { coords };
        self.renormalize(&mut p.coords);
        p
    }

    /// Point at geodesic distance `theta` from the pole in unit direction `dir`.
    pub fn polar_point(&self, theta: f64, dir: &[f64]) -> Point {
        let r = (self.sqrt_c() * theta).sinh() / self.sqrt_c();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        let spatial: Vec<f64> = dir.iter().map(|v| r * v / norm).collect();
        self.lift(&spatial)
    }

    /// Restore `⟨x,x⟩_L = -1/c` by recomputing `x₀` from the spatial part.
    pub(crate) fn renormalize(&self, x: &mut [f64]) {
        let s: f64 = x[1..].iter().map(|v| v * v).sum();
        x[0] = (1.0 / self.c + s).sqrt();
    }

    /// Sheet defect `⟨x,x⟩_L + 1/c`.
    pub fn sheet_defect(&self, x: &Point) -> f64 {
        minkowski(&x.coords, &x.coords) + 1.0 / self.c
    }

    /// Geodesic distance `d = arccosh(-c⟨x,y⟩_L)/√c`.
    pub fn distance(&self, x: &Point, y: &Point) -> Result<f64> {
        dist_raw(self.c, &x.coords, &y.coords)
    }

    /// Riemannian exponential `exp_x(v)`.
    pub fn exp_map(&self, x: &Point, v: &Tangent) -> Point {
        let mut out = x.coords.clone();
        exp_raw(self, &x.coords, &v.coords, &mut out);
        Point { coords: out }
    }

    /// Riemannian logarithm `log_x(y)`.
    pub fn log_map(&self, x: &Point, y: &Point) -> Result<Tangent> {
        let d = self.distance(x, y)?;
        let mut v = vec![0.0; self.n + 1];
        if d > 0.0 {
            log_raw(self, &x.coords, &y.coords, d, &mut v);
        }
        Ok(Tangent { base: x.clone(), coords: v })
    }

    /// Zero vector in `T_x`.
    pub fn zero_tangent(&self, x: &Point) -> Tangent {
        Tangent { base: x.clone(), coords: vec![0.0; self.n + 1] }
    }

    /// Project ambient coordinates onto `T_x` and wrap them as a tangent.
    pub fn tangent(&self, x: &Point, ambient: Vec<f64>) -> Tangent {
        let mut coords = ambient;
        project_tangent(self.c, &x.coords, &mut coords);
        Tangent { base: x.clone(), coords }
    }

    /// Tangent at the pole with spatial components `spatial`.
    pub fn pole_tangent(&self, spatial: &[f64]) -> Tangent {
        let mut coords = vec![0.0];
        coords.extend_from_slice(spatial);
        Tangent { base: self.pole(), coords }
    }

    /// `d(x, y) − |log_p x − log_p y|`, nonnegative on any Cartan–Hadamard
    /// manifold by Rauch comparison against the flat tangent space.
    pub fn rauch_gap(&self, x: &Point, y: &Point, pole: &Point) -> Result<f64> {
        let d = self.distance(x, y)?;
        let u = self.log_map(pole, x)?;
        let v = self.log_map(pole, y)?;
        let diff: Vec<f64> = u.coords.iter().zip(&v.coords).map(|(a, b)| a - b).collect();
        let flat = minkowski(&diff, &diff).max(0.0).sqrt();
        Ok(d - flat)
    }

    /// Distance between the points at radii `t1`, `t2` from the pole whose
    /// directions make angle `gamma`, by the hyperbolic law of cosines written
    /// in the cancellation-free form
    /// `sinh²(√c d/2) = sinh²(√c(t1−t2)/2) + sinh(√c t1) sinh(√c t2) sin²(γ/2)`.
    pub fn polar_distance(&self, t1: f64, t2: f64, gamma: f64) -> f64 {
        let k = self.sqrt_c();
        let half = (0.5 * k * (t1 - t2)).sinh();
        let s = (0.5 * gamma).sin();
        let x = half * half + (k * t1).sinh() * (k * t2).sinh() * s * s;
        2.0 * x.sqrt().asinh() / k
    }

    /// Isotropic Gaussian vector in `T_x` with per-axis standard deviation
    /// `scale`: a standard normal in `T_o ≅ ℝⁿ` carried to `T_x` by the
    /// Lorentz boost taking the pole to `x`.
    pub fn gaussian_tangent<R: Rng + ?Sized>(&self, x: &Point, rng: &mut R, scale: f64) -> Tangent {
        let mut coords = vec![0.0; self.n + 1];
        if scale > 0.0 {
            gaussian_tangent_raw(self, &x.coords, rng, scale, &mut coords);
        }
        Tangent { base: x.clone(), coords }
    }
}

/// A point on the hyperboloid sheet, in ambient Minkowski coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub(crate) coords: Vec<f64>,
}

impl Point {
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn spatial(&self) -> &[f64] {
        &self.coords[1..]
    }
}

/// A tangent vector `v ∈ T_x Hⁿ`, stored in ambient coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Tangent {
    pub(crate) base: Point,
    pub(crate) coords: Vec<f64>,
}

impl Tangent {
    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Riemannian norm `√⟨v,v⟩_L`.
    pub fn norm(&self) -> f64 {
        minkowski(&self.coords, &self.coords).max(0.0).sqrt()
    }

    pub fn scaled(&self, s: f64) -> Tangent {
        Tangent { base: self.base.clone(), coords: self.coords.iter().map(|v| v * s).collect() }
    }

    /// Sum of two tangents at the same base point.
    pub fn add(&self, other: &Tangent) -> Tangent {
        debug_assert_eq!(self.coords.len(), other.coords.len());
        Tangent { base: self.base.clone(), coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect() }
    }

    /// Tangency defect `⟨base, v⟩_L`.
    pub fn tangency_defect(&self) -> f64 {
        minkowski(&self.base.coords, &self.coords)
    }
}

/// Minkowski bilinear form `-x₀y₀ + Σ xᵢyᵢ`.
pub fn minkowski(x: &[f64], y: &[f64]) -> f64 {
    let spatial: f64 = x[1..].iter().zip(&y[1..]).map(|(a, b)| a * b).sum();
    spatial - x[0] * y[0]
}

pub(crate) fn dist_raw(c: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    let k = c.sqrt();
    // chordal form: c·⟨x−y,x−y⟩_L = 4 sinh²(√c d / 2), accurate for nearby points
    let mut q = -(x[0] - y[0]) * (x[0] - y[0]);
    for i in 1..x.len() {
        let t = x[i] - y[i];
        q += t * t;
    }
    let q = c * q;
    // rounding in ⟨x,y⟩ grows with the time coordinates
    let scale = (c * x[0] * y[0]).max(1.0);
    if q <= 2.0 {
        if q < -2.0 * ACOSH_TOL * scale {
            return Err(Error::Degenerate(format!("arccosh argument {} below 1", 1.0 + 0.5 * q)));
        }
        return Ok(2.0 * (0.5 * q.max(0.0).sqrt()).asinh() / k);
    }
    let arg = -c * minkowski(x, y);
    if arg < 1.0 - ACOSH_TOL * scale {
        return Err(Error::Degenerate(format!("arccosh argument {arg} below 1")));
    }
    Ok(arg.max(1.0).acosh() / k)
}

/// `out = exp_x(v)`, renormalized onto the sheet.
pub(crate) fn exp_raw(space: &Space, x: &[f64], v: &[f64], out: &mut [f64]) {
    let nv = minkowski(v, v).max(0.0).sqrt();
    if nv == 0.0 {
        out.copy_from_slice(x);
        return;
    }
    let a = space.sqrt_c() * nv;
    let ch = a.cosh();
    let sc = sinhc(a);
    for i in 0..x.len() {
        out[i] = ch * x[i] + sc * v[i];
    }
    space.renormalize(out);
}

/// `out = log_x(y)` given the precomputed distance `d > 0`.
pub(crate) fn log_raw(space: &Space, x: &[f64], y: &[f64], d: f64, out: &mut [f64]) {
    let a = space.sqrt_c() * d;
    let sh = (0.5 * a).sinh();
    let shift = 2.0 * sh * sh;
    let scale = 1.0 / sinhc(a);
    for i in 0..x.len() {
        out[i] = ((y[i] - x[i]) - shift * x[i]) * scale;
    }
    project_tangent(space.curvature(), x, out);
}

/// Remove the component of `v` along `x`: `v ← v + c⟨x,v⟩_L x`.
pub(crate) fn project_tangent(c: f64, x: &[f64], v: &mut [f64]) {
    let ip = c * minkowski(x, v);
    for i in 0..x.len() {
        v[i] += ip * x[i];
    }
}

pub(crate) fn gaussian_tangent_raw<R: Rng + ?Sized>(
    space: &Space,
    x: &[f64],
    rng: &mut R,
    scale: f64,
    out: &mut [f64],
) {
    let k = space.sqrt_c();
    let x0 = k * x[0];
    let mut s = 0.0;
    for i in 1..x.len() {
        let z: f64 = rng.sample(StandardNormal);
        out[i] = z;
        s += k * x[i] * z;
    }
    out[0] = s;
    let f = s / (x0 + 1.0);
    for i in 1..x.len() {
        out[i] += f * k * x[i];
    }
    for v in out.iter_mut() {
        *v *= scale;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_point<R: Rng>(space: &Space, rng: &mut R, spread: f64) -> Point {
        let spatial: Vec<f64> = (0..space.dim()).map(|_| spread * rng.sample::<f64, _>(StandardNormal)).collect();
        space.lift(&spatial)
    }

    #[test]
    fn space_validation() {
        assert!(Space::new(1, 1.0).is_err());
        assert!(Space::new(2, 0.0).is_err());
        assert!(Space::new(2, -1.0).is_err());
        let s = Space::new(3, 1.0).unwrap();
        assert!(s.with_band(0.5, 2.0).is_ok());
        assert!(s.with_band(1.5, 2.0).is_err());
        assert!(s.with_band(-0.1, 2.0).is_err());
        assert!(s.with_band(0.5, 0.9).is_err());
    }

    #[test]
    fn distance_examples() {
        let s = Space::new(2, 1.0).unwrap();
        let o = s.pole();
        assert_eq!(s.distance(&o, &o).unwrap(), 0.0);
        let y = s.point(vec![1f64.cosh(), 1f64.sinh(), 0.0]).unwrap();
        assert!((s.distance(&o, &y).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn distance_rejects_points_off_sheet() {
        let s = Space::new(2, 1.0).unwrap();
        let bad = Point { coords: vec![0.5, 0.0, 0.0] };
        let err = s.distance(&s.pole(), &bad).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
        assert!(s.point(vec![2.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn exp_of_zero_and_unit_speed() {
        let s = Space::new(3, 0.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_point(&s, &mut rng, 1.0);
        let zero = s.zero_tangent(&x);
        assert_eq!(s.exp_map(&x, &zero), x);
        let v = s.gaussian_tangent(&x, &mut rng, 1.0);
        let v = v.scaled(1.3 / v.norm());
        let y = s.exp_map(&x, &v);
        assert!((s.distance(&x, &y).unwrap() - 1.3).abs() < 1e-9);
    }

    #[test]
    fn exp_log_round_trip() {
        for &(n, c) in &[(2, 1.0), (3, 4.0), (4, 0.25)] {
            let s = Space::new(n, c).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            for _ in 0..200 {
                let x = random_point(&s, &mut rng, 0.8);
                let len = 10.0 * rng.random::<f64>();
                let v = s.gaussian_tangent(&x, &mut rng, 1.0);
                let v = v.scaled(len / v.norm());
                let y = s.exp_map(&x, &v);
                assert!(s.sheet_defect(&y).abs() < 1e-9 * (1.0 + y.coords[0].powi(2)));
                let w = s.log_map(&x, &y).unwrap();
                let err: f64 = w.coords.iter().zip(&v.coords).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(err < 1e-8 * (1.0 + x.coords[0].powi(2)), "n={n} c={c} err={err}");
                let back = s.exp_map(&x, &w);
                let gap = s.distance(&back, &y).unwrap();
                // points far from the pole are only resolved to about ε·√c·y₀
                let resolution = 1e-8 + 64.0 * f64::EPSILON * c.sqrt() * y.coords[0];
                assert!(gap < resolution, "n={n} c={c} len={len} gap={gap}");
            }
        }
    }

    #[test]
    fn log_of_self_is_zero() {
        let s = Space::new(2, 1.0).unwrap();
        let x = s.lift(&[0.3, -0.2]);
        assert!(s.log_map(&x, &x).unwrap().norm() == 0.0);
    }

    #[test]
    fn radial_points_are_isometric_to_a_ray() {
        let s = Space::new(3, 2.0).unwrap();
        let dir = [0.2, -0.5, 0.7];
        let x = s.polar_point(0.4, &dir);
        let y = s.polar_point(2.9, &dir);
        let o = s.pole();
        let u = s.log_map(&o, &x).unwrap();
        let v = s.log_map(&o, &y).unwrap();
        let diff: Vec<f64> = u.coords.iter().zip(&v.coords).map(|(a, b)| a - b).collect();
        let flat = minkowski(&diff, &diff).sqrt();
        assert!((flat - 2.5).abs() < 1e-12);
        assert!((s.distance(&x, &y).unwrap() - 2.5).abs() < 1e-12);
        assert!(s.rauch_gap(&x, &y, &o).unwrap().abs() < 1e-9);
    }

    #[test]
    fn rauch_gap_nonnegative_and_small_in_flat_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &(n, c) in &[(2, 0.25), (3, 1.0), (4, 4.0)] {
            let s = Space::new(n, c).unwrap();
            let o = s.pole();
            for _ in 0..300 {
                let x = random_point(&s, &mut rng, 2.0);
                let y = random_point(&s, &mut rng, 2.0);
                assert!(s.rauch_gap(&x, &y, &o).unwrap() >= -1e-9);
            }
        }
        let s = Space::new(2, 1.0).unwrap();
        let x = s.polar_point(1e-3, &[1.0, 0.0]);
        let y = s.polar_point(1e-3, &[0.0, 1.0]);
        assert!(s.rauch_gap(&x, &y, &s.pole()).unwrap() < 1e-9);
    }

    #[test]
    fn polar_distance_matches_constructed_points() {
        let s = Space::new(2, 1.0).unwrap();
        assert!((s.polar_distance(1.0, 2.5, 0.0) - 1.5).abs() < 1e-12);
        assert!((s.polar_distance(1.0, 2.5, std::f64::consts::PI) - 3.5).abs() < 1e-12);
        let expected = (1f64.cosh().powi(2)).acosh();
        let d = s.polar_distance(1.0, 1.0, std::f64::consts::FRAC_PI_2);
        assert!((d - expected).abs() < 1e-12);
        assert!((expected - 1.513374).abs() < 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let t1 = 4.0 * rng.random::<f64>();
            let t2 = 4.0 * rng.random::<f64>();
            let g = std::f64::consts::PI * rng.random::<f64>();
            let x = s.polar_point(t1, &[1.0, 0.0]);
            let y = s.polar_point(t2, &[g.cos(), g.sin()]);
            let d = s.polar_distance(t1, t2, g);
            assert!((d - s.distance(&x, &y).unwrap()).abs() < 1e-9);
            assert!(d >= (t1 - t2).abs() - 1e-12 && d <= t1 + t2 + 1e-12);
        }
    }

    #[test]
    fn gaussian_tangent_is_tangent_and_zero_scale_is_zero() {
        let s = Space::new(3, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_point(&s, &mut rng, 1.5);
        assert_eq!(s.gaussian_tangent(&x, &mut rng, 0.0).norm(), 0.0);
        for _ in 0..50 {
            let v = s.gaussian_tangent(&x, &mut rng, 0.7);
            assert!(v.tangency_defect().abs() < 1e-10 * (1.0 + x.coords[0].powi(2)));
        }
    }

    #[test]
    fn gaussian_tangent_second_moment() {
        let s = Space::new(3, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = s.lift(&[0.4, 1.1, -0.3]);
        let scale = 0.5;
        let samples = 100_000;
        let mut m2 = 0.0;
        let mut mean = vec![0.0; 4];
        for _ in 0..samples {
            let v = s.gaussian_tangent(&x, &mut rng, scale);
            m2 += minkowski(&v.coords, &v.coords);
            for (m, c) in mean.iter_mut().zip(&v.coords) {
                *m += c;
            }
        }
        m2 /= samples as f64;
        let expected = 3.0 * scale * scale;
        assert!((m2 - expected).abs() < 0.02 * expected, "m2={m2}");
        // the boost frame has ambient components of size up to x0·scale
        let bound = 3.0 * scale * (x.coords[0] + 1.0) / (samples as f64).sqrt();
        for m in mean {
            assert!((m / samples as f64).abs() < bound);
        }
    }

    #[test]
    fn triangle_inequality_on_random_triples() {
        let s = Space::new(3, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..500 {
            let x = random_point(&s, &mut rng, 2.0);
            let y = random_point(&s, &mut rng, 2.0);
            let z = random_point(&s, &mut rng, 2.0);
            let dxz = s.distance(&x, &z).unwrap();
            let dxy = s.distance(&x, &y).unwrap();
            let dyz = s.distance(&y, &z).unwrap();
            assert!(dxz <= dxy + dyz + 1e-9);
            assert!((dxy - s.distance(&y, &x).unwrap()).abs() < 1e-12);
        }
    }
}
