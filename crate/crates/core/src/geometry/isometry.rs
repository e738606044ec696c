//! Lorentz transformations preserving the hyperboloid: boosts moving a point
//! to the pole and spatial rotations fixing it.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{Point, Space};

/// Linear isometry of Minkowski space restricted to the sheet, stored as a
/// dense row-major `(n+1)×(n+1)` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Isometry {
    dim: usize,
    m: Vec<f64>,
}

impl Isometry {
    pub fn identity(space: &Space) -> Self {
        let dim = space.dim() + 1;
        let mut m = vec![0.0; dim * dim];
        for i in 0..dim {
            m[i * dim + i] = 1.0;
        }
        Self { dim, m }
    }

    /// Boost taking `p` to the pole.
    pub fn boost_to_pole(space: &Space, p: &Point) -> Self {
        Self::boost(space, p, -1.0)
    }

    /// Boost taking the pole to `p`.
    pub fn boost_from_pole(space: &Space, p: &Point) -> Self {
        Self::boost(space, p, 1.0)
    }

    fn boost(space: &Space, p: &Point, sign: f64) -> Self {
        let dim = space.dim() + 1;
        let k = space.sqrt_c();
        let p0 = k * p.coords[0];
        let ps: Vec<f64> = p.coords[1..].iter().map(|v| k * v).collect();
        let mut m = vec![0.0; dim * dim];
        m[0] = p0;
        for j in 1..dim {
            m[j] = sign * ps[j - 1];
            m[j * dim] = sign * ps[j - 1];
        }
        let f = 1.0 / (p0 + 1.0);
        for i in 1..dim {
            for j in 1..dim {
                m[i * dim + j] = if i == j { 1.0 } else { 0.0 } + f * ps[i - 1] * ps[j - 1];
            }
        }
        Self { dim, m }
    }

    /// Rotation acting on the spatial coordinates by the orthogonal matrix
    /// `rot` (row-major `n×n`).
    pub fn rotation(space: &Space, rot: &[f64]) -> Self {
        let n = space.dim();
        assert_eq!(rot.len(), n * n);
        let mut iso = Self::identity(space);
        for i in 0..n {
            for j in 0..n {
                iso.m[(i + 1) * iso.dim + (j + 1)] = rot[i * n + j];
            }
        }
        iso
    }

    /// Random rotation (Gram–Schmidt of a Gaussian matrix) followed by a boost
    /// taking the pole to a random point at Gaussian spatial offset `spread`.
    pub fn random<R: Rng + ?Sized>(space: &Space, rng: &mut R, spread: f64) -> Self {
        let n = space.dim();
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
        while rows.len() < n {
            let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            for r in &rows {
                let d: f64 = r.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (x, y) in v.iter_mut().zip(r) {
                    *x -= d * y;
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-8 {
                rows.push(v.into_iter().map(|x| x / norm).collect());
            }
        }
        let rot: Vec<f64> = rows.into_iter().flatten().collect();
        let target: Vec<f64> = (0..n).map(|_| spread * rng.sample::<f64, _>(StandardNormal)).collect();
        let boost = Self::boost_from_pole(space, &space.lift(&target));
        boost.compose(&Self::rotation(space, &rot))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        let d = self.dim;
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.m[i * d + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..d {
                    m[i * d + j] += a * other.m[k * d + j];
                }
            }
        }
        Isometry { dim: d, m }
    }

    pub fn apply(&self, space: &Space, p: &Point) -> Point {
        let mut out = vec![0.0; self.dim];
        self.apply_raw(&p.coords, &mut out);
        space.renormalize(&mut out);
        Point { coords: out }
    }

    pub(crate) fn apply_raw(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for (o, row) in out.iter_mut().zip(self.m.chunks_exact(d)) {
            *o = row.iter().zip(x).map(|(m, v)| m * v).sum();
        }
    }
}
