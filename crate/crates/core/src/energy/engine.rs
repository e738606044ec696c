//! Cell-averaged pair kernels for radial densities.
//!
//! For cells `i, j` of a radial grid the engine computes
//!
//! ```text
//! Mᵢⱼ = (ΔVᵢ ΔVⱼ)⁻¹ ∬_{cell i × cell j} F(θ₁, θ₂) S(θ₁) S(θ₂) dθ₁ dθ₂
//! F(θ₁, θ₂) = ∫₀^π f(d(θ₁, θ₂, γ)) w_n(γ) dγ,   w_n ∝ sin^{n−2} γ
//! ```
//!
//! so that for a piecewise-constant density with cell masses `mᵢ`
//!
//! ```text
//! ∬ f(d(x,y)) ρ(x) ρ(y) dx dy = mᵀ M m,     (W*ρ)ᵢ = (M m)ᵢ
//! ```
//!
//! Every discrete rule is renormalized to total weight one, so a constant
//! kernel is reproduced exactly.
//!
//! The distance is written through `u = A + B sin²(γ/2)`:
//!
//! ```text
//! hyperbolic: A = sinh²(√c(θ₁−θ₂)/2), B = sinh(√c θ₁) sinh(√c θ₂), d = 2 asinh(√u)/√c
//! euclidean:  A = (θ₁−θ₂)²,           B = 4 θ₁ θ₂,                 d = √u
//! ```
//!
//! `F` varies on the angular scale `γ* ≈ 2√(A/B)`, which is tiny near the
//! diagonal and far from the pole. The angular rule is therefore a composite
//! Gauss–Legendre rule on the dyadic segments `[π/2^{l+1}, π/2^l]`, refined
//! until the bottom segment is below `γ*/4`. Diagonal cells are integrated
//! over two triangles with a collapsed rule so nodes never coincide.

use rayon::prelude::*;

use crate::geometry::comparison::sphere_area_at;
use crate::quadrature::{unit_sphere_area, GaussLegendre};

/// Geometry of the radial coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Hyperbolic { c: f64 },
    Euclidean,
}

impl Metric {
    #[inline]
    fn split(&self, a: f64, b: f64) -> (f64, f64) {
        match *self {
            Metric::Hyperbolic { c } => {
                let k = c.sqrt();
                let s = (0.5 * k * (a - b)).sinh();
                (s * s, (k * a).sinh() * (k * b).sinh())
            }
            Metric::Euclidean => ((a - b) * (a - b), 4.0 * a * b),
        }
    }

    #[inline]
    fn distance(&self, u: f64) -> f64 {
        match *self {
            Metric::Hyperbolic { c } => 2.0 * u.sqrt().asinh() / c.sqrt(),
            Metric::Euclidean => u.sqrt(),
        }
    }

    pub fn sphere_area(&self, n: usize, t: f64) -> f64 {
        match *self {
            Metric::Hyperbolic { c } => sphere_area_at(n, c, t),
            Metric::Euclidean => unit_sphere_area(n) * t.powi(n as i32 - 1),
        }
    }
}

/// Node counts of the cell-pair rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rules {
    /// Gauss–Legendre nodes per cell for well-separated cells.
    pub far: usize,
    /// Nodes per cell for neighbouring cells.
    pub near: usize,
    /// Nodes per direction of the collapsed triangle rule on the diagonal.
    pub diag: usize,
    /// Gauss–Legendre nodes per dyadic angular segment.
    pub per_level: usize,
}

impl Default for Rules {
    fn default() -> Self {
        Self { far: 3, near: 8, diag: 8, per_level: 8 }
    }
}

impl Rules {
    /// Roughly half the nodes in every direction; used for error estimates.
    pub fn coarse(&self) -> Self {
        Self {
            far: (self.far / 2).max(1),
            near: (self.near / 2).max(2),
            diag: (self.diag / 2).max(2),
            per_level: (self.per_level / 2).max(2),
        }
    }
}

const MAX_LEVELS: usize = 48;

/// Dyadically graded angular rules, one per refinement depth.
#[derive(Debug, Clone)]
pub struct AngularRule {
    /// `levels[l]`: `(sin²(γ/2), weight)` on `[π/2^{l+1}, π/2^l]`.
    levels: Vec<Vec<(f64, f64)>>,
    /// `bottom[L]`: nodes on `[0, π/2^L]`.
    bottom: Vec<Vec<(f64, f64)>>,
    /// `totals[L]`: total weight of the depth-`L` rule.
    totals: Vec<f64>,
}

impl AngularRule {
    pub fn new(n: usize, per_level: usize) -> Self {
        let gl = GaussLegendre::new(per_level);
        let weight = |g: f64| if n == 2 { 1.0 } else { g.sin().powi(n as i32 - 2) };
        let segment = |a: f64, b: f64| -> Vec<(f64, f64)> {
            gl.mapped(a, b)
                .map(|(g, w)| {
                    let s = (0.5 * g).sin();
                    (s * s, w * weight(g))
                })
                .collect()
        };
        let pi = std::f64::consts::PI;
        let levels: Vec<_> =
            (0..MAX_LEVELS).map(|l| segment(pi / 2f64.powi(l as i32 + 1), pi / 2f64.powi(l as i32))).collect();
        let bottom: Vec<_> = (0..=MAX_LEVELS).map(|l| segment(0.0, pi / 2f64.powi(l as i32))).collect();
        let mut totals = Vec::with_capacity(MAX_LEVELS + 1);
        let mut acc = 0.0;
        for l in 0..=MAX_LEVELS {
            let b: f64 = bottom[l].iter().map(|p| p.1).sum();
            totals.push(acc + b);
            if l < MAX_LEVELS {
                acc += levels[l].iter().map(|p| p.1).sum::<f64>();
            }
        }
        Self { levels, bottom, totals }
    }

    /// Normalized angular average of `f(d)` for one pair of radii.
    #[inline]
    pub fn average<F: Fn(f64) -> f64 + ?Sized>(&self, metric: Metric, a: f64, b: f64, f: &F) -> f64 {
        let (big_a, big_b) = metric.split(a, b);
        let depth = if big_b <= 0.0 || big_a >= big_b {
            1
        } else {
            let gamma_star = 2.0 * (big_a / big_b).sqrt();
            if gamma_star == 0.0 {
                MAX_LEVELS
            } else {
                ((4.0 * std::f64::consts::PI / gamma_star).log2().ceil().max(1.0) as usize).min(MAX_LEVELS)
            }
        };
        let mut acc = 0.0;
        for level in &self.levels[..depth] {
            for &(s, w) in level {
                acc += w * f(metric.distance(big_a + big_b * s));
            }
        }
        for &(s, w) in &self.bottom[depth] {
            acc += w * f(metric.distance(big_a + big_b * s));
        }
        acc / self.totals[depth]
    }
}

/// Symmetric matrix of cell-averaged kernel values.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    cells: usize,
    m: Vec<f64>,
}

struct CellNodes {
    far: Vec<(f64, f64)>,
    near: Vec<(f64, f64)>,
}

fn cell_nodes(metric: Metric, n: usize, lo: f64, hi: f64, rule: &GaussLegendre) -> Vec<(f64, f64)> {
    let raw: Vec<(f64, f64)> = rule.mapped(lo, hi).map(|(t, w)| (t, w * metric.sphere_area(n, t))).collect();
    let total: f64 = raw.iter().map(|p| p.1).sum();
    raw.into_iter().map(|(t, w)| (t, w / total)).collect()
}

/// Collapsed rule on `{lo ≤ θ₂ < θ₁ < hi}` with weights `S(θ₁)S(θ₂)`,
/// normalized to total weight one. Areas are scaled by `S(hi)` so the
/// product stays finite far from the pole.
fn triangle_nodes(metric: Metric, n: usize, lo: f64, hi: f64, rule: &GaussLegendre) -> Vec<(f64, f64, f64)> {
    let h = hi - lo;
    let scale = metric.sphere_area(n, hi);
    let mut out = Vec::with_capacity(rule.len() * rule.len());
    for (x, wx) in rule.mapped(0.0, 1.0) {
        let a = lo + h * x;
        let sa = metric.sphere_area(n, a) / scale;
        for (y, wy) in rule.mapped(0.0, 1.0) {
            let b = lo + h * x * y;
            out.push((a, b, wx * wy * x * sa * (metric.sphere_area(n, b) / scale)));
        }
    }
    let total: f64 = out.iter().map(|p| p.2).sum();
    out.into_iter().map(|(a, b, w)| (a, b, w / total)).collect()
}

impl KernelMatrix {
    /// Builds `M` for kernel `f` on the grid `edges`. Rows are computed in
    /// parallel and assembled in index order.
    pub fn build<F>(metric: Metric, n: usize, edges: &[f64], f: &F, rules: Rules) -> Self
    where
        F: Fn(f64) -> f64 + Sync + ?Sized,
    {
        let cells = edges.len() - 1;
        let gl_far = GaussLegendre::new(rules.far);
        let gl_near = GaussLegendre::new(rules.near);
        let gl_diag = GaussLegendre::new(rules.diag);
        let angular = AngularRule::new(n, rules.per_level);
        let nodes: Vec<CellNodes> = edges
            .windows(2)
            .map(|w| CellNodes {
                far: cell_nodes(metric, n, w[0], w[1], &gl_far),
                near: cell_nodes(metric, n, w[0], w[1], &gl_near),
            })
            .collect();

        let rows: Vec<Vec<f64>> = (0..cells)
            .into_par_iter()
            .map(|i| {
                let mut row = Vec::with_capacity(cells - i);
                let tri = triangle_nodes(metric, n, edges[i], edges[i + 1], &gl_diag);
                row.push(tri.iter().map(|&(a, b, w)| w * angular.average(metric, a, b, f)).sum());
                for j in i + 1..cells {
                    let (ni, nj) =
                        if j == i + 1 { (&nodes[i].near, &nodes[j].near) } else { (&nodes[i].far, &nodes[j].far) };
                    let mut acc = 0.0;
                    for &(a, wa) in ni {
                        for &(b, wb) in nj {
                            acc += wa * wb * angular.average(metric, a, b, f);
                        }
                    }
                    row.push(acc);
                }
                row
            })
            .collect();

        let mut m = vec![0.0; cells * cells];
        for (i, row) in rows.into_iter().enumerate() {
            for (k, v) in row.into_iter().enumerate() {
                let j = i + k;
                m[i * cells + j] = v;
                m[j * cells + i] = v;
            }
        }
        Self { cells, m }
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i * self.cells + j]
    }

    /// `(M m)ᵢ`: the convolution `W*ρ` averaged over cell `i`.
    pub fn apply(&self, masses: &[f64]) -> Vec<f64> {
        (0..self.cells)
            .map(|i| {
                let row = &self.m[i * self.cells..(i + 1) * self.cells];
                row.iter().zip(masses).map(|(k, m)| k * m).sum()
            })
            .collect()
    }

    /// `mᵀ M m`.
    pub fn pair_sum(&self, masses: &[f64]) -> f64 {
        self.apply(masses).iter().zip(masses).map(|(w, m)| w * m).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::lin_edges;

    #[test]
    fn constant_kernel_is_exact() {
        for n in [2, 3, 4] {
            let edges = lin_edges(0.0, 3.0, 7);
            let k = KernelMatrix::build(Metric::Hyperbolic { c: 1.0 }, n, &edges, &|_| 2.5, Rules::default());
            for i in 0..7 {
                for j in 0..7 {
                    assert!((k.get(i, j) - 2.5).abs() < 1e-14);
                }
            }
        }
    }

    /// In the plane the angular mean of `log|x − y|` is `log max(r₁, r₂)`.
    #[test]
    fn planar_log_average() {
        let rule = AngularRule::new(2, 8);
        for &(a, b) in &[(1.0, 0.3), (0.5, 0.5), (2.0, 1.999), (1e-3, 5.0)] {
            let v = rule.average(Metric::Euclidean, a, b, &|d: f64| d.ln());
            let exact = f64::max(a, b).ln();
            assert!((v - exact).abs() < 1e-9, "({a}, {b}): {v} vs {exact}");
        }
    }

    /// In ℝ³ the mean of `|x − y|` over directions is `(a+b)³ − |a−b|³` over `6ab`.
    #[test]
    fn spatial_distance_average() {
        let rule = AngularRule::new(3, 8);
        for &(a, b) in &[(1.0, 0.3), (0.5, 0.5), (2.0, 1.999)] {
            let v = rule.average(Metric::Euclidean, a, b, &|d: f64| d);
            let exact = ((a + b).powi(3) - (a - b).abs().powi(3)) / (6.0 * a * b);
            assert!((v - exact).abs() < 1e-12, "({a}, {b}): {v} vs {exact}");
        }
    }

    #[test]
    fn hyperbolic_average_far_from_pole() {
        // brute-force composite trapezoid on a fine log grid as oracle
        let rule = AngularRule::new(2, 8);
        let metric = Metric::Hyperbolic { c: 1.0 };
        let (a, b) = (12.0, 11.5);
        let f = |d: f64| 3.0 * d;
        let v = rule.average(metric, a, b, &f);
        let dist = |g: f64| {
            let s = (0.5 * g).sin();
            let (big_a, big_b) = metric.split(a, b);
            metric.distance(big_a + big_b * s * s)
        };
        let m = 400_000;
        let lo = 1e-12f64.ln();
        let hi = std::f64::consts::PI.ln();
        let mut acc = 0.0;
        for k in 0..m {
            let t0 = lo + (hi - lo) * k as f64 / m as f64;
            let t1 = lo + (hi - lo) * (k + 1) as f64 / m as f64;
            let (g0, g1) = (t0.exp(), t1.exp());
            acc += 0.5 * (f(dist(g0)) * g0 + f(dist(g1)) * g1) * (t1 - t0);
        }
        acc += f(dist(0.0)) * 1e-12;
        let oracle = acc / std::f64::consts::PI;
        assert!((v - oracle).abs() < 1e-6 * oracle, "{v} vs {oracle}");
    }

    #[test]
    fn matrix_is_symmetric() {
        let edges = lin_edges(0.0, 2.0, 9);
        let k = KernelMatrix::build(Metric::Hyperbolic { c: 0.5 }, 3, &edges, &|d: f64| d * d, Rules::default());
        for i in 0..9 {
            for j in 0..9 {
                assert_eq!(k.get(i, j), k.get(j, i));
            }
        }
    }
}
