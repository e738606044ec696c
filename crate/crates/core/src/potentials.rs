//! Attractive interaction profiles `h(θ)` and the regime bookkeeping
//! attached to them.
//!
//! Every potential carries declared asymptotic descriptors: the strength of
//! its singularity at `θ → 0` and its growth class at `θ → ∞`. Built-in
//! families fill these in exactly; tabulated potentials must declare them.
//! The regime classifier only reads descriptors, never samples.
//!
//! The value `-∞` (at `θ = 0` for logarithmic or power singularities) is
//! returned as `f64::NEG_INFINITY`, which absorbs any finite addend.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{golden_section, log_sinhc, log_space};

/// Behaviour of `h` as `θ → 0⁺`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Singularity {
    /// `h(0⁺)` finite.
    Bounded,
    /// `h(θ) ~ A₁ log θ`.
    Log { a1: f64 },
    /// `h(θ) ~ −θ^{−k}`; integrable against a bounded density iff `k < n`.
    Power { k: f64 },
}

/// Superlinear envelope `ℓ`, nondecreasing and convex with `ℓ(θ)/θ → ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Envelope {
    Power { coeff: f64, alpha: f64 },
    Exponential { coeff: f64, rate: f64 },
}

impl Envelope {
    pub fn eval(&self, theta: f64) -> f64 {
        match *self {
            Envelope::Power { coeff, alpha } => coeff * theta.powf(alpha),
            Envelope::Exponential { coeff, rate } => coeff * (rate * theta).exp_m1(),
        }
    }

    /// Numerical check of monotonicity, convexity and `ℓ(θ)/θ → ∞` on a grid.
    pub fn is_valid(&self) -> bool {
        let grid = log_space(1e-3, 1e3, 400);
        let vals: Vec<f64> = grid.iter().map(|&t| self.eval(t)).collect();
        if vals.iter().any(|v| v.is_nan()) {
            return false;
        }
        let monotone = vals.windows(2).all(|w| w[1] >= w[0]);
        let convex = grid.windows(3).zip(vals.windows(3)).all(|(t, v)| {
            let s1 = (v[1] - v[0]) / (t[1] - t[0]);
            let s2 = (v[2] - v[1]) / (t[2] - t[1]);
            s2 >= s1 * (1.0 - 1e-9) || !s2.is_finite()
        });
        let ratios: Vec<f64> = [10.0, 100.0, 1000.0].iter().map(|&t| self.eval(t) / t).collect();
        let growing = ratios[2] > 10.0 * ratios[0].max(1e-300) && ratios[1] > ratios[0] && ratios[2] > ratios[1];
        monotone && convex && growing
    }
}

/// Growth class of `h` as `θ → ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Growth {
    Sublinear,
    /// `h(θ) ~ slope·θ`; with `slope = A₂·√c` relative to a curvature `c`.
    Linear {
        slope: f64,
    },
    Superlinear {
        envelope: Envelope,
    },
}

/// Declared asymptotics. `None` marks an undeclared descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Descriptors {
    pub singularity: Option<Singularity>,
    pub growth: Option<Growth>,
}

/// Monotone piecewise-cubic (Fritsch–Carlson) interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    theta: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl Table {
    pub fn new(theta: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if theta.len() < 2 || theta.len() != values.len() {
            return Err(Error::Config("tabulated potential needs >= 2 matching (theta, h) pairs".into()));
        }
        if theta.windows(2).any(|w| !(w[1] > w[0])) || theta[0] < 0.0 {
            return Err(Error::Config("tabulated theta must be nonnegative and strictly increasing".into()));
        }
        if values.windows(2).any(|w| w[1] < w[0]) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("tabulated h must be finite and nondecreasing".into()));
        }
        let k = theta.len();
        let secants: Vec<f64> = (0..k - 1).map(|i| (values[i + 1] - values[i]) / (theta[i + 1] - theta[i])).collect();
        let mut slopes = vec![0.0; k];
        slopes[0] = secants[0];
        slopes[k - 1] = secants[k - 2];
        for i in 1..k - 1 {
            slopes[i] = if secants[i - 1] * secants[i] <= 0.0 { 0.0 } else { 0.5 * (secants[i - 1] + secants[i]) };
        }
        for i in 0..k - 1 {
            if secants[i] == 0.0 {
                slopes[i] = 0.0;
                slopes[i + 1] = 0.0;
                continue;
            }
            let a = slopes[i] / secants[i];
            let b = slopes[i + 1] / secants[i];
            let r = a * a + b * b;
            if r > 9.0 {
                let t = 3.0 / r.sqrt();
                slopes[i] = t * a * secants[i];
                slopes[i + 1] = t * b * secants[i];
            }
        }
        Ok(Self { theta, values, slopes })
    }

    fn locate(&self, t: f64) -> usize {
        match self.theta.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(self.theta.len() - 2),
            Err(i) => (i - 1).min(self.theta.len() - 2),
        }
    }

    fn eval(&self, t: f64) -> f64 {
        let k = self.theta.len();
        if t <= self.theta[0] {
            return self.values[0];
        }
        if t >= self.theta[k - 1] {
            return self.values[k - 1] + self.slopes[k - 1] * (t - self.theta[k - 1]);
        }
        let i = self.locate(t);
        let h = self.theta[i + 1] - self.theta[i];
        let s = (t - self.theta[i]) / h;
        let (h00, h10, h01, h11) = hermite(s);
        h00 * self.values[i] + h10 * h * self.slopes[i] + h01 * self.values[i + 1] + h11 * h * self.slopes[i + 1]
    }

    fn deriv(&self, t: f64) -> f64 {
        let k = self.theta.len();
        if t < self.theta[0] {
            return 0.0;
        }
        if t >= self.theta[k - 1] {
            return self.slopes[k - 1];
        }
        let i = self.locate(t);
        let h = self.theta[i + 1] - self.theta[i];
        let s = (t - self.theta[i]) / h;
        let d00 = 6.0 * s * s - 6.0 * s;
        let d10 = 3.0 * s * s - 4.0 * s + 1.0;
        let d01 = -6.0 * s * s + 6.0 * s;
        let d11 = 3.0 * s * s - 2.0 * s;
        (d00 * self.values[i] + d01 * self.values[i + 1]) / h + d10 * self.slopes[i] + d11 * self.slopes[i + 1]
    }
}

fn hermite(s: f64) -> (f64, f64, f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0, s3 - 2.0 * s2 + s, -2.0 * s3 + 3.0 * s2, s3 - s2)
}

/// Functional form of an interaction profile.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Constant {
        value: f64,
    },
    /// `coeff·θ^α`; `coeff·α ≥ 0` keeps it nondecreasing.
    PowerLaw {
        coeff: f64,
        alpha: f64,
    },
    /// `A₁ log θ`.
    Log {
        a1: f64,
    },
    /// `A₁ log θ + slope·θ`.
    LogLinear {
        a1: f64,
        slope: f64,
    },
    /// `slope·θ`.
    Linear {
        slope: f64,
    },
    /// `coeff·(e^{rate·θ} − 1)`.
    Exponential {
        coeff: f64,
        rate: f64,
    },
    Tabulated(Table),
}

/// An interaction profile `h` with declared asymptotics and an additive offset.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    family: Family,
    offset: f64,
    descriptors: Descriptors,
}

impl Potential {
    pub fn constant(value: f64) -> Self {
        Self::from_family(Family::Constant { value }).expect("constant potential is always valid")
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn power_law(coeff: f64, alpha: f64) -> Result<Self> {
        Self::from_family(Family::PowerLaw { coeff, alpha })
    }

    pub fn log(a1: f64) -> Result<Self> {
        Self::from_family(Family::Log { a1 })
    }

    pub fn log_linear(a1: f64, slope: f64) -> Result<Self> {
        Self::from_family(Family::LogLinear { a1, slope })
    }

    pub fn linear(slope: f64) -> Result<Self> {
        Self::from_family(Family::Linear { slope })
    }

    /// `h(θ) = A₂·√c·θ`.
    pub fn linear_a2(a2: f64, c: f64) -> Result<Self> {
        Self::linear(a2 * c.sqrt())
    }

    pub fn exponential(coeff: f64, rate: f64) -> Result<Self> {
        Self::from_family(Family::Exponential { coeff, rate })
    }

    /// Tabulated profile; descriptors are whatever the caller declares.
    pub fn tabulated(theta: Vec<f64>, values: Vec<f64>, descriptors: Descriptors) -> Result<Self> {
        let table = Table::new(theta, values)?;
        let p = Self { family: Family::Tabulated(table), offset: 0.0, descriptors };
        p.validate_descriptors()?;
        Ok(p)
    }

    pub fn from_family(family: Family) -> Result<Self> {
        let bad = |msg: &str| Err(Error::Config(format!("{msg}: {family:?}")));
        let descriptors = match family {
            Family::Constant { value } => {
                if !value.is_finite() {
                    return bad("constant must be finite");
                }
                Descriptors { singularity: Some(Singularity::Bounded), growth: Some(Growth::Sublinear) }
            }
            Family::PowerLaw { coeff, alpha } => {
                if !(coeff.is_finite() && alpha.is_finite()) || coeff * alpha < 0.0 {
                    return bad("power law must satisfy coeff·alpha >= 0");
                }
                let singularity =
                    if alpha < 0.0 && coeff != 0.0 { Singularity::Power { k: -alpha } } else { Singularity::Bounded };
                let growth = if alpha < 1.0 || coeff == 0.0 {
                    Growth::Sublinear
                } else if alpha == 1.0 {
                    Growth::Linear { slope: coeff }
                } else {
                    Growth::Superlinear { envelope: Envelope::Power { coeff, alpha } }
                };
                Descriptors { singularity: Some(singularity), growth: Some(growth) }
            }
            Family::Log { a1 } => {
                if !(a1 > 0.0 && a1.is_finite()) {
                    return bad("log potential needs A1 > 0");
                }
                Descriptors { singularity: Some(Singularity::Log { a1 }), growth: Some(Growth::Sublinear) }
            }
            Family::LogLinear { a1, slope } => {
                if !(a1 >= 0.0 && slope >= 0.0 && a1.is_finite() && slope.is_finite()) {
                    return bad("log-linear potential needs A1 >= 0 and slope >= 0");
                }
                let singularity = if a1 > 0.0 { Singularity::Log { a1 } } else { Singularity::Bounded };
                let growth = if slope > 0.0 { Growth::Linear { slope } } else { Growth::Sublinear };
                Descriptors { singularity: Some(singularity), growth: Some(growth) }
            }
            Family::Linear { slope } => {
                if !(slope >= 0.0 && slope.is_finite()) {
                    return bad("linear potential needs slope >= 0");
                }
                let growth = if slope > 0.0 { Growth::Linear { slope } } else { Growth::Sublinear };
                Descriptors { singularity: Some(Singularity::Bounded), growth: Some(growth) }
            }
            Family::Exponential { coeff, rate } => {
                if !(coeff > 0.0 && rate > 0.0 && coeff.is_finite() && rate.is_finite()) {
                    return bad("exponential potential needs coeff > 0 and rate > 0");
                }
                Descriptors {
                    singularity: Some(Singularity::Bounded),
                    growth: Some(Growth::Superlinear { envelope: Envelope::Exponential { coeff, rate } }),
                }
            }
            Family::Tabulated(_) => Descriptors::default(),
        };
        let p = Self { family, offset: 0.0, descriptors };
        p.validate_descriptors()?;
        Ok(p)
    }

    fn validate_descriptors(&self) -> Result<()> {
        if let Some(Growth::Superlinear { envelope }) = self.descriptors.growth {
            if !envelope.is_valid() {
                return Err(Error::Config(format!("superlinear envelope {envelope:?} fails convexity/growth checks")));
            }
        }
        Ok(())
    }

    /// `h + κ`; descriptors are unchanged.
    pub fn shifted(&self, kappa: f64) -> Self {
        let mut p = self.clone();
        p.offset += kappa;
        p
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn descriptors(&self) -> Descriptors {
        self.descriptors
    }

    /// `h(θ)`; `-∞` at `θ = 0` for singular profiles.
    pub fn eval(&self, theta: f64) -> f64 {
        let base = match &self.family {
            Family::Constant { value } => *value,
            Family::PowerLaw { coeff, alpha } => {
                if *alpha == 0.0 {
                    *coeff
                } else if theta == 0.0 {
                    if *alpha > 0.0 {
                        0.0
                    } else {
                        f64::NEG_INFINITY
                    }
                } else {
                    coeff * theta.powf(*alpha)
                }
            }
            Family::Log { a1 } => {
                if theta == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    a1 * theta.ln()
                }
            }
            Family::LogLinear { a1, slope } => {
                if theta == 0.0 && *a1 > 0.0 {
                    f64::NEG_INFINITY
                } else if *a1 == 0.0 {
                    slope * theta
                } else {
                    a1 * theta.ln() + slope * theta
                }
            }
            Family::Linear { slope } => slope * theta,
            Family::Exponential { coeff, rate } => coeff * (rate * theta).exp_m1(),
            Family::Tabulated(t) => t.eval(theta),
        };
        base + self.offset
    }

    /// `h′(θ)`; `+∞` at `θ = 0` for singular profiles.
    pub fn deriv(&self, theta: f64) -> f64 {
        match &self.family {
            Family::Constant { .. } => 0.0,
            Family::PowerLaw { coeff, alpha } => {
                if *alpha == 0.0 {
                    0.0
                } else if theta == 0.0 {
                    if *alpha > 1.0 {
                        0.0
                    } else if *alpha == 1.0 {
                        *coeff
                    } else {
                        f64::INFINITY
                    }
                } else {
                    coeff * alpha * theta.powf(alpha - 1.0)
                }
            }
            Family::Log { a1 } => {
                if theta == 0.0 {
                    f64::INFINITY
                } else {
                    a1 / theta
                }
            }
            Family::LogLinear { a1, slope } => {
                if *a1 == 0.0 {
                    *slope
                } else if theta == 0.0 {
                    f64::INFINITY
                } else {
                    a1 / theta + slope
                }
            }
            Family::Linear { slope } => *slope,
            Family::Exponential { coeff, rate } => coeff * rate * (rate * theta).exp(),
            Family::Tabulated(t) => t.deriv(theta),
        }
    }

    /// True when `∬ h(d) ρρ` diverges for bounded densities in dimension `n`.
    pub fn is_nonintegrable(&self, n: usize) -> bool {
        matches!(self.descriptors.singularity, Some(Singularity::Power { k }) if k >= n as f64)
    }
}

/// Which branch of the existence/nonexistence theory applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeTag {
    NonexistenceBlowUp,
    NonexistenceSpreading,
    ExistenceGeneral,
    ExistenceHomogeneous,
    Undetermined,
}

impl RegimeTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeTag::NonexistenceBlowUp => "NonexistenceBlowUp",
            RegimeTag::NonexistenceSpreading => "NonexistenceSpreading",
            RegimeTag::ExistenceGeneral => "ExistenceGeneral",
            RegimeTag::ExistenceHomogeneous => "ExistenceHomogeneous",
            RegimeTag::Undetermined => "Undetermined",
        }
    }
}

impl std::fmt::Display for RegimeTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeVerdict {
    pub tag: RegimeTag,
    /// The inequality on `(A₁, A₂, n)` that decided the verdict.
    pub witness: String,
}

/// Classify `h` on an `n`-manifold with curvature in `[-c_m, -c_M]`.
///
/// Blow-up is checked first, then spreading, then the two existence branches.
pub fn classify_regime(h: &Potential, n: usize, c_m: f64, c_big_m: f64) -> Result<RegimeVerdict> {
    let d = h.descriptors();
    let sing = d.singularity.ok_or_else(|| Error::ClassificationInput("singularity at 0 not declared".into()))?;
    let growth = d.growth.ok_or_else(|| Error::ClassificationInput("growth at infinity not declared".into()))?;
    let nf = n as f64;
    let verdict = |tag, witness: String| Ok(RegimeVerdict { tag, witness });

    match sing {
        Singularity::Power { k } => {
            return verdict(
                RegimeTag::NonexistenceBlowUp,
                format!("power singularity theta^-{k} beats any A1 log theta"),
            )
        }
        Singularity::Log { a1 } if a1 > 2.0 * nf => {
            return verdict(RegimeTag::NonexistenceBlowUp, format!("A1 = {a1} > 2n = {}", 2.0 * nf))
        }
        _ => {}
    }
    if c_big_m > 0.0 {
        match growth {
            Growth::Sublinear => {
                return verdict(RegimeTag::NonexistenceSpreading, "sublinear growth, A2 = 0 < n-1".into());
            }
            Growth::Linear { slope } => {
                let a2 = slope / c_big_m.sqrt();
                if a2 < nf - 1.0 {
                    return verdict(RegimeTag::NonexistenceSpreading, format!("A2 = {a2} < n-1 = {}", nf - 1.0));
                }
            }
            Growth::Superlinear { .. } => {}
        }
    }
    let a1_ok = match sing {
        Singularity::Bounded => true,
        Singularity::Log { a1 } => a1 < 2.0 * nf,
        Singularity::Power { .. } => false,
    };
    if a1_ok && c_m > 0.0 {
        match growth {
            Growth::Superlinear { envelope } if envelope.is_valid() => {
                return verdict(
                    RegimeTag::ExistenceGeneral,
                    format!("A1 < 2n = {} and superlinear envelope", 2.0 * nf),
                );
            }
            Growth::Linear { slope } => {
                let a2 = slope / c_m.sqrt();
                if a2 > 2.0 * (nf - 1.0) {
                    return verdict(
                        RegimeTag::ExistenceHomogeneous,
                        format!("A1 < 2n and A2 = {a2} > 2(n-1) = {}", 2.0 * (nf - 1.0)),
                    );
                }
            }
            _ => {}
        }
    }
    verdict(RegimeTag::Undetermined, "no regime branch applies".into())
}

/// `β_ε = min_{x>0} sinh(x)/(x e^{(1−ε)x})`, re-verified on a dense grid.
pub fn beta_eps(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("beta_eps needs 0 < eps < 1, got {eps}")));
    }
    let slope = 1.0 - eps;
    let log_ratio = |x: f64| log_sinhc(x) - slope * x;
    let hi = (10.0 / eps).max(1e3);
    let (_, fmin) = golden_section(|t| log_ratio(t.exp()), 1e-6f64.ln(), hi.ln(), 1e-12);
    let grid_min = log_space(1e-6, hi, 10_000).into_iter().map(log_ratio).fold(f64::INFINITY, f64::min);
    Ok(fmin.min(grid_min).exp().min(1.0))
}

/// Constants `(ε, C)` with `h(θ) − 2n log θ − 2(n−1) log(sinh(√cθ)/(√cθ)) − εθ ≥ C`
/// on the scan grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundConstants {
    pub eps: f64,
    pub c_const: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub grid_size: usize,
}

pub const SCAN_THETA_MIN: f64 = 1e-8;
pub const SCAN_THETA_MAX: f64 = 1e3;
pub const SCAN_POINTS: usize = 10_000;
const SCAN_MARGIN: f64 = 1e-6;

impl LowerBoundConstants {
    /// The scanned integrand at `θ`.
    pub fn integrand(h: &Potential, n: usize, c: f64, eps: f64, theta: f64) -> f64 {
        let nf = n as f64;
        h.eval(theta) - 2.0 * nf * theta.ln() - 2.0 * (nf - 1.0) * log_sinhc(c.sqrt() * theta) - eps * theta
    }

    /// Re-check the defining inequality at every scan point.
    pub fn holds_on_grid(&self, h: &Potential, n: usize, c: f64) -> bool {
        log_space(self.theta_min, self.theta_max, self.grid_size)
            .into_iter()
            .all(|t| Self::integrand(h, n, c, self.eps, t) >= self.c_const)
    }
}

/// Infimum of `f` over `count` log-spaced points in `[lo, hi]`.
pub fn grid_infimum<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, count: usize) -> Result<f64> {
    let mut m = f64::INFINITY;
    for t in log_space(lo, hi, count) {
        let v = f(t);
        if v.is_nan() || v == f64::NEG_INFINITY {
            return Err(Error::Infeasible(format!("scan integrand is {v} at theta = {t:e}")));
        }
        m = m.min(v);
    }
    Ok(m)
}

/// `(ε, C)` for a potential in one of the existence regimes. Linear growth
/// uses `ε = (A₂ − 2(n−1))√c`; superlinear growth uses `eps_hint` (default 1).
pub fn lower_bound_constants(h: &Potential, n: usize, c: f64, eps_hint: Option<f64>) -> Result<LowerBoundConstants> {
    let nf = n as f64;
    let eps = match h.descriptors().growth {
        Some(Growth::Linear { slope }) => {
            let eps = slope - 2.0 * (nf - 1.0) * c.sqrt();
            if eps <= 0.0 {
                return Err(Error::Infeasible(format!(
                    "linear slope {slope} does not exceed 2(n-1)sqrt(c) = {}",
                    2.0 * (nf - 1.0) * c.sqrt()
                )));
            }
            eps
        }
        Some(Growth::Superlinear { .. }) => eps_hint.unwrap_or(1.0),
        Some(Growth::Sublinear) => return Err(Error::Infeasible("sublinear potential admits no epsilon > 0".into())),
        None => return Err(Error::ClassificationInput("growth at infinity not declared".into())),
    };
    let inf =
        grid_infimum(|t| LowerBoundConstants::integrand(h, n, c, eps, t), SCAN_THETA_MIN, SCAN_THETA_MAX, SCAN_POINTS)?;
    Ok(LowerBoundConstants {
        eps,
        c_const: inf - SCAN_MARGIN,
        theta_min: SCAN_THETA_MIN,
        theta_max: SCAN_THETA_MAX,
        grid_size: SCAN_POINTS,
    })
}
