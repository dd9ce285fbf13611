//! Laplace exponents of killed subordinators.
//!
//! A [`BernsteinSpec`] bundles the killing rate `q`, the drift `d` and a
//! Lévy measure, and evaluates
//!
//! ```text
//! φ(z) = q + d z + ∫ (1 − e^{−zy}) μ(dy),   Re z > 0,
//! ```
//!
//! together with its first three derivatives. Closed-form models and atomic
//! measures are evaluated exactly; measures given through their tail μ̄ are
//! integrated numerically in the tail form `z ∫ e^{−zy} μ̄(y) dy`.

mod density;
mod diagnostics;

use std::fmt;
use std::sync::{Arc, OnceLock};

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::special::{exp_integral_e1, expm1, C64};

pub use density::DensityMeasure;
pub use diagnostics::{
    positive_increase_report, validate_inequalities, InequalityRecord, PositiveIncreaseReport,
    ValidationReport, DELTA_PI,
};

/// The measure part of a Bernstein function given analytically by the caller.
///
/// `eval(z, k)` returns the k-th derivative of `∫(1 − e^{−zy})μ(dy)`; orders
/// 0 to 2 are mandatory, order 3 may return `None` (it is then obtained by a
/// finite difference of the second derivative).
pub trait AnalyticBernstein: Send + Sync + fmt::Debug {
    fn eval(&self, z: C64, order: usize) -> Option<C64>;
    fn levy_tail(&self, y: f64) -> f64;
    /// μ̄(0+), infinite for infinite activity.
    fn total_mass(&self) -> f64 {
        f64::INFINITY
    }
    /// ∫ y μ(dy), i.e. the measure's contribution to φ′(0+).
    fn mean(&self) -> f64 {
        f64::INFINITY
    }
}

#[derive(Clone, Debug)]
pub enum ClosedForm {
    /// μ ≡ 0; the exponent is the constant killing rate.
    PureKill,
    /// φ(z) = c z^α.
    Stable { c: f64, alpha: f64 },
    /// φ(z) = a ln(1 + z/b).
    GammaSub { a: f64, b: f64 },
    /// Compound Poisson with exponential jumps: μ(dy) = rate/scale · e^{−y/scale} dy.
    ExpJumpCpp { rate: f64, scale: f64 },
    Custom(Arc<dyn AnalyticBernstein>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

#[derive(Clone, Debug)]
pub enum MeasureSpec {
    ClosedForm(ClosedForm),
    Atoms(Vec<Atom>),
    Density(DensityMeasure),
}

/// Lazily computed per-model constants. Shared between clones of a spec.
#[derive(Default, Debug)]
pub(crate) struct SpecCache {
    pub(crate) t_phis: OnceLock<Result<f64>>,
    pub(crate) defect_phistar: OnceLock<Result<C64>>,
    pub(crate) defect_phi: OnceLock<Result<C64>>,
    pub(crate) domain_left: OnceLock<f64>,
    pub(crate) positive_increase: OnceLock<bool>,
}

#[derive(Clone)]
pub struct BernsteinSpec {
    q: f64,
    d: f64,
    measure: MeasureSpec,
    pub(crate) cache: Arc<SpecCache>,
}

impl fmt::Debug for BernsteinSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BernsteinSpec")
            .field("q", &self.q)
            .field("d", &self.d)
            .field("measure", &self.measure)
            .finish()
    }
}

/// A point of the open right half-plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexPoint(C64);

impl ComplexPoint {
    pub fn new(re: f64, im: f64) -> Result<Self> {
        Self::from_c64(C64::new(re, im))
    }

    pub fn from_c64(z: C64) -> Result<Self> {
        if !(z.re > 0.0) || !z.im.is_finite() || !z.re.is_finite() {
            return Err(Error::domain(format!("need Re z > 0, got {z}")));
        }
        Ok(ComplexPoint(z))
    }

    pub fn value(&self) -> C64 {
        self.0
    }
}

impl std::str::FromStr for ComplexPoint {
    type Err = Error;

    /// Parses `a`, `a+bi`, `a-bi` (also with `j`).
    fn from_str(s: &str) -> Result<Self> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::Config(format!("cannot parse complex number '{s}'"));
        if t.is_empty() {
            return Err(bad());
        }
        let z = if let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) {
            // split at the last sign that is not part of an exponent
            let bytes = body.as_bytes();
            let mut split = None;
            for k in (1..bytes.len()).rev() {
                if (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
                    split = Some(k);
                    break;
                }
            }
            match split {
                Some(k) => {
                    let re: f64 = body[..k].parse().map_err(|_| bad())?;
                    let im_s = &body[k..];
                    let im: f64 = match im_s {
                        "+" => 1.0,
                        "-" => -1.0,
                        _ => im_s.parse().map_err(|_| bad())?,
                    };
                    C64::new(re, im)
                }
                None => return Err(bad()),
            }
        } else {
            C64::new(t.parse().map_err(|_| bad())?, 0.0)
        };
        ComplexPoint::from_c64(z).map_err(|e| Error::Config(e.to_string()))
    }
}

fn check_re(z: C64) -> Result<()> {
    if z.re > 0.0 && z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("need Re z > 0, got {z}")))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!("{name} must be positive and finite, got {v}")))
    }
}

impl BernsteinSpec {
    pub fn new(q: f64, d: f64, measure: MeasureSpec) -> Result<Self> {
        if !(q >= 0.0 && q.is_finite()) {
            return Err(Error::InvalidSpec(format!("killing rate must be >= 0, got {q}")));
        }
        if !(d >= 0.0 && d.is_finite()) {
            return Err(Error::InvalidSpec(format!("drift must be >= 0, got {d}")));
        }
        let mut trivial_measure = false;
        match &measure {
            MeasureSpec::ClosedForm(cf) => match cf {
                ClosedForm::PureKill => trivial_measure = true,
                ClosedForm::Stable { c, alpha } => {
                    positive("c", *c)?;
                    if !(*alpha > 0.0 && *alpha < 1.0) {
                        return Err(Error::InvalidSpec(format!("alpha must lie in (0,1), got {alpha}")));
                    }
                }
                ClosedForm::GammaSub { a, b } => {
                    positive("a", *a)?;
                    positive("b", *b)?;
                }
                ClosedForm::ExpJumpCpp { rate, scale } => {
                    positive("rate", *rate)?;
                    positive("scale", *scale)?;
                }
                ClosedForm::Custom(_) => {}
            },
            MeasureSpec::Atoms(atoms) => {
                if atoms.is_empty() {
                    trivial_measure = true;
                }
                for (i, a) in atoms.iter().enumerate() {
                    positive("atom location", a.location)?;
                    positive("atom mass", a.mass)?;
                    if atoms[..i].iter().any(|b| b.location == a.location) {
                        return Err(Error::InvalidSpec(format!("duplicate atom at {}", a.location)));
                    }
                }
            }
            MeasureSpec::Density(dm) => dm.validate()?,
        }
        if trivial_measure && q == 0.0 && d == 0.0 {
            return Err(Error::InvalidSpec("q, d and the Lévy measure are all zero".into()));
        }
        Ok(BernsteinSpec { q, d, measure, cache: Arc::default() })
    }

    pub fn pure_kill(q: f64) -> Result<Self> {
        Self::new(q, 0.0, MeasureSpec::ClosedForm(ClosedForm::PureKill))
    }

    pub fn stable(c: f64, alpha: f64) -> Result<Self> {
        Self::new(0.0, 0.0, MeasureSpec::ClosedForm(ClosedForm::Stable { c, alpha }))
    }

    pub fn gamma_sub(a: f64, b: f64) -> Result<Self> {
        Self::new(0.0, 0.0, MeasureSpec::ClosedForm(ClosedForm::GammaSub { a, b }))
    }

    pub fn exp_jump_cpp(rate: f64, scale: f64) -> Result<Self> {
        Self::new(0.0, 0.0, MeasureSpec::ClosedForm(ClosedForm::ExpJumpCpp { rate, scale }))
    }

    pub fn atoms(atoms: &[(f64, f64)]) -> Result<Self> {
        let v = atoms.iter().map(|&(location, mass)| Atom { location, mass }).collect();
        Self::new(0.0, 0.0, MeasureSpec::Atoms(v))
    }

    /// φ(z) = z, whose Bernstein–gamma function is Euler's Γ.
    pub fn drift_only(d: f64) -> Result<Self> {
        Self::new(0.0, d, MeasureSpec::ClosedForm(ClosedForm::PureKill))
    }

    pub fn with_killing(&self, q: f64) -> Result<Self> {
        Self::new(q, self.d, self.measure.clone())
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn measure(&self) -> &MeasureSpec {
        &self.measure
    }

    /// μ̄(0+) + q = φ(∞) for driftless specs; infinite otherwise.
    pub fn phi_infinity(&self) -> f64 {
        if self.d > 0.0 {
            return f64::INFINITY;
        }
        self.q + self.total_mass()
    }

    /// μ̄(0+).
    pub fn total_mass(&self) -> f64 {
        match &self.measure {
            MeasureSpec::ClosedForm(cf) => match cf {
                ClosedForm::PureKill => 0.0,
                ClosedForm::Stable { .. } | ClosedForm::GammaSub { .. } => f64::INFINITY,
                ClosedForm::ExpJumpCpp { rate, .. } => *rate,
                ClosedForm::Custom(c) => c.total_mass(),
            },
            MeasureSpec::Atoms(atoms) => atoms.iter().map(|a| a.mass).sum(),
            MeasureSpec::Density(dm) => dm.total_mass(),
        }
    }

    pub fn is_compound_poisson(&self) -> bool {
        self.total_mass().is_finite()
    }

    /// φ′(0+) = d + ∫ y μ(dy), possibly infinite. `None` when only a
    /// numerical estimate is available.
    pub(crate) fn exact_phi_prime_at_zero(&self) -> Option<f64> {
        let m = match &self.measure {
            MeasureSpec::ClosedForm(cf) => match cf {
                ClosedForm::PureKill => 0.0,
                ClosedForm::Stable { .. } => f64::INFINITY,
                ClosedForm::GammaSub { a, b } => a / b,
                ClosedForm::ExpJumpCpp { rate, scale } => rate * scale,
                ClosedForm::Custom(c) => {
                    let m = c.mean();
                    if m.is_nan() {
                        return None;
                    }
                    m
                }
            },
            MeasureSpec::Atoms(atoms) => atoms.iter().map(|a| a.mass * a.location).sum(),
            MeasureSpec::Density(_) => return None,
        };
        Some(self.d + m)
    }

    /// φ and its derivatives up to order `upto` (≤ 3) at z, Re z > 0.
    pub fn derivs(&self, z: C64, upto: usize) -> Result<[C64; 4]> {
        check_re(z)?;
        let mut out = self.measure_derivs(z, upto.min(3))?;
        out[0] += self.q + self.d * z;
        if upto >= 1 {
            out[1] += self.d;
        }
        Ok(out)
    }

    fn measure_derivs(&self, z: C64, upto: usize) -> Result<[C64; 4]> {
        let zero = C64::new(0.0, 0.0);
        let mut out = [zero; 4];
        match &self.measure {
            MeasureSpec::ClosedForm(cf) => match cf {
                ClosedForm::PureKill => {}
                ClosedForm::Stable { c, alpha } => {
                    let lz = z.ln();
                    let pw = |p: f64| (lz * p).exp();
                    out[0] = pw(*alpha) * *c;
                    let mut coef = *c;
                    for k in 1..=upto {
                        coef *= alpha - (k as f64 - 1.0);
                        out[k] = pw(alpha - k as f64) * coef;
                    }
                }
                ClosedForm::GammaSub { a, b } => {
                    out[0] = ln_1p(z / *b) * *a;
                    let inv = (z + *b).inv();
                    if upto >= 1 {
                        out[1] = inv * *a;
                    }
                    if upto >= 2 {
                        out[2] = -inv * inv * *a;
                    }
                    if upto >= 3 {
                        out[3] = inv * inv * inv * (2.0 * a);
                    }
                }
                ClosedForm::ExpJumpCpp { rate, scale } => {
                    let w = z * *scale + 1.0;
                    let inv = w.inv();
                    out[0] = z * inv * (rate * scale);
                    if upto >= 1 {
                        out[1] = inv * inv * (rate * scale);
                    }
                    if upto >= 2 {
                        out[2] = -inv * inv * inv * (2.0 * rate * scale * scale);
                    }
                    if upto >= 3 {
                        out[3] = inv * inv * inv * inv * (6.0 * rate * scale.powi(3));
                    }
                }
                ClosedForm::Custom(c) => {
                    for (k, slot) in out.iter_mut().enumerate().take(upto.min(2) + 1) {
                        *slot = c.eval(z, k).ok_or_else(|| {
                            Error::InvalidSpec(format!("custom model lacks derivative of order {k}"))
                        })?;
                    }
                    if upto >= 3 {
                        out[3] = match c.eval(z, 3) {
                            Some(v) => v,
                            None => {
                                let h = (1e-3 * z.norm()).min(0.25 * z.re);
                                let p = c.eval(z + h, 2).unwrap_or(zero);
                                let m = c.eval(z - h, 2).unwrap_or(zero);
                                (p - m) / (2.0 * h)
                            }
                        };
                    }
                }
            },
            MeasureSpec::Atoms(atoms) => {
                for a in atoms {
                    let e = (-z * a.location).exp();
                    out[0] -= expm1(-z * a.location) * a.mass;
                    let mut yk = a.mass;
                    for (k, slot) in out.iter_mut().enumerate().skip(1).take(upto) {
                        yk *= a.location;
                        let s = if k % 2 == 1 { 1.0 } else { -1.0 };
                        *slot += e * (s * yk);
                    }
                }
            }
            MeasureSpec::Density(dm) => {
                let j = dm.tail_laplace_moments(z)?;
                out[0] = z * j[0];
                if upto >= 1 {
                    out[1] = j[0] - z * j[1];
                }
                if upto >= 2 {
                    out[2] = -(j[1] * 2.0 - z * j[2]);
                }
                if upto >= 3 {
                    out[3] = j[2] * 3.0 - z * j[3];
                }
            }
        }
        Ok(out)
    }

    pub fn phi(&self, z: C64) -> Result<C64> {
        Ok(self.derivs(z, 0)?[0])
    }

    /// φ′ (order 1) or φ″ (order 2); order 3 is also accepted.
    pub fn phi_deriv(&self, z: C64, order: usize) -> Result<C64> {
        if !(1..=3).contains(&order) {
            return Err(Error::domain(format!("derivative order must be 1, 2 or 3, got {order}")));
        }
        Ok(self.derivs(z, order)?[order])
    }

    /// φ on the positive axis.
    pub fn phi_real(&self, x: f64) -> Result<f64> {
        Ok(self.phi(C64::new(x, 0.0))?.re)
    }

    /// (φ, φ′, φ″, φ‴) on the positive axis.
    pub fn derivs_real(&self, x: f64, upto: usize) -> Result<[f64; 4]> {
        let d = self.derivs(C64::new(x, 0.0), upto)?;
        Ok([d[0].re, d[1].re, d[2].re, d[3].re])
    }

    pub fn arg_phi(&self, z: C64) -> Result<f64> {
        Ok(self.phi(z)?.arg())
    }

    /// Tail of the Lévy measure μ̄(y) = μ((y, ∞)).
    pub fn levy_tail(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::domain(format!("Lévy tail needs y > 0, got {y}")));
        }
        Ok(match &self.measure {
            MeasureSpec::ClosedForm(cf) => match cf {
                ClosedForm::PureKill => 0.0,
                ClosedForm::Stable { c, alpha } => c * y.powf(-alpha) / gamma(1.0 - alpha),
                ClosedForm::GammaSub { a, b } => a * exp_integral_e1(b * y),
                ClosedForm::ExpJumpCpp { rate, scale } => rate * (-y / scale).exp(),
                ClosedForm::Custom(c) => c.levy_tail(y),
            },
            MeasureSpec::Atoms(atoms) => atoms.iter().filter(|a| a.location > y).map(|a| a.mass).sum(),
            MeasureSpec::Density(dm) => dm.tail(y)?,
        })
    }

    /// I(x) = ∫₀^x μ̄(y) dy.
    pub fn integrated_tail(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::domain(format!("integrated tail needs x > 0, got {x}")));
        }
        Ok(match &self.measure {
            MeasureSpec::ClosedForm(cf) => match cf {
                ClosedForm::PureKill => 0.0,
                ClosedForm::Stable { c, alpha } => c * x.powf(1.0 - alpha) / gamma(2.0 - alpha),
                ClosedForm::GammaSub { a, b } => {
                    let t = b * x;
                    a / b * (t * exp_integral_e1(t) - (-t).exp_m1())
                }
                ClosedForm::ExpJumpCpp { rate, scale } => -rate * scale * (-x / scale).exp_m1(),
                ClosedForm::Custom(c) => {
                    let c = c.clone();
                    density::integrate_tail_from_zero(&move |y| Ok(c.levy_tail(y)), None, x)?
                }
            },
            MeasureSpec::Atoms(atoms) => atoms.iter().map(|a| a.mass * a.location.min(x)).sum(),
            MeasureSpec::Density(dm) => dm.integrated_tail(x)?,
        })
    }
}

/// ln(1 + w) accurate for small |w|.
fn ln_1p(w: C64) -> C64 {
    if w.norm() < 1e-4 {
        let w2 = w * w;
        w - w2 * 0.5 + w2 * w / 3.0 - w2 * w2 * 0.25
    } else {
        (w + 1.0).ln()
    }
}
