//! Large-x asymptotics of the density of I_φ and its derivatives.
//!
//! For specs of positive increase,
//!
//! ```text
//! f⁽ⁿ⁾(x) ~ C varphi(x)ⁿ √varphi′(x) x^{−n} exp(−∫_{φ*(1)}^x varphi(y)/y dy),
//! C = (−1)ⁿ e^{−T} / √(2π φ*(1)),
//! ```
//!
//! where varphi inverts φ*. Compound Poisson specs have the sharper form
//! C·e^{−φ(∞)x}.

use rayon::prelude::*;
use serde::Serialize;

use crate::bernstein::{positive_increase_report, BernsteinSpec, ClosedForm, MeasureSpec};
use crate::bgamma::t_phis;
use crate::error::{Error, Result};
use crate::inversion::{density_deriv_report, InversionReport};
use crate::phi_star::{domain_left, phi_star_real, varphi_star, varphi_star_deriv};
use crate::quad::{adaptive, Tolerance};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct AsymptoticConstant {
    pub c_abs: f64,
    pub sign: f64,
    pub n: usize,
    pub t: f64,
}

impl AsymptoticConstant {
    pub fn value(&self) -> f64 {
        self.sign * self.c_abs
    }
}

fn sign_of(n: usize) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// C = (−1)ⁿ e^{−T}/√(2π φ*(1)).
pub fn asymptotic_constant(spec: &BernsteinSpec, n: usize) -> Result<AsymptoticConstant> {
    let t = t_phis(spec)?;
    let p1 = phi_star_real(spec, 1.0)?;
    let c_abs = (-t - 0.5 * (LN_2PI + p1.ln())).exp();
    Ok(AsymptoticConstant { c_abs, sign: sign_of(n), n, t })
}

fn check_driftless(spec: &BernsteinSpec) -> Result<()> {
    if spec.d() > 0.0 {
        Err(Error::domain("asymptotics need d = 0"))
    } else {
        Ok(())
    }
}

/// ∫₁^{varphi(x)} (1 − vφ′(v)/φ(v)) dv, equal to ∫_{φ*(1)}^x varphi(y)/y dy.
///
/// For x < φ*(1) the integral runs backwards and is negative.
pub fn exponent_integral(spec: &BernsteinSpec, x: f64) -> Result<f64> {
    check_driftless(spec)?;
    let upper = varphi_star(spec, x)?;
    integrate_log_slope_defect(spec, upper)
}

fn integrate_log_slope_defect(spec: &BernsteinSpec, upper: f64) -> Result<f64> {
    if upper == 1.0 {
        return Ok(0.0);
    }
    let f = |v: f64| -> Result<f64> {
        let [p, dp, _, _] = spec.derivs_real(v, 1)?;
        Ok(1.0 - v * dp / p)
    };
    let (lo, hi, sign) = if upper > 1.0 { (1.0, upper, 1.0) } else { (upper, 1.0, -1.0) };
    let mut pts = vec![lo];
    let mut p = lo * 2.0;
    while p < hi {
        pts.push(p);
        p *= 2.0;
    }
    pts.push(hi);
    let est = adaptive(f, &pts, Tolerance::new(1e-14, 1e-13), 4000, "exponent integral")?;
    Ok(sign * est.value)
}

/// The unsubstituted ∫_{φ*(1)}^x varphi(y)/y dy, one root solve per node.
pub fn exponent_integral_raw(spec: &BernsteinSpec, x: f64) -> Result<f64> {
    check_driftless(spec)?;
    let lo = phi_star_real(spec, 1.0)?;
    if x == lo {
        return Ok(0.0);
    }
    // in ln y the integrand varphi(e^t) is smooth
    let f = |t: f64| varphi_star(spec, t.exp());
    let (a, b, sign) = if x > lo { (lo.ln(), x.ln(), 1.0) } else { (x.ln(), lo.ln(), -1.0) };
    let pieces = ((b - a) / 0.25).ceil().max(1.0) as usize;
    let est = adaptive(f, &crate::quad::linspace(a, b, pieces), Tolerance::new(1e-14, 1e-12), 4000, "raw exponent integral")?;
    Ok(sign * est.value)
}

/// Whether λφ′/φ < 1 − δ over the top of a [1, 10⁶] grid, cached per spec.
pub fn positive_increase_verified(spec: &BernsteinSpec) -> bool {
    *spec.cache.positive_increase.get_or_init(|| {
        let grid: Vec<f64> = (0..=60).map(|i| 10f64.powf(i as f64 / 10.0)).collect();
        positive_increase_report(spec, &grid).is_ok()
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct AsymptoticValue {
    pub value: f64,
    /// ln |value|, finite even when the value underflows.
    pub log_abs: f64,
    pub sign: f64,
    /// False when positive increase could not be verified; the value is then
    /// outside the range where the formula is known to hold.
    pub positive_increase: bool,
}

/// C varphi(x)ⁿ √varphi′(x) x^{−n} e^{−exponent_integral(x)}.
pub fn asymptotic_density_deriv(spec: &BernsteinSpec, x: f64, n: usize) -> Result<AsymptoticValue> {
    check_driftless(spec)?;
    let c = asymptotic_constant(spec, n)?;
    let v = varphi_star(spec, x)?;
    let dv = varphi_star_deriv(spec, x)?;
    let ei = exponent_integral(spec, x)?;
    let nf = n as f64;
    let log_abs = c.c_abs.ln() + nf * (v.ln() - x.ln()) + 0.5 * dv.ln() - ei;
    Ok(AsymptoticValue {
        value: c.sign * log_abs.exp(),
        log_abs,
        sign: c.sign,
        positive_increase: positive_increase_verified(spec),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SmallJumpRegime {
    IntegrableSmallJumps,
    NonIntegrableSmallJumps,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CppAsymptotic {
    pub value: f64,
    pub log_abs: f64,
    pub regime: SmallJumpRegime,
    /// C in value = C e^{−φ(∞)x}.
    pub constant: f64,
    /// φ(∞) = q + μ̄(0).
    pub rate: f64,
    /// Set in the non-integrable regime, where an o(x) term in the exponent
    /// is not accounted for.
    pub caveat: bool,
}

/// Lévy density near the origin for compound Poisson models.
fn jump_density(spec: &BernsteinSpec, v: f64) -> Result<f64> {
    match spec.measure() {
        MeasureSpec::ClosedForm(ClosedForm::ExpJumpCpp { rate, scale }) => Ok(rate / scale * (-v / scale).exp()),
        MeasureSpec::Density(dm) => match dm.density(v) {
            Some(m) => Ok(m),
            None => tail_slope(spec, v),
        },
        _ => tail_slope(spec, v),
    }
}

fn tail_slope(spec: &BernsteinSpec, v: f64) -> Result<f64> {
    let h = 1e-5 * v;
    Ok((spec.levy_tail(v - h)? - spec.levy_tail(v + h)?) / (2.0 * h))
}

/// Classifies ∫₀¹ μ(dv)/v as finite or infinite.
pub fn small_jump_regime(spec: &BernsteinSpec) -> Result<SmallJumpRegime> {
    use SmallJumpRegime::*;
    match spec.measure() {
        MeasureSpec::ClosedForm(ClosedForm::PureKill) | MeasureSpec::Atoms(_) => Ok(IntegrableSmallJumps),
        MeasureSpec::ClosedForm(ClosedForm::ExpJumpCpp { .. }) => Ok(NonIntegrableSmallJumps),
        _ => {
            let f = |t: f64| jump_density(spec, t.exp());
            // ∫_ε^1 m(v)/v dv = ∫_{ln ε}^0 m(e^t) dt
            let j = |lo: f64| {
                adaptive(f, &crate::quad::linspace(lo, 0.0, 16), Tolerance::new(1e-14, 1e-10), 4000, "small-jump moment")
                    .map(|e| e.value)
            };
            let near = j(-(1e-6f64).ln().abs())?;
            let far = j(-(1e-12f64).ln().abs())?;
            Ok(if far - near <= 1e-3 * near.abs().max(1e-300) { IntegrableSmallJumps } else { NonIntegrableSmallJumps })
        }
    }
}

/// K(v) = ∫₁^∞ e^{−sv} φ*′(s) ds, the inner integral of the compound Poisson
/// constant after the substitution y = φ*(s).
fn inner_kernel(spec: &BernsteinSpec, v: f64) -> Result<f64> {
    let f = |s: f64| -> Result<f64> {
        let [p, dp, _, _] = spec.derivs_real(s, 1)?;
        Ok((-(s - 1.0) * v).exp() * (p - s * dp) / (p * p))
    };
    let top = 1.0 + 60.0 / v;
    let mut pts = vec![1.0];
    let mut p = 1.0 + (1.0 / v).min(1.0);
    while p < top {
        pts.push(p);
        p = 1.0 + 2.0 * (p - 1.0);
    }
    pts.push(top);
    let est = adaptive(f, &pts, Tolerance::new(0.0, 1e-12), 4000, "compound Poisson kernel")?;
    Ok((-v).exp() * est.value)
}

/// ∫₀^∞ K(v) μ(dv) for integrable small jumps.
fn cpp_double_integral(spec: &BernsteinSpec) -> Result<f64> {
    match spec.measure() {
        MeasureSpec::ClosedForm(ClosedForm::PureKill) => Ok(0.0),
        MeasureSpec::Atoms(atoms) => {
            let mut sum = 0.0;
            for a in atoms {
                sum += a.mass * inner_kernel(spec, a.location)?;
            }
            Ok(sum)
        }
        _ => {
            // in ln v, from 1e-12 up to where the tail is negligible
            let f = |t: f64| -> Result<f64> {
                let v = t.exp();
                Ok(v * jump_density(spec, v)? * inner_kernel(spec, v)?)
            };
            let mut hi = 0.0f64;
            while spec.levy_tail(hi.exp())? > 1e-14 * spec.total_mass() && hi < 50.0 {
                hi += 1.0;
            }
            let lo = (1e-12f64).ln();
            let pieces = ((hi - lo) / 0.5).ceil() as usize;
            let est = adaptive(f, &crate::quad::linspace(lo, hi, pieces), Tolerance::new(1e-14, 1e-8), 4000, "compound Poisson constant")?;
            Ok(est.value)
        }
    }
}

/// C e^{−φ(∞)x} for compound Poisson specs.
pub fn cpp_asymptotic(spec: &BernsteinSpec, x: f64, n: usize) -> Result<CppAsymptotic> {
    check_driftless(spec)?;
    if !spec.is_compound_poisson() {
        return Err(Error::domain("compound Poisson asymptotics need a finite Lévy measure"));
    }
    if !(x > 0.0) {
        return Err(Error::domain(format!("need x > 0, got {x}")));
    }
    let b = spec.phi_infinity();
    let regime = small_jump_regime(spec)?;
    let t = t_phis(spec)?;
    let p1 = phi_star_real(spec, 1.0)?;
    let nf = n as f64;
    let mut log_c = nf * b.ln() + 0.5 * b.ln() + b * p1 - t - 0.5 * (LN_2PI + p1.ln());
    if regime == SmallJumpRegime::IntegrableSmallJumps {
        log_c += cpp_double_integral(spec)?;
    }
    let sign = sign_of(n);
    let log_abs = log_c - b * x;
    Ok(CppAsymptotic {
        value: sign * log_abs.exp(),
        log_abs,
        regime,
        constant: sign * log_c.exp(),
        rate: b,
        caveat: regime == SmallJumpRegime::NonIntegrableSmallJumps,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RatioRow {
    pub x: f64,
    pub density: f64,
    pub density_err: f64,
    pub asymptotic: f64,
    /// density/asymptotic, formed in log space.
    pub ratio: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AsymptoticForm {
    General,
    CompoundPoisson,
}

fn ratio_row(spec: &BernsteinSpec, x: f64, n: usize, tol: f64, form: AsymptoticForm) -> Result<RatioRow> {
    let r: InversionReport = density_deriv_report(spec, x, n, tol)?;
    let (asym, log_abs, sign) = match form {
        AsymptoticForm::General => {
            let a = asymptotic_density_deriv(spec, x, n)?;
            (a.value, a.log_abs, a.sign)
        }
        AsymptoticForm::CompoundPoisson => {
            let a = cpp_asymptotic(spec, x, n)?;
            (a.value, a.log_abs, sign_of(n))
        }
    };
    let ratio = sign * r.scaled_value * (r.log_scale - log_abs).exp();
    Ok(RatioRow { x, density: r.value, density_err: r.abs_err, asymptotic: asym, ratio })
}

/// Rows (x, f⁽ⁿ⁾(x), asymptotic, ratio) for increasing `xs`.
pub fn ratio_table(spec: &BernsteinSpec, xs: &[f64], n: usize, tol: f64, form: AsymptoticForm) -> Result<Vec<RatioRow>> {
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("x grid must be increasing"));
    }
    if let Some(&x0) = xs.first() {
        if !(x0 > domain_left(spec)) {
            return Err(Error::domain(format!("x = {x0} is outside the domain of varphi*")));
        }
    }
    xs.par_iter().map(|&x| ratio_row(spec, x, n, tol, form)).collect()
}
