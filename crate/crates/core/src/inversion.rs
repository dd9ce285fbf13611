//! Mellin–Barnes inversion of M(z) = E[I^{z−1}] along the saddle contour
//! Re z = varphi*(x).

use serde::Serialize;

use crate::bernstein::BernsteinSpec;
use crate::bgamma::{decay_envelope, DecayEnvelope, EnvelopeMode, MellinLine};
use crate::error::{Error, Result};
use crate::phi_star::{domain_left, varphi_star, varphi_star_deriv};
use crate::quad::{adaptive_with, linspace, Tolerance};
use crate::special::C64;

/// Lowest abscissa used for the inversion contour.
pub const MIN_ABSCISSA: f64 = 0.5;
const MAX_PANELS: usize = 40_000;
const CAP_FACTOR: f64 = 64.0;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EvalResult {
    pub value: f64,
    pub abs_err: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ContourPlan {
    pub a: f64,
    pub b_central: f64,
    pub b_max: f64,
    pub node_budget: usize,
    /// Envelope bound on the discarded part beyond b_max, relative to the
    /// modulus at the saddle.
    pub tail_bound: f64,
    /// Saddle abscissa before the lower floor was applied.
    pub saddle: f64,
    pub envelope_mode: EnvelopeMode,
}

fn check_common(spec: &BernsteinSpec, x: f64, tol: f64) -> Result<()> {
    if spec.d() > 0.0 {
        return Err(Error::domain("inversion needs d = 0"));
    }
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("need x > 0, got {x}")));
    }
    if !(tol > 0.0 && tol <= 1e-2) {
        return Err(Error::domain(format!("tolerance must lie in (0, 1e-2], got {tol}")));
    }
    Ok(())
}

fn oscillation_width(lnx: f64) -> f64 {
    if lnx.abs() < 1e-12 {
        f64::INFINITY
    } else {
        2.0 * std::f64::consts::PI / lnx.abs()
    }
}

/// Saddle abscissa, central window and a first truncation height.
pub fn contour_plan(spec: &BernsteinSpec, x: f64, n: usize, tol: f64) -> Result<ContourPlan> {
    check_common(spec, x, tol)?;
    let left = domain_left(spec);
    let (saddle, b_central) = if x <= left + 1e-6 {
        (MIN_ABSCISSA, 8.0)
    } else {
        let v = varphi_star(spec, x)?;
        let dv = varphi_star_deriv(spec, x)?;
        let central = (8.0 * (x * dv).sqrt()).max(v.powf(7.0 / 12.0));
        // a floored contour is no longer at the saddle; keep a window of unit scale
        (v, if v < MIN_ABSCISSA { central.max(8.0) } else { central })
    };
    let a = saddle.max(MIN_ABSCISSA);
    let envelope = decay_envelope(spec, a)?;
    let lnx = x.ln();
    let mut b_max = CAP_FACTOR * b_central;
    let mut tail_bound = f64::INFINITY;
    if envelope.mode == EnvelopeMode::ExponentialDecay {
        // height where the envelope falls below tol relative to the saddle magnitude
        if let Some(h) = envelope.height_below(envelope.log_base + (tol * 1e-2).ln()) {
            b_max = h.max(b_central).min(b_max);
        }
        // relative to the integrand at b = 0, which the envelope base dominates
        tail_bound = envelope_tail(&envelope, b_max, n, a);
    }
    let width = oscillation_width(lnx);
    let node_budget = 21 * ((b_max / width.min(b_max / 8.0)).ceil() as usize).max(8);
    Ok(ContourPlan {
        a,
        b_central,
        b_max,
        node_budget,
        tail_bound,
        saddle,
        envelope_mode: envelope.mode,
    })
}

/// ∫_B^∞ envelope(b)·|a+ib|^n db relative to the envelope base and |a|^n,
/// using |a+ib| ≤ a + b.
fn envelope_tail(env: &DecayEnvelope, b: f64, n: usize, a: f64) -> f64 {
    let eps = env.epsilon;
    let poly = ((b + a) / a).powi(n as i32);
    (env.log_bound(b) - env.log_base).exp() / eps * poly * (1.0 + n as f64 / (eps * b))
}

#[derive(Clone, Copy, Debug)]
enum Target {
    Density(usize),
    Tail,
}

struct Integrand<'a> {
    line: MellinLine<'a>,
    /// Real part of the contour for z (M is evaluated at z + shift).
    a: f64,
    lnx: f64,
    target: Target,
    /// Subtracted from the log of the integrand so values stay representable.
    offset: f64,
}

impl Integrand<'_> {
    fn eval(&self, b: f64) -> Result<C64> {
        Ok((self.log_eval(b)? - self.offset).exp())
    }

    fn log_eval(&self, b: f64) -> Result<C64> {
        let z = C64::new(self.a, b);
        let lm = self.line.log_mellin(b)?;
        let (extra, power) = match self.target {
            Target::Density(n) => ((0..n).map(|k| (z + k as f64).ln()).sum::<C64>(), z + n as f64),
            Target::Tail => (-z.ln(), z),
        };
        Ok(lm + extra - power * self.lnx)
    }
}

/// Detailed outcome of one inversion.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct InversionReport {
    pub value: f64,
    pub abs_err: f64,
    /// value = scaled_value · e^{log_scale}; finite even when value underflows.
    pub scaled_value: f64,
    pub log_scale: f64,
    pub plan: ContourPlan,
    /// Height actually reached by the doubling extension.
    pub b_used: f64,
    pub evaluations: usize,
    /// |Im| / |Re| of the integral over the full line (−B, B).
    pub imag_residue: Option<f64>,
}

struct HalfLine {
    value: C64,
    error: f64,
    l1: f64,
    b_used: f64,
    evaluations: usize,
}

fn integrate_half_line(ig: &Integrand<'_>, plan: &ContourPlan, tol: f64, sign: f64) -> Result<HalfLine> {
    let width = oscillation_width(ig.lnx).min(plan.b_central / 8.0);
    let f = |b: f64| ig.eval(sign * b);
    let rel = 0.1 * tol;
    let n0 = (plan.b_central / width).ceil() as usize;
    let central = adaptive_with(
        f,
        &linspace(0.0, plan.b_central, n0),
        Tolerance::rel(rel),
        MAX_PANELS,
        "Mellin inversion",
        |v: &C64| v.re.abs(),
    )?;
    let mut value = central.value;
    let mut error = central.error;
    let mut l1 = central.l1;
    let mut evaluations = central.evaluations;
    let mut b = plan.b_central;
    let cap = CAP_FACTOR * plan.b_central;
    loop {
        let scale = value.re.abs().max(1e-6 * l1);
        let b_next = 2.0 * b;
        let pieces = ((b_next - b) / width).ceil() as usize;
        let seg = adaptive_with(
            f,
            &linspace(b, b_next, pieces),
            Tolerance::new(rel * scale, 0.0),
            MAX_PANELS,
            "Mellin inversion",
            |v: &C64| v.re.abs(),
        )?;
        value += seg.value;
        error += seg.error;
        l1 += seg.l1;
        evaluations += seg.evaluations;
        b = b_next;
        let small = seg.l1 < 0.1 * tol * scale;
        let certified = b >= plan.b_max || plan.envelope_mode == EnvelopeMode::ModulusBoundOnly;
        if small && certified {
            error += seg.l1;
            break;
        }
        if b >= cap {
            return Err(Error::TruncationUnbounded { cap });
        }
    }
    Ok(HalfLine { value, error, l1, b_used: b, evaluations })
}

fn invert(spec: &BernsteinSpec, x: f64, tol: f64, target: Target, unfold: bool) -> Result<InversionReport> {
    let n = match target {
        Target::Density(n) => n,
        Target::Tail => 0,
    };
    let plan = contour_plan(spec, x, n, tol)?;
    let lnx = x.ln();
    // the tail is inverted left of its pole at 0 when the saddle is close to it
    let (a, shift, residue) = match target {
        Target::Tail if plan.a <= 1.0 => (-0.5, 1.0, 1.0),
        Target::Tail => (plan.a, 1.0, 0.0),
        Target::Density(_) => (plan.a, 0.0, 0.0),
    };
    let line = MellinLine::new(spec, a + shift)?;
    let mut ig = Integrand { line, a, lnx, target, offset: 0.0 };
    ig.offset = ig.log_eval(0.0)?.re;
    if residue != 0.0 {
        // keep the scale at 1 so the residue adds without loss
        ig.offset = ig.offset.min(0.0);
    }
    let upper = integrate_half_line(&ig, &plan, tol, 1.0)?;
    let pref = match target {
        Target::Density(n) => {
            if n % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        }
        Target::Tail => 1.0,
    } / std::f64::consts::PI;
    let factor = ig.offset.exp();
    let pole = if residue != 0.0 { residue / factor } else { 0.0 };
    let scaled_value = pole + pref * upper.value.re;
    let value = scaled_value * factor;
    let mut imag_residue = None;
    let mut evaluations = upper.evaluations;
    if unfold {
        let lower = integrate_half_line(&ig, &plan, tol, -1.0)?;
        evaluations += lower.evaluations;
        // ∫_{−B}^{B} = upper + lower, the lower half traversed with b ↦ −b
        let full = upper.value + lower.value;
        imag_residue = Some(full.im.abs() / full.re.abs().max(f64::MIN_POSITIVE));
    }
    let abs_err = pref.abs() * (upper.error + 1e2 * f64::EPSILON * upper.l1) * factor;
    Ok(InversionReport { value, abs_err, scaled_value, log_scale: ig.offset, plan, b_used: upper.b_used, evaluations, imag_residue })
}

/// f⁽ⁿ⁾(x), the n-th derivative of the density of I_φ.
pub fn density_deriv(spec: &BernsteinSpec, x: f64, n: usize, tol: f64) -> Result<EvalResult> {
    let r = invert(spec, x, tol, Target::Density(n), false)?;
    Ok(EvalResult { value: r.value, abs_err: r.abs_err })
}

/// As [`density_deriv`], also integrating the lower half line to measure the
/// imaginary residue of the unfolded integral.
pub fn density_deriv_report(spec: &BernsteinSpec, x: f64, n: usize, tol: f64) -> Result<InversionReport> {
    invert(spec, x, tol, Target::Density(n), true)
}

/// P(I_φ > x).
pub fn tail(spec: &BernsteinSpec, x: f64, tol: f64) -> Result<EvalResult> {
    let r = invert(spec, x, tol, Target::Tail, false)?;
    Ok(EvalResult { value: r.value, abs_err: r.abs_err })
}

pub fn tail_report(spec: &BernsteinSpec, x: f64, tol: f64) -> Result<InversionReport> {
    invert(spec, x, tol, Target::Tail, true)
}

/// E[I_φⁿ] = n!/∏_{k=1}^n φ(k).
pub fn moment(spec: &BernsteinSpec, n: usize) -> Result<f64> {
    let mut log = 0.0;
    for k in 1..=n {
        let kf = k as f64;
        log += kf.ln() - spec.phi_real(kf)?.ln();
    }
    Ok(log.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_examples() {
        let k = BernsteinSpec::pure_kill(1.0).unwrap();
        let p = contour_plan(&k, 5.0, 0, 1e-8).unwrap();
        assert!((p.a - 5.0).abs() < 1e-12);
        assert!((p.b_central - 8.0 * 5f64.sqrt()).abs() < 1e-9);
        let s = BernsteinSpec::stable(1.0, 0.5).unwrap();
        assert!((contour_plan(&s, 3.0, 0, 1e-8).unwrap().a - 9.0).abs() < 1e-9);
        assert!(contour_plan(&s, 3.0, 0, 0.5).is_err());
    }

    #[test]
    fn exponential_clock() {
        let k = BernsteinSpec::pure_kill(1.0).unwrap();
        let f = density_deriv(&k, 2.0, 0, 1e-8).unwrap();
        assert!((f.value - (-2f64).exp()).abs() < 1e-8 * f.value, "{f:?}");
        let g = density_deriv(&k, 2.0, 1, 1e-8).unwrap();
        assert!((g.value + (-2f64).exp()).abs() < 1e-8 * f.value, "{g:?}");
        let t = tail(&k, 1.0, 1e-8).unwrap();
        assert!((t.value - (-1f64).exp()).abs() < 1e-8, "{t:?}");
    }

    #[test]
    fn gamma_two_law() {
        let s = BernsteinSpec::exp_jump_cpp(1.0, 1.0).unwrap();
        let f = density_deriv(&s, 1.0, 0, 1e-8).unwrap();
        assert!((f.value - (-1f64).exp()).abs() < 1e-7, "{f:?}");
        let t = tail(&s, 2.0, 1e-8).unwrap();
        assert!((t.value - 3.0 * (-2f64).exp()).abs() < 1e-7, "{t:?}");
    }

    #[test]
    fn moments() {
        let at = BernsteinSpec::atoms(&[(1.0, 1.0)]).unwrap();
        assert_eq!(moment(&at, 0).unwrap(), 1.0);
        assert!((moment(&at, 1).unwrap() - 1.0 / (1.0 - (-1f64).exp())).abs() < 1e-14);
        let s = BernsteinSpec::stable(1.0, 0.5).unwrap();
        assert!((moment(&s, 4).unwrap() - 24f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn residue_vanishes() {
        let s = BernsteinSpec::stable(1.0, 0.5).unwrap();
        let r = density_deriv_report(&s, 2.0, 0, 1e-8).unwrap();
        assert!(r.imag_residue.unwrap() <= 1e-10, "{r:?}");
    }
}
