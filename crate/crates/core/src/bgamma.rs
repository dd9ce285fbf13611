//! Bernstein–gamma functions and the Mellin transform M(z) = Γ(z)/W_φ(z).
//!
//! For f ∈ {φ, φ*} the solution of W(z+1) = f(z)W(z), W(1) = 1, is evaluated
//! through the Stirling-type representation
//!
//! ```text
//! log W_f(z) = ½ log f(1) − log f(z) − ½ log f(z+1) + L_f(z) − E_f(z),
//! L_f(z) = ∫₁^{Re z+1} log f(u) du + i ∫₀^{Im z} log f(Re z + 1 + iw) dw,
//! ```
//!
//! and M = W_{φ*}. The correction E_f(z) = ½∫₁^∞ P(u)(log f(u+z) − log f(u))″du,
//! with P the sawtooth {u}(1 − {u}), is the sum over periods of the trapezoid
//! defects of u ↦ log f(u+z) − log f(u). We sum the defects explicitly up to
//! u ≈ 64 − Re z and close the sum with its Euler–Maclaurin tail.

use rayon::prelude::*;
use serde::Serialize;

use crate::bernstein::BernsteinSpec;
use crate::error::{Error, Result};
use crate::phi_star::{phi_star_real, saddle_window};
use crate::quad::{adaptive, gk21, CompensatedSum, Tolerance};
use crate::special::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Phi,
    PhiStar,
}

/// Start of the Euler–Maclaurin tail for the defect sums.
const SHIFT: f64 = 64.0;
const MAX_PANELS: usize = 4000;

fn log_f(spec: &BernsteinSpec, kind: Kind, w: C64) -> Result<C64> {
    let lp = spec.phi(w)?.ln();
    Ok(match kind {
        Kind::Phi => lp,
        Kind::PhiStar => w.ln() - lp,
    })
}

fn log_f_real(spec: &BernsteinSpec, kind: Kind, u: f64) -> Result<f64> {
    let lp = spec.phi_real(u)?.ln();
    Ok(match kind {
        Kind::Phi => lp,
        Kind::PhiStar => u.ln() - lp,
    })
}

/// (log f)′, (log f)″, (log f)‴ at w.
fn log_f_derivs(spec: &BernsteinSpec, kind: Kind, w: C64) -> Result<[C64; 3]> {
    let d = spec.derivs(w, 3)?;
    let r1 = d[1] / d[0];
    let r2 = d[2] / d[0];
    let r3 = d[3] / d[0];
    let l1 = r1;
    let l2 = r2 - r1 * r1;
    let l3 = r3 - r1 * r2 * 3.0 + r1 * r1 * r1 * 2.0;
    Ok(match kind {
        Kind::Phi => [l1, l2, l3],
        Kind::PhiStar => {
            let wi = w.inv();
            [wi - l1, -wi * wi - l2, wi * wi * wi * 2.0 - l3]
        }
    })
}

fn geometric_points(a: f64, b: f64, start: f64) -> Vec<f64> {
    let mut pts = vec![a];
    let mut p = a + start.max(1e-300);
    while p < b {
        pts.push(p);
        p = a + 2.0 * (p - a);
    }
    pts.push(b);
    pts
}

/// S_f(w) = Σ_{k≥1} [(g(k) + g(k+1))/2 − ∫_k^{k+1} g], g(u) = log f(u + w).
fn defect_sum(spec: &BernsteinSpec, kind: Kind, w: C64) -> Result<(C64, f64)> {
    let k = (SHIFT - 1.0 - w.re).ceil().max(0.0) as usize;
    let m = (k + 1) as f64;
    let g = |u: f64| log_f(spec, kind, w + u);
    let mut value = C64::new(0.0, 0.0);
    let mut error = 0.0;
    if k > 0 {
        let mut sum = CompensatedSum::default();
        for j in 1..=k + 1 {
            let v = g(j as f64)?;
            sum.add(if j == 1 || j == k + 1 { v * 0.5 } else { v });
        }
        let pts = geometric_points(1.0, m, 1.0);
        let est = adaptive(g, &pts, Tolerance::new(1e-14, 1e-16), MAX_PANELS, "trapezoid defect integral")?;
        value = sum.value() - est.value;
        error += est.error;
    }
    let [d1, _, d3] = log_f_derivs(spec, kind, w + m)?;
    value += -d1 / 12.0 + d3 / 720.0;
    // next Euler–Maclaurin term, bounded through the distance to the imaginary axis
    error += 24.0 / (30240.0 * (m + w.re).powi(5));
    Ok((value, error))
}

fn defect_at_zero(spec: &BernsteinSpec, kind: Kind) -> Result<C64> {
    let cell = match kind {
        Kind::Phi => &spec.cache.defect_phi,
        Kind::PhiStar => &spec.cache.defect_phistar,
    };
    cell.get_or_init(|| defect_sum(spec, kind, C64::new(0.0, 0.0)).map(|v| v.0)).clone()
}

/// ∫₁^r log f(u) du.
fn horizontal(spec: &BernsteinSpec, kind: Kind, r: f64) -> Result<(f64, f64)> {
    if r == 1.0 {
        return Ok((0.0, 0.0));
    }
    let (lo, hi, sign) = if r > 1.0 { (1.0, r, 1.0) } else { (r, 1.0, -1.0) };
    let pts = if r > 1.0 {
        geometric_points(lo, hi, 1.0)
    } else {
        // towards a possible logarithmic singularity at 0
        let mut p = vec![hi];
        let mut x = hi;
        while x * 0.5 > lo {
            x *= 0.5;
            p.push(x);
        }
        p.push(lo);
        p.reverse();
        p
    };
    let est = adaptive(
        |u| log_f_real(spec, kind, u),
        &pts,
        Tolerance::new(1e-15, 1e-15),
        MAX_PANELS,
        "horizontal Stirling integral",
    )?;
    Ok((sign * est.value, est.error))
}

/// ∫₀^b log f(a + iw) dw.
fn vertical(spec: &BernsteinSpec, kind: Kind, a: f64, b: f64) -> Result<(C64, f64)> {
    if b == 0.0 {
        return Ok((C64::new(0.0, 0.0), 0.0));
    }
    let top = b.abs();
    let pts = geometric_points(0.0, top, a.min(top));
    let est = adaptive(
        |w| log_f(spec, kind, C64::new(a, w)),
        &pts,
        Tolerance::new(1e-15, 1e-15),
        MAX_PANELS,
        "vertical Stirling integral",
    )?;
    // conjugation keeps exact symmetry in b
    let v = if b > 0.0 { est.value } else { -est.value.conj() };
    Ok((v, est.error))
}

fn log_bgamma(spec: &BernsteinSpec, kind: Kind, z: C64, horizontal_part: Option<(f64, f64)>) -> Result<(C64, f64)> {
    if !(z.re > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::domain(format!("need Re z > 0, got {z}")));
    }
    let l1 = log_f_real(spec, kind, 1.0)?;
    let lz = log_f(spec, kind, z)?;
    let lz1 = log_f(spec, kind, z + 1.0)?;
    let (g, eg) = match horizontal_part {
        Some(h) => h,
        None => horizontal(spec, kind, z.re + 1.0)?,
    };
    let (v, ev) = vertical(spec, kind, z.re + 1.0, z.im)?;
    let (s, es) = defect_sum(spec, kind, z)?;
    let s0 = defect_at_zero(spec, kind)?;
    let value = -lz - lz1 * 0.5 + C64::new(0.5 * l1 + g, 0.0) + C64::i() * v - (s - s0);
    Ok((value, eg + ev + es))
}

/// log W_φ(z) on the principal branch, continued along the bent contour.
pub fn log_w(spec: &BernsteinSpec, z: C64) -> Result<C64> {
    Ok(log_bgamma(spec, Kind::Phi, z, None)?.0)
}

/// log M(z) = log Γ(z) − log W_φ(z), evaluated directly as log W_{φ*}(z).
pub fn log_mellin(spec: &BernsteinSpec, z: C64) -> Result<C64> {
    Ok(log_bgamma(spec, Kind::PhiStar, z, None)?.0)
}

/// log M(z) together with an absolute error estimate.
pub fn log_mellin_with_error(spec: &BernsteinSpec, z: C64) -> Result<(C64, f64)> {
    log_bgamma(spec, Kind::PhiStar, z, None)
}

/// log M along a vertical line, with the horizontal part computed once.
#[derive(Clone, Debug)]
pub struct MellinLine<'a> {
    spec: &'a BernsteinSpec,
    a: f64,
    horizontal: (f64, f64),
}

impl<'a> MellinLine<'a> {
    pub fn new(spec: &'a BernsteinSpec, a: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::domain(format!("abscissa must be positive, got {a}")));
        }
        let horizontal = horizontal(spec, Kind::PhiStar, a + 1.0)?;
        Ok(MellinLine { spec, a, horizontal })
    }

    pub fn abscissa(&self) -> f64 {
        self.a
    }

    pub fn log_mellin(&self, b: f64) -> Result<C64> {
        Ok(log_bgamma(self.spec, Kind::PhiStar, C64::new(self.a, b), Some(self.horizontal))?.0)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct StirlingParts {
    pub g: f64,
    pub g_error: f64,
    pub a: f64,
    pub u: f64,
    /// Shared error estimate of the vertical integral giving A and U.
    pub au_error: f64,
    pub e: C64,
    pub e_error: f64,
}

/// G, A, U and E at z, with L_{φ*}(z − 1) = G − A + iU.
pub fn stirling_parts(spec: &BernsteinSpec, z: C64) -> Result<StirlingParts> {
    if !(z.re > 0.0) {
        return Err(Error::domain(format!("need Re z > 0, got {z}")));
    }
    let (g, g_error) = horizontal(spec, Kind::PhiStar, z.re)?;
    let (v, au_error) = vertical(spec, Kind::PhiStar, z.re, z.im)?;
    let (e, e_error) = e_phis_with_error(spec, z)?;
    Ok(StirlingParts { g, g_error, a: v.im, u: v.re, au_error, e, e_error })
}

/// E_{φ*}(z).
pub fn e_phis(spec: &BernsteinSpec, z: C64) -> Result<C64> {
    Ok(e_phis_with_error(spec, z)?.0)
}

fn e_phis_with_error(spec: &BernsteinSpec, z: C64) -> Result<(C64, f64)> {
    if !(z.re > 0.0) {
        return Err(Error::domain(format!("need Re z > 0, got {z}")));
    }
    let (s, es) = defect_sum(spec, Kind::PhiStar, z)?;
    Ok((s - defect_at_zero(spec, Kind::PhiStar)?, es))
}

fn sawtooth(u: f64) -> f64 {
    let t = u - u.floor();
    t * (1.0 - t)
}

/// Periods used for T and the period-wise E.
fn period_cutoff(spec: &BernsteinSpec) -> usize {
    match spec.measure() {
        crate::bernstein::MeasureSpec::Density(_) => 256,
        crate::bernstein::MeasureSpec::ClosedForm(crate::bernstein::ClosedForm::Custom(_)) => 1024,
        _ => 10_000,
    }
}

/// ½∫₁^U P(u) h(u) du period by period, summed in index order.
fn periodwise<F>(u_max: usize, h: F) -> Result<(C64, f64)>
where
    F: Fn(f64) -> Result<C64> + Sync,
{
    let parts: Vec<Result<(C64, f64)>> = (1..u_max)
        .into_par_iter()
        .map(|k| {
            let a = k as f64;
            let f = |u: f64| Ok(h(u)? * sawtooth(u));
            let (v, e, _) = gk21(&f, a, a + 1.0)?;
            if e <= 1e-15 * v.norm().max(1e-300) || e < 1e-18 {
                return Ok((v, e));
            }
            let est = adaptive(f, &[a, a + 1.0], Tolerance::new(1e-17, 1e-14), 200, "periodic correction integral")?;
            Ok((est.value, est.error))
        })
        .collect();
    let mut sum = CompensatedSum::default();
    let mut err = 0.0;
    for p in parts {
        let (v, e) = p?;
        sum.add(v);
        err += e;
    }
    Ok((sum.value() * 0.5, 0.5 * err))
}

/// T_{φ*} = ½∫₁^∞ P(u)(1/u² − (φ′/φ)² + φ″/φ) du, the limit of E_{φ*}(z)
/// as Re z → ∞.
pub fn t_phis(spec: &BernsteinSpec) -> Result<f64> {
    spec.cache.t_phis.get_or_init(|| t_phis_periodwise(spec, period_cutoff(spec)).map(|(t, _)| t)).clone()
}

/// T_{φ*} with periods up to `u_max` and an Euler–Maclaurin tail; returns
/// (value, error estimate).
pub fn t_phis_periodwise(spec: &BernsteinSpec, u_max: usize) -> Result<(f64, f64)> {
    if u_max < 2 {
        return Err(Error::domain("need at least one period"));
    }
    let (body, err) = periodwise(u_max, |u| {
        let [_, l2, _] = log_f_derivs(spec, Kind::PhiStar, C64::new(u, 0.0))?;
        Ok(-l2)
    })?;
    let um = u_max as f64;
    let [l1, _, l3] = log_f_derivs(spec, Kind::PhiStar, C64::new(um, 0.0))?;
    let tail = l1.re / 12.0 - l3.re / 720.0;
    let tail_err = 24.0 / (30240.0 * um.powi(5)) + 1e-16 * tail.abs();
    Ok((body.re + tail, err + tail_err))
}

/// T_{φ*} as minus the trapezoid-defect sum at 0; an independent route used
/// for cross-checking [`t_phis`].
pub fn t_phis_defect(spec: &BernsteinSpec) -> Result<f64> {
    Ok(-defect_at_zero(spec, Kind::PhiStar)?.re)
}

/// E_{φ*}(z) by period-wise quadrature of the sawtooth integral up to
/// `u_max`, closed with its Euler–Maclaurin tail.
pub fn e_phis_periodwise(spec: &BernsteinSpec, z: C64, u_max: usize) -> Result<C64> {
    if !(z.re > 0.0) {
        return Err(Error::domain(format!("need Re z > 0, got {z}")));
    }
    let (body, _) = periodwise(u_max, |u| {
        let a = log_f_derivs(spec, Kind::PhiStar, z + u)?;
        let b = log_f_derivs(spec, Kind::PhiStar, C64::new(u, 0.0))?;
        Ok(a[1] - b[1])
    })?;
    let um = u_max as f64;
    let a = log_f_derivs(spec, Kind::PhiStar, z + um)?;
    let b = log_f_derivs(spec, Kind::PhiStar, C64::new(um, 0.0))?;
    let tail = (b[0] - a[0]) / 12.0 + (a[2] - b[2]) / 720.0;
    Ok(body + tail)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EnvelopeMode {
    ExponentialDecay,
    ModulusBoundOnly,
}

/// Upper bound for |M(a + ib)|: e^{log_base} up to |b| = b0·a, then decaying
/// like e^{−ε(|b| − b0·a)}. Kept in log form since M(a) overflows for large a.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DecayEnvelope {
    pub a: f64,
    pub epsilon: f64,
    pub b0: f64,
    pub log_base: f64,
    pub mode: EnvelopeMode,
    /// Relative residual of the linear fit of A.
    pub fit_residual: f64,
}

impl DecayEnvelope {
    pub fn log_bound(&self, b: f64) -> f64 {
        match self.mode {
            EnvelopeMode::ModulusBoundOnly => self.log_base,
            EnvelopeMode::ExponentialDecay => {
                let excess = (b.abs() - self.b0 * self.a).max(0.0);
                self.log_base - self.epsilon * excess
            }
        }
    }

    pub fn bound(&self, b: f64) -> f64 {
        self.log_bound(b).exp()
    }

    /// Smallest |b| beyond which the log of the bound is below `log_level`.
    pub fn height_below(&self, log_level: f64) -> Option<f64> {
        match self.mode {
            EnvelopeMode::ModulusBoundOnly => None,
            EnvelopeMode::ExponentialDecay => {
                let drop = (self.log_base - log_level).max(0.0);
                Some(self.b0 * self.a + drop / self.epsilon)
            }
        }
    }
}

const ENVELOPE_PROBES: usize = 9;

/// Fits the decay rate of |M(a + ib)| from the growth of A(a + ib) over a
/// probe range set by the saddle window at x = φ*(a).
pub fn decay_envelope(spec: &BernsteinSpec, a: f64) -> Result<DecayEnvelope> {
    if !(a > 0.0) {
        return Err(Error::domain(format!("abscissa must be positive, got {a}")));
    }
    let log_base = log_mellin(spec, C64::new(a, 0.0))?.re;
    let fallback = |residual: f64| DecayEnvelope {
        a,
        epsilon: 0.0,
        b0: 0.0,
        log_base,
        mode: EnvelopeMode::ModulusBoundOnly,
        fit_residual: residual,
    };
    let scale = phi_star_real(spec, a)
        .ok()
        .filter(|_| spec.d() == 0.0)
        .and_then(|x| saddle_window(spec, x).ok())
        .map(|w| 1.0 / w.h)
        .filter(|s| s.is_finite() && *s > 0.0)
        .unwrap_or(1.0);
    let lo = scale * a;
    let bs: Vec<f64> = (0..ENVELOPE_PROBES).map(|i| lo * (1.0 + 3.0 * i as f64 / (ENVELOPE_PROBES - 1) as f64)).collect();
    let mut arg_vals = Vec::with_capacity(bs.len());
    for &b in &bs {
        match vertical(spec, Kind::PhiStar, a, b) {
            Ok((v, _)) => arg_vals.push(v.im),
            Err(_) => return Ok(fallback(f64::NAN)),
        }
    }
    let n = bs.len() as f64;
    let mb = bs.iter().sum::<f64>() / n;
    let ma = arg_vals.iter().sum::<f64>() / n;
    let sxy: f64 = bs.iter().zip(&arg_vals).map(|(b, v)| (b - mb) * (v - ma)).sum();
    let sxx: f64 = bs.iter().map(|b| (b - mb) * (b - mb)).sum();
    let eps = sxy / sxx;
    let icpt = ma - eps * mb;
    let residual = bs
        .iter()
        .zip(&arg_vals)
        .map(|(b, v)| (v - (eps * b + icpt)).abs() / v.abs().max(1e-300))
        .fold(0.0, f64::max);
    if !(eps > 0.0) || !(residual < 0.05) {
        return Ok(fallback(residual));
    }
    // onset so that the envelope dominates the probed moduli
    let mut onset: f64 = 0.0;
    for &b in &bs {
        let lm = match log_mellin(spec, C64::new(a, b)) {
            Ok(v) => v.re,
            Err(_) => return Ok(fallback(residual)),
        };
        onset = onset.max(b + (lm - log_base) / eps);
    }
    Ok(DecayEnvelope { a, epsilon: eps, b0: onset / a, log_base, mode: EnvelopeMode::ExponentialDecay, fit_residual: residual })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ArgRow {
    pub a: f64,
    pub t: f64,
    pub arg: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ArgTable {
    pub rows: Vec<ArgRow>,
    pub nonnegative: bool,
    /// min of t·arg φ*(a(1+it)) over the grid.
    pub min_t_arg: f64,
    /// min of arg φ*(a(1+it)) over the grid.
    pub min_arg: f64,
}

/// Tabulates arg φ*(a(1 + it)) over the grid.
pub fn arg_phistar_diagnostic(spec: &BernsteinSpec, a_grid: &[f64], t_grid: &[f64]) -> Result<ArgTable> {
    if a_grid.iter().chain(t_grid).any(|v| !(*v > 0.0)) {
        return Err(Error::domain("grids must be positive"));
    }
    let mut rows = Vec::with_capacity(a_grid.len() * t_grid.len());
    for &a in a_grid {
        for &t in t_grid {
            let z = C64::new(a, a * t);
            let arg = z.arg() - spec.phi(z)?.arg();
            rows.push(ArgRow { a, t, arg });
        }
    }
    let nonnegative = rows.iter().all(|r| r.arg >= 0.0);
    let min_t_arg = rows.iter().map(|r| r.t * r.arg).fold(f64::INFINITY, f64::min);
    let min_arg = rows.iter().map(|r| r.arg).fold(f64::INFINITY, f64::min);
    Ok(ArgTable { rows, nonnegative, min_t_arg, min_arg })
}
