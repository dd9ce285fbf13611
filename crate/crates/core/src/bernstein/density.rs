//! Lévy measures known only through their tail (or density).

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad::{adaptive, QuadValue, Tolerance, C4};
use crate::special::C64;

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Source {
    Tail(RealFn),
    Density(RealFn),
}

/// A Lévy measure described by its tail μ̄, or by its density from which the
/// tail is obtained by quadrature.
#[derive(Clone)]
pub struct DensityMeasure {
    label: String,
    source: Source,
    density: Option<RealFn>,
    integrated_tail: Option<RealFn>,
    index_at_zero: Option<f64>,
    total_mass: Option<f64>,
}

impl fmt::Debug for DensityMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityMeasure")
            .field("label", &self.label)
            .field("has_density", &self.density.is_some())
            .field("has_integrated_tail", &self.integrated_tail.is_some())
            .field("index_at_zero", &self.index_at_zero)
            .finish()
    }
}

const SMALL_PANEL_DEPTH: usize = 1000;
const LARGE_PANEL_CAP: usize = 200_000;
const REL_TARGET: f64 = 1e-12;
const FILON_DEGREE: usize = 12;
/// Below this |z|·half-width the by-parts series loses accuracy.
const FILON_MIN_OMEGA: f64 = 300.0;

impl DensityMeasure {
    pub fn from_tail(label: impl Into<String>, tail: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        DensityMeasure {
            label: label.into(),
            source: Source::Tail(Arc::new(tail)),
            density: None,
            integrated_tail: None,
            index_at_zero: None,
            total_mass: None,
        }
    }

    pub fn from_density(label: impl Into<String>, density: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let m: RealFn = Arc::new(density);
        DensityMeasure {
            label: label.into(),
            source: Source::Density(m.clone()),
            density: Some(m),
            integrated_tail: None,
            index_at_zero: None,
            total_mass: None,
        }
    }

    pub fn with_density(mut self, density: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.density = Some(Arc::new(density));
        self
    }

    /// I(x) = ∫₀^x μ̄; avoids the small-jump extrapolation when supplied.
    pub fn with_integrated_tail(mut self, itail: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.integrated_tail = Some(Arc::new(itail));
        self
    }

    pub fn with_index_at_zero(mut self, index: f64) -> Self {
        self.index_at_zero = Some(index);
        self
    }

    pub fn with_total_mass(mut self, mass: f64) -> Self {
        self.total_mass = Some(mass);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn index_at_zero(&self) -> Option<f64> {
        self.index_at_zero
    }

    pub fn density(&self, y: f64) -> Option<f64> {
        self.density.as_ref().map(|m| m(y))
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if let Some(ix) = self.index_at_zero {
            if !(0.0..=1.0).contains(&ix) {
                return Err(Error::InvalidSpec(format!("index at zero must lie in [0,1], got {ix}")));
            }
        }
        let mut prev = f64::INFINITY;
        for k in -6..=6 {
            let y = 10f64.powi(k);
            let t = self.tail(y)?;
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::InvalidSpec(format!("tail of '{}' at {y} is {t}", self.label)));
            }
            if t > prev * (1.0 + 1e-9) + 1e-300 {
                return Err(Error::InvalidSpec(format!("tail of '{}' increases near {y}", self.label)));
            }
            prev = t;
        }
        if let Some(i) = &self.integrated_tail {
            let v = i(1.0);
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidSpec(format!("integrated tail of '{}' at 1 is {v}", self.label)));
            }
        }
        Ok(())
    }

    pub fn tail(&self, y: f64) -> Result<f64> {
        match &self.source {
            Source::Tail(t) => Ok(t(y)),
            Source::Density(m) => tail_from_density(m.as_ref(), y),
        }
    }

    /// μ̄(0+), infinite for infinite activity.
    pub fn total_mass(&self) -> f64 {
        if let Some(m) = self.total_mass {
            return m;
        }
        if self.index_at_zero.is_some_and(|ix| ix > 0.0) {
            return f64::INFINITY;
        }
        match self.tail(1e-300) {
            Ok(t) if t.is_finite() && t < 1e15 => t,
            _ => f64::INFINITY,
        }
    }

    pub fn integrated_tail(&self, x: f64) -> Result<f64> {
        if let Some(i) = &self.integrated_tail {
            return Ok(i(x));
        }
        integrate_tail_from_zero(&|y| self.tail(y), None, x)
    }

    fn tail_slope(&self, y: f64) -> Result<f64> {
        if let Some(m) = &self.density {
            return Ok(-m(y));
        }
        let h = 1e-4 * y;
        Ok((self.tail(y + h)? - self.tail(y - h)?) / (2.0 * h))
    }

    /// J_k(z) = ∫₀^∞ y^k e^{−zy} μ̄(y) dy for k = 0..=3.
    pub(crate) fn tail_laplace_moments(&self, z: C64) -> Result<[C64; 4]> {
        let s = z.norm();
        // components are scaled by |z|^k so that they carry comparable weight
        let integrand = |y: f64| -> Result<C4> {
            let base = (-z * y).exp() * self.tail(y)?;
            let ys = y * s;
            Ok(C4([base, base * ys, base * ys * ys, base * ys * ys * ys]))
        };
        let mut acc = C4::default();
        let abs_im = z.im.abs();

        // [1, ∞): march with panels resolving both oscillation and decay
        let mut y: f64 = 1.0;
        let mut panels = 0;
        loop {
            let filon_width = (0.5 * y).min(2.0 / z.re);
            let width = if 0.5 * filon_width * s >= FILON_MIN_OMEGA {
                filon_width
            } else {
                (std::f64::consts::PI / abs_im).min((1.0 / z.re).min(y).max(0.25))
            };
            acc = acc + self.panel(&integrand, z, y, y + width, acc.norm())?;
            y += width;
            panels += 1;
            let t = self.tail(y)?;
            let g = t * (1.0 + (y * s).powi(3)) * (-z.re * y).exp();
            let scale = acc.norm().max(1e-300);
            if t == 0.0 || g / z.re <= 1e-15 * scale {
                break;
            }
            // asymptotic expansion by parts once the tail is slowly varying on the scale 1/|z|
            let slope = self.tail_slope(y)?;
            let ratio = (slope.abs() / t + 3.0 / y) / s;
            if ratio < 0.1 && g / s * 2.0 * ratio * ratio <= 1e-14 * scale {
                let e = (-z * y).exp();
                let zi = z.inv();
                let ys = y * s;
                let mut terms = [C64::new(0.0, 0.0); 4];
                for (k, slot) in terms.iter_mut().enumerate() {
                    let kf = k as f64;
                    let gk = t * ys.powi(k as i32);
                    let dgk = slope * ys.powi(k as i32) + if k > 0 { t * kf * s * ys.powi(k as i32 - 1) } else { 0.0 };
                    *slot = e * (zi * gk + zi * zi * dgk);
                }
                acc = acc + C4(terms);
                break;
            }
            if panels >= LARGE_PANEL_CAP {
                return Err(Error::NonconvergentQuadrature {
                    what: "tail transform at large jumps",
                    estimate: acc.norm(),
                    error: g / z.re,
                });
            }
        }

        // (0, 1]: dyadic panels, then a small-jump remainder
        let mut h = 1.0;
        let mut prev_rho = f64::NAN;
        for _ in 0..SMALL_PANEL_DEPTH {
            let lo = 0.5 * h;
            acc = acc + self.panel(&integrand, z, lo, h, acc.norm())?;
            h = lo;
            let scale = acc.norm().max(1e-300);
            let th = self.tail(h)?;
            if th == 0.0 {
                return Ok(unscale(acc, s));
            }
            let remainder: Option<[f64; 4]> = if let Some(i) = &self.integrated_tail {
                let ih = i(h);
                (s * h * ih <= 1e-13 * scale.max(ih)).then(|| [ih, 0.0, 0.0, 0.0])
            } else {
                let rho = (self.tail(0.5 * h)? / th).log2();
                let stable = (rho - prev_rho).abs() < 1e-6 || rho < 0.05;
                prev_rho = rho;
                if rho < 0.98 && stable {
                    let r0 = h * th / (1.0 - rho);
                    (s * h * r0 <= 1e-13 * scale.max(r0)).then(|| {
                        std::array::from_fn(|k| {
                            let kf = k as f64;
                            (s * h).powi(k as i32) * h * th / (kf + 1.0 - rho)
                        })
                    })
                } else {
                    None
                }
            };
            if let Some(r) = remainder {
                let r = C4(std::array::from_fn(|k| C64::new(r[k], 0.0)));
                return Ok(unscale(acc + r, s));
            }
        }
        Err(Error::NonconvergentQuadrature {
            what: "tail transform at small jumps",
            estimate: acc.norm(),
            error: f64::NAN,
        })
    }
    /// ∫_lo^hi of the scaled integrand, by Filon panels when the oscillation
    /// is fast and by Gauss–Kronrod otherwise.
    fn panel(&self, integrand: &dyn Fn(f64) -> Result<C4>, z: C64, lo: f64, hi: f64, scale: f64) -> Result<C4> {
        let s = z.norm();
        // keep e^{±Re z·half-width} bounded within each Filon piece
        let m = (((hi - lo) * z.re / 2.0).ceil() as usize).max(1);
        let edges = crate::quad::linspace(lo, hi, m);
        let mut acc = C4::default();
        for w in edges.windows(2) {
            acc = acc + self.filon_or_gk(integrand, z, s, w[0], w[1], scale.max(acc.norm()), 0)?;
        }
        Ok(acc)
    }

    fn filon_or_gk(
        &self,
        integrand: &dyn Fn(f64) -> Result<C4>,
        z: C64,
        s: f64,
        lo: f64,
        hi: f64,
        scale: f64,
        depth: usize,
    ) -> Result<C4> {
        let half = 0.5 * (hi - lo);
        if half * s >= FILON_MIN_OMEGA && depth < 30 {
            let (fine, coarse) = self.filon(z, s, lo, hi)?;
            if (fine - coarse).norm() <= REL_TARGET * scale.max(fine.norm()) {
                return Ok(fine);
            }
            let mid = lo + half;
            let left = self.filon_or_gk(integrand, z, s, lo, mid, scale, depth + 1)?;
            return Ok(left + self.filon_or_gk(integrand, z, s, mid, hi, scale.max(left.norm()), depth + 1)?);
        }
        let pieces = ((z.im.abs() * (hi - lo) / std::f64::consts::PI).ceil() as usize).max(1);
        let pts = crate::quad::linspace(lo, hi, pieces);
        let est = adaptive(integrand, &pts, Tolerance::new(1e-14 * scale, REL_TARGET), 200 + 4 * pieces, "tail transform")?;
        Ok(est.value)
    }

    /// ∫_lo^hi e^{−zy} μ̄(y)(ys)^k dy from the Chebyshev interpolant of the
    /// smooth factor, integrated by parts exactly. Returns the estimates of
    /// degree FILON_DEGREE and half that.
    fn filon(&self, z: C64, s: f64, lo: f64, hi: f64) -> Result<(C4, C4)> {
        const N: usize = FILON_DEGREE;
        let c = 0.5 * (lo + hi);
        let h = 0.5 * (hi - lo);
        let mut vals = [[0.0; 4]; N + 1];
        for (i, v) in vals.iter_mut().enumerate() {
            let y = c + h * (std::f64::consts::PI * i as f64 / N as f64).cos();
            let t = self.tail(y)?;
            let ys = y * s;
            *v = [t, t * ys, t * ys * ys, t * ys * ys * ys];
        }
        let omega = z * h;
        let front = (-z * c).exp() * h;
        let fine = chebyshev_ibp(&vals, omega);
        let coarse_vals: Vec<[f64; 4]> = vals.iter().step_by(2).copied().collect();
        let coarse = chebyshev_ibp(&coarse_vals, omega);
        let scale = |v: [C64; 4]| C4(v.map(|x| x * front));
        Ok((scale(fine), scale(coarse)))
    }
}

/// ∫_{−1}^{1} p(u) e^{−ωu} du for the interpolant p through Chebyshev–Lobatto
/// values `vals` (at cos(πi/N)), summing the terminating series
/// Σ_j [p⁽ʲ⁾(−1)e^{ω} − p⁽ʲ⁾(1)e^{−ω}]/ω^{j+1}.
fn chebyshev_ibp(vals: &[[f64; 4]], omega: C64) -> [C64; 4] {
    let n = vals.len() - 1;
    let nf = n as f64;
    // Chebyshev coefficients by the type-I DCT
    let mut coef = vec![[0.0; 4]; n + 1];
    for (k, ck) in coef.iter_mut().enumerate() {
        for (i, v) in vals.iter().enumerate() {
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            let cs = (std::f64::consts::PI * (k * i) as f64 / nf).cos();
            for c in 0..4 {
                ck[c] += w * v[c] * cs;
            }
        }
        let w = if k == 0 || k == n { 1.0 / nf } else { 2.0 / nf };
        for c in ck.iter_mut() {
            *c *= w;
        }
    }
    let ep = omega.exp();
    let em = (-omega).exp();
    let inv = omega.inv();
    let mut out = [C64::new(0.0, 0.0); 4];
    // d[k] = T_k^{(j)}(1), updated in j
    let mut d: Vec<f64> = vec![1.0; n + 1];
    let mut pow = inv;
    for j in 0..=n {
        for c in 0..4 {
            let mut at_plus = 0.0;
            let mut at_minus = 0.0;
            for k in 0..=n {
                let term = coef[k][c] * d[k];
                at_plus += term;
                at_minus += if (k + j) % 2 == 0 { term } else { -term };
            }
            out[c] += (ep * at_minus - em * at_plus) * pow;
        }
        let jf = j as f64;
        for (k, dk) in d.iter_mut().enumerate() {
            let kf = k as f64;
            *dk *= (kf * kf - jf * jf) / (2.0 * jf + 1.0);
        }
        pow *= inv;
    }
    out
}

fn unscale(v: C4, s: f64) -> [C64; 4] {
    let mut out = v.0;
    let mut f = 1.0;
    for c in out.iter_mut().skip(1) {
        f /= s;
        *c *= f;
    }
    out
}

/// μ̄(y) = ∫_y^∞ m.
fn tail_from_density(m: &(dyn Fn(f64) -> f64 + Send + Sync), y: f64) -> Result<f64> {
    let f = |u: f64| Ok(m(u));
    let mut total = 0.0;
    let mut a = y;
    let mut width = y.max(1e-3);
    for k in 0..2000 {
        let b = a + width;
        let est = adaptive(f, &[a, b], Tolerance::new(0.0, 1e-13), 200, "tail from density")?;
        total += est.value;
        if k >= 3 && est.value.abs() <= 1e-16 * total.abs() {
            return Ok(total);
        }
        if est.value == 0.0 && total == 0.0 && k >= 60 {
            return Ok(0.0);
        }
        a = b;
        width *= 2.0;
        if !width.is_finite() {
            break;
        }
    }
    Err(Error::NonconvergentQuadrature { what: "tail from density", estimate: total, error: f64::NAN })
}

/// ∫₀^x μ̄ by dyadic panels towards 0 with a power-law remainder.
pub(crate) fn integrate_tail_from_zero(
    tail: &dyn Fn(f64) -> Result<f64>,
    itail: Option<&dyn Fn(f64) -> f64>,
    x: f64,
) -> Result<f64> {
    if let Some(i) = itail {
        return Ok(i(x));
    }
    let mut total = 0.0;
    let mut h = x;
    let mut prev_rho = f64::NAN;
    for _ in 0..SMALL_PANEL_DEPTH {
        let lo = 0.5 * h;
        let est = adaptive(tail, &[lo, h], Tolerance::new(0.0, 1e-14), 200, "integrated tail")?;
        total += est.value;
        h = lo;
        let th = tail(h)?;
        if th == 0.0 {
            return Ok(total);
        }
        let rho = (tail(0.5 * h)? / th).log2();
        let r = h * th / (1.0 - rho);
        let stable = (rho - prev_rho).abs() < 1e-8;
        prev_rho = rho;
        if rho < 0.98 && (r <= 1e-15 * total || (stable && r <= 1e-2 * total)) {
            return Ok(total + r);
        }
    }
    Err(Error::NonconvergentQuadrature { what: "integrated tail near 0", estimate: total, error: f64::NAN })
}
