//! The conjugate exponent φ*(z) = z/φ(z) and its inverse on the half-line.

use crate::bernstein::BernsteinSpec;
use crate::error::{Error, Result};
use crate::special::C64;

const MAX_ITER: usize = 200;

pub fn phi_star(spec: &BernsteinSpec, z: C64) -> Result<C64> {
    Ok(z / spec.phi(z)?)
}

/// φ* on the positive axis.
pub fn phi_star_real(spec: &BernsteinSpec, v: f64) -> Result<f64> {
    Ok(v / spec.phi_real(v)?)
}

fn phi_star_and_slope(spec: &BernsteinSpec, v: f64) -> Result<(f64, f64)> {
    let [p, dp, _, _] = spec.derivs_real(v, 1)?;
    Ok((v / p, (p - v * dp) / (p * p)))
}

/// Left end of the range of φ* on (0, ∞): 0 when q > 0, 1/φ′(0+) otherwise.
pub fn domain_left(spec: &BernsteinSpec) -> f64 {
    *spec.cache.domain_left.get_or_init(|| {
        if spec.q() > 0.0 {
            return 0.0;
        }
        let slope = spec.exact_phi_prime_at_zero().unwrap_or_else(|| {
            spec.derivs_real(1e-8, 1).map(|d| d[1]).unwrap_or(f64::INFINITY)
        });
        if slope > 1e12 || !slope.is_finite() {
            0.0
        } else {
            1.0 / slope
        }
    })
}

/// The unique v > 0 with φ*(v) = x.
pub fn varphi_star(spec: &BernsteinSpec, x: f64) -> Result<f64> {
    if spec.d() > 0.0 {
        return Err(Error::domain("φ* inverse is only defined here for d = 0"));
    }
    let left = domain_left(spec);
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("need x > 0, got {x}")));
    }
    if left > 0.0 && x <= left + 1e-6 {
        return Err(Error::domain(format!("x = {x} is not above the domain endpoint {left}")));
    }
    let f = |v: f64| -> Result<(f64, f64)> {
        let (val, slope) = phi_star_and_slope(spec, v)?;
        Ok((val - x, slope))
    };
    // bracket
    let start = x * spec.phi_real(1.0)?;
    let (mut lo, mut hi);
    let (f0, _) = f(start)?;
    if f0 == 0.0 {
        return Ok(start);
    }
    if f0 < 0.0 {
        lo = start;
        hi = start * 2.0;
        let mut n = 0;
        while f(hi)?.0 < 0.0 {
            lo = hi;
            hi *= 2.0;
            n += 1;
            if n > 2000 || !hi.is_finite() {
                return Err(Error::NonconvergentRootFind { iterations: n });
            }
        }
    } else {
        hi = start;
        lo = start * 0.5;
        let mut n = 0;
        while f(lo)?.0 > 0.0 {
            hi = lo;
            lo *= 0.5;
            n += 1;
            if n > 2000 || lo == 0.0 {
                return Err(Error::NonconvergentRootFind { iterations: n });
            }
        }
    }
    // safeguarded Newton
    let mut v = 0.5 * (lo + hi);
    for _ in 0..MAX_ITER {
        let (fv, slope) = f(v)?;
        if fv == 0.0 {
            return Ok(v);
        }
        if fv < 0.0 {
            lo = v;
        } else {
            hi = v;
        }
        let newton = v - fv / slope;
        let next = if slope > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - v).abs() <= 1e-15 * v || (hi - lo) <= 4.0 * f64::EPSILON * hi {
            return Ok(next);
        }
        v = next;
    }
    Err(Error::NonconvergentRootFind { iterations: MAX_ITER })
}

/// varphi′(x) = 1/φ*′(varphi(x)).
pub fn varphi_star_deriv(spec: &BernsteinSpec, x: f64) -> Result<f64> {
    let v = varphi_star(spec, x)?;
    let (_, slope) = phi_star_and_slope(spec, v)?;
    Ok(1.0 / slope)
}

/// Saddle-point window: the local scale H = 0.1 varphi/(x varphi′) and the
/// critical-strip width g = varphi^{7/12}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SaddleWindow {
    pub varphi: f64,
    pub h: f64,
    pub g: f64,
}

pub fn saddle_window(spec: &BernsteinSpec, x: f64) -> Result<SaddleWindow> {
    let v = varphi_star(spec, x)?;
    let (_, slope) = phi_star_and_slope(spec, v)?;
    let dv = 1.0 / slope;
    Ok(SaddleWindow { varphi: v, h: 0.1 * v / (x * dv), g: v.powf(7.0 / 12.0) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_inverse_is_explicit() {
        // φ*(v) = v^{1−α}/c, so varphi(x) = (cx)^{1/(1−α)}
        for alpha in [0.3, 0.5, 0.7] {
            let s = BernsteinSpec::stable(1.5, alpha).unwrap();
            for x in [0.01, 0.7, 3.0, 200.0] {
                let v = varphi_star(&s, x).unwrap();
                let exact = (1.5 * x).powf(1.0 / (1.0 - alpha));
                assert!((v - exact).abs() <= 1e-12 * exact, "{alpha} {x}: {v} vs {exact}");
            }
        }
    }

    #[test]
    fn atom_inverse_round_trip() {
        let s = BernsteinSpec::atoms(&[(1.0, 1.0)]).unwrap();
        assert_eq!(domain_left(&s), 1.0);
        let v = varphi_star(&s, 2.0).unwrap();
        assert!((v - 1.5936).abs() < 1e-4);
        assert!((phi_star_real(&s, v).unwrap() - 2.0).abs() < 1e-13);
        assert!(matches!(varphi_star(&s, 1.0), Err(Error::Domain(_))));
        assert!(matches!(varphi_star(&s, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn pure_kill_inverse() {
        let s = BernsteinSpec::pure_kill(2.0).unwrap();
        assert_eq!(domain_left(&s), 0.0);
        assert!((varphi_star(&s, 0.25).unwrap() - 0.5).abs() < 1e-15);
        assert!((varphi_star_deriv(&s, 0.25).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn saddle_window_for_stable() {
        let s = BernsteinSpec::stable(1.0, 0.5).unwrap();
        let w = saddle_window(&s, 2.0).unwrap();
        assert!((w.varphi - 4.0).abs() < 1e-12);
        // varphi′ = 2x = 4, H = 0.1·4/(2·4)
        assert!((w.h - 0.05).abs() < 1e-12);
        assert!((w.g - 4f64.powf(7.0 / 12.0)).abs() < 1e-12);
    }

    #[test]
    fn gamma_domain_left() {
        let s = BernsteinSpec::gamma_sub(2.0, 3.0).unwrap();
        assert!((domain_left(&s) - 1.5).abs() < 1e-15);
    }
}
