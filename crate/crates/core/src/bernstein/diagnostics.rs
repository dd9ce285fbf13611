//! Numerical diagnostics on a Bernstein function: the positive-increase
//! criteria and a randomized check of the standard inequalities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::BernsteinSpec;
use crate::error::{Error, Result};
use crate::special::C64;

/// Margin below 1 required of λφ′(λ)/φ(λ) for a positive verdict.
pub const DELTA_PI: f64 = 0.05;

#[derive(Clone, Debug, Serialize)]
pub struct PositiveIncreaseReport {
    /// (λ, λφ′(λ)/φ(λ)) over the whole grid.
    pub log_derivative: Vec<(f64, f64)>,
    /// (λ, φ(2λ)/φ(λ)).
    pub doubling_ratio: Vec<(f64, f64)>,
    /// (x, I(2x)/I(x)) on the dual grid x = 1/λ.
    pub integrated_tail_ratio: Vec<(f64, f64)>,
    /// (x, x μ̄(x)/I(x)) on the dual grid.
    pub tail_ratio: Vec<(f64, f64)>,
    /// sup of λφ′/φ over the top two decades of the grid.
    pub limsup_log_derivative: f64,
    pub limsup_doubling_ratio: f64,
    /// liminf of I(2x)/I(x) over the two smallest decades of x.
    pub liminf_integrated_tail_ratio: f64,
    pub liminf_tail_ratio: f64,
    pub verdict: bool,
}

fn window<'a>(pts: &'a [(f64, f64)], lo: f64, hi: f64) -> impl Iterator<Item = f64> + 'a {
    pts.iter().filter(move |p| p.0 >= lo && p.0 <= hi).map(|p| p.1)
}

/// Evaluates the positive-increase criteria on `lambda_grid` (strictly
/// increasing, spanning at least four decades) for a driftless spec.
///
/// Returns the report when λφ′/φ stays below 1 − δ over the top two decades,
/// and `InconclusiveDiagnostic` otherwise.
pub fn positive_increase_report(spec: &BernsteinSpec, lambda_grid: &[f64]) -> Result<PositiveIncreaseReport> {
    if spec.d() > 0.0 {
        return Err(Error::domain("positive-increase criteria need d = 0"));
    }
    if lambda_grid.len() < 2 || lambda_grid.windows(2).any(|w| !(w[1] > w[0])) || !(lambda_grid[0] > 0.0) {
        return Err(Error::domain("lambda grid must be positive and strictly increasing"));
    }
    let lmin = lambda_grid[0];
    let lmax = *lambda_grid.last().unwrap();
    if lmax / lmin < 1e4 * (1.0 - 1e-12) {
        return Err(Error::domain("lambda grid must span at least four decades"));
    }
    let evals: Vec<Result<((f64, f64), (f64, f64))>> = lambda_grid
        .par_iter()
        .map(|&l| {
            let [p, dp, _, _] = spec.derivs_real(l, 1)?;
            let p2 = spec.phi_real(2.0 * l)?;
            Ok(((l, l * dp / p), (l, p2 / p)))
        })
        .collect();
    let mut log_derivative = Vec::with_capacity(evals.len());
    let mut doubling_ratio = Vec::with_capacity(evals.len());
    for e in evals {
        let (a, b) = e?;
        log_derivative.push(a);
        doubling_ratio.push(b);
    }
    let mut integrated_tail_ratio = Vec::new();
    let mut tail_ratio = Vec::new();
    if spec.total_mass() > 0.0 {
        let dual: Vec<Result<((f64, f64), (f64, f64))>> = lambda_grid
            .par_iter()
            .rev()
            .map(|&l| {
                let x = 1.0 / l;
                let ix = spec.integrated_tail(x)?;
                let i2x = spec.integrated_tail(2.0 * x)?;
                let t = spec.levy_tail(x)?;
                Ok(((x, i2x / ix), (x, x * t / ix)))
            })
            .collect();
        for e in dual {
            let (a, b) = e?;
            integrated_tail_ratio.push(a);
            tail_ratio.push(b);
        }
    }

    let top = lmax / 100.0 * (1.0 - 1e-12);
    let sup = |pts: &[(f64, f64)]| window(pts, top, f64::INFINITY).fold(f64::NEG_INFINITY, f64::max);
    let xs_top = 100.0 / lmax * (1.0 + 1e-12);
    let inf = |pts: &[(f64, f64)]| {
        if pts.is_empty() {
            f64::NAN
        } else {
            window(pts, 0.0, xs_top).fold(f64::INFINITY, f64::min)
        }
    };
    let limsup = sup(&log_derivative);
    let verdict = limsup < 1.0 - DELTA_PI;
    let report = PositiveIncreaseReport {
        limsup_log_derivative: limsup,
        limsup_doubling_ratio: sup(&doubling_ratio),
        liminf_integrated_tail_ratio: inf(&integrated_tail_ratio),
        liminf_tail_ratio: inf(&tail_ratio),
        log_derivative,
        doubling_ratio,
        integrated_tail_ratio,
        tail_ratio,
        verdict,
    };
    if verdict {
        Ok(report)
    } else {
        Err(Error::InconclusiveDiagnostic { margin: 1.0 - limsup, report: Box::new(report) })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InequalityRecord {
    pub id: &'static str,
    pub samples: usize,
    pub violations: usize,
    /// Smallest relative slack (rhs − lhs)/rhs observed; negative on violation.
    pub worst_margin: f64,
    pub worst_point: Option<(f64, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub records: Vec<InequalityRecord>,
    /// Sample points where φ could not be evaluated.
    pub evaluation_failures: usize,
    /// The first such point and its error.
    pub first_failure: Option<(f64, f64, String)>,
}

impl ValidationReport {
    pub fn total_violations(&self) -> usize {
        self.records.iter().map(|r| r.violations).sum::<usize>() + self.evaluation_failures
    }
}

const IDS: [&str; 9] = [
    "log_derivative_bound",
    "modulus_ratio",
    "real_part_positive",
    "first_derivative_modulus",
    "second_derivative_modulus",
    "log_derivative_modulus",
    "second_log_derivative_modulus",
    "vertical_increment",
    "argument_contraction",
];

/// (lhs, rhs) pairs, each inequality reading lhs ≤ rhs.
fn inequality_sides(spec: &BernsteinSpec, z: C64) -> Result<[(f64, f64); 9]> {
    let x = z.re;
    let b = z.im;
    let dz = spec.derivs(z, 2)?;
    let dx = spec.derivs_real(x, 2)?;
    let (p, p1, p2) = (dz[0], dz[1], dz[2]);
    let (px, px1, px2) = (dx[0], dx[1], dx[2]);
    Ok([
        (x * px1 / px, 1.0),
        (px / p.norm(), 1.0),
        (-p.re, 0.0),
        (p1.norm(), px1.abs()),
        (p2.norm(), px2.abs()),
        (p1.norm() / p.norm(), 2.0 / x),
        (p2.norm() / p.norm(), 4.0 / (x * x)),
        ((p - px).norm() / px, b.abs() / x),
        (p.arg().abs(), z.arg().abs()),
    ])
}

/// Draws `sample_count` points with Re z and |Im z| log-uniform in
/// [1e-3, 1e3] and checks each inequality; violations are recorded, not raised.
pub fn validate_inequalities(spec: &BernsteinSpec, sample_count: usize, seed: u64) -> Result<ValidationReport> {
    if sample_count == 0 {
        return Err(Error::domain("sample count must be at least 1"));
    }
    let rel_tol = match spec.measure() {
        super::MeasureSpec::Density(_) => 1e-8,
        _ => 1e-10,
    };
    let results: Vec<(C64, Result<[(f64, f64); 9]>)> = (0..sample_count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let re = 10f64.powf(rng.random_range(-3.0..3.0));
            let im = 10f64.powf(rng.random_range(-3.0..3.0));
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let z = C64::new(re, sign * im);
            (z, inequality_sides(spec, z))
        })
        .collect();
    let mut records: Vec<InequalityRecord> = IDS
        .iter()
        .map(|&id| InequalityRecord { id, samples: 0, violations: 0, worst_margin: f64::INFINITY, worst_point: None })
        .collect();
    let mut failures = 0;
    let mut first_failure = None;
    for (z, r) in results {
        let sides = match r {
            Ok(s) => s,
            Err(e) => {
                failures += 1;
                first_failure.get_or_insert((z.re, z.im, e.to_string()));
                continue;
            }
        };
        for (rec, (lhs, rhs)) in records.iter_mut().zip(sides) {
            rec.samples += 1;
            let scale = rhs.abs().max(lhs.abs()).max(f64::MIN_POSITIVE);
            let margin = (rhs - lhs) / scale;
            // the real-part check is strict; the others allow rounding
            let violated = if rec.id == "real_part_positive" {
                !(lhs < 0.0)
            } else {
                !(lhs <= rhs + rel_tol * scale)
            };
            if violated {
                rec.violations += 1;
            }
            if margin < rec.worst_margin || margin.is_nan() {
                rec.worst_margin = margin;
                rec.worst_point = Some((z.re, z.im));
            }
        }
    }
    Ok(ValidationReport { seed, records, evaluation_failures: failures, first_failure })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
    }

    #[test]
    fn stable_has_positive_increase() {
        let s = BernsteinSpec::stable(1.0, 0.5).unwrap();
        let r = positive_increase_report(&s, &grid(1.0, 1e6, 61)).unwrap();
        assert!(r.verdict);
        assert!((r.limsup_log_derivative - 0.5).abs() < 1e-12);
        assert!((r.liminf_integrated_tail_ratio - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn atom_integrated_tail_ratio_is_two() {
        let s = BernsteinSpec::atoms(&[(1.0, 1.0)]).unwrap();
        let r = positive_increase_report(&s, &grid(1.0, 1e6, 61)).unwrap();
        assert!((r.liminf_integrated_tail_ratio - 2.0).abs() < 1e-12);
        assert!(r.limsup_log_derivative < 1e-6);
    }

    #[test]
    fn bad_grids_rejected() {
        let s = BernsteinSpec::stable(1.0, 0.5).unwrap();
        assert!(matches!(positive_increase_report(&s, &grid(1.0, 1e3, 10)), Err(Error::Domain(_))));
        assert!(matches!(positive_increase_report(&s, &[1.0, 1.0, 1e5]), Err(Error::Domain(_))));
        let d = BernsteinSpec::drift_only(1.0).unwrap();
        assert!(matches!(positive_increase_report(&d, &grid(1.0, 1e5, 10)), Err(Error::Domain(_))));
    }

    #[test]
    fn closed_forms_satisfy_inequalities() {
        let specs = [
            BernsteinSpec::stable(1.0, 0.5).unwrap(),
            BernsteinSpec::gamma_sub(1.0, 1.0).unwrap(),
            BernsteinSpec::exp_jump_cpp(1.0, 1.0).unwrap(),
            BernsteinSpec::atoms(&[(1.0, 1.0), (0.1, 3.0)]).unwrap(),
            BernsteinSpec::pure_kill(1.0).unwrap(),
        ];
        for s in &specs {
            let r = validate_inequalities(s, 500, 7).unwrap();
            assert_eq!(r.total_violations(), 0, "{s:?}: {r:?}");
        }
    }

    #[test]
    fn validation_is_reproducible() {
        let s = BernsteinSpec::gamma_sub(1.0, 1.0).unwrap();
        let a = validate_inequalities(&s, 50, 3).unwrap();
        let b = validate_inequalities(&s, 50, 3).unwrap();
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(x.worst_margin.to_bits(), y.worst_margin.to_bits());
        }
    }
}
