//! Gauss–Kronrod quadrature: a fixed G10/K21 panel rule and a globally
//! adaptive driver that bisects the panel with the largest error estimate.
//!
//! The driver is generic over the integrand's value type so that real,
//! complex and small vector-valued integrals share one implementation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Kronrod abscissae on [0, 1] of the 21-point rule; odd indices are the
/// 10-point Gauss nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_7,
    0.973_906_528_517_171_720_1,
    0.930_157_491_355_708_226_0,
    0.865_063_366_688_984_510_7,
    0.780_817_726_586_416_897_1,
    0.679_409_568_299_024_406_2,
    0.562_757_134_668_604_683_3,
    0.433_395_394_129_247_190_8,
    0.294_392_862_701_460_198_1,
    0.148_874_338_981_631_210_9,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_28,
    0.032_558_162_307_964_727_48,
    0.054_755_896_574_351_996_03,
    0.075_039_674_810_919_952_77,
    0.093_125_454_583_697_605_54,
    0.109_387_158_802_297_641_9,
    0.123_491_976_262_065_851_1,
    0.134_709_217_311_473_325_9,
    0.142_775_938_577_060_080_8,
    0.147_739_104_901_338_491_4,
    0.149_445_554_002_916_905_7,
];

/// Gauss weights for XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_59,
    0.149_451_349_150_580_593_1,
    0.219_086_362_515_982_044_0,
    0.269_266_719_309_996_355_1,
    0.295_524_224_714_752_870_2,
];

/// Values that can be integrated: a vector space over the reals with a norm.
pub trait QuadValue:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync
{
    fn norm(&self) -> f64;
}

impl QuadValue for f64 {
    fn norm(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn norm(&self) -> f64 {
        Complex64::norm(*self)
    }
}

/// Four complex components integrated over the same nodes.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct C4(pub [Complex64; 4]);

impl Add for C4 {
    type Output = C4;
    fn add(self, o: C4) -> C4 {
        C4(std::array::from_fn(|i| self.0[i] + o.0[i]))
    }
}

impl Sub for C4 {
    type Output = C4;
    fn sub(self, o: C4) -> C4 {
        C4(std::array::from_fn(|i| self.0[i] - o.0[i]))
    }
}

impl Mul<f64> for C4 {
    type Output = C4;
    fn mul(self, s: f64) -> C4 {
        C4(std::array::from_fn(|i| self.0[i] * s))
    }
}

impl QuadValue for C4 {
    fn norm(&self) -> f64 {
        self.0.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Tolerance { abs, rel }
    }

    pub const fn rel(rel: f64) -> Self {
        Tolerance { abs: 0.0, rel }
    }

    fn target(&self, magnitude: f64) -> f64 {
        self.abs.max(self.rel * magnitude)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
    /// Estimate of the integral of |f|, used as a scale for round-off floors.
    pub l1: f64,
    pub evaluations: usize,
}

/// One G10/K21 panel: (kronrod value, error estimate, integral of |f|).
pub fn gk21<T, F>(f: &F, a: f64, b: f64) -> Result<(T, f64, f64)>
where
    T: QuadValue,
    F: Fn(f64) -> Result<T>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut kron = fc * WGK[10];
    let mut gauss = T::default();
    let mut resabs = WGK[10] * fc.norm();
    let mut values = [(T::default(), T::default()); 10];
    for (j, slot) in values.iter_mut().enumerate() {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        kron = kron + (f1 + f2) * WGK[j];
        resabs += WGK[j] * (f1.norm() + f2.norm());
        if j % 2 == 1 {
            gauss = gauss + (f1 + f2) * WG[j / 2];
        }
        *slot = (f1, f2);
    }
    let mean = kron * 0.5;
    let mut resasc = WGK[10] * (fc - mean).norm();
    for (j, (f1, f2)) in values.iter().enumerate() {
        resasc += WGK[j] * ((*f1 - mean).norm() + (*f2 - mean).norm());
    }
    let scale = half.abs();
    let value = kron * half;
    let resabs = resabs * scale;
    let resasc = resasc * scale;
    let mut err = ((kron - gauss) * half).norm();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * resabs;
    if floor > err {
        err = floor;
    }
    if !err.is_finite() || !value.norm().is_finite() {
        return Err(Error::NonconvergentQuadrature {
            what: "non-finite integrand",
            estimate: value.norm(),
            error: err,
        });
    }
    Ok((value, err, resabs))
}

struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
    l1: f64,
}

impl<T> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl<T> Eq for Panel<T> {}
impl<T> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Adaptive integration over the partition given by `points` (at least two,
/// increasing). Relative tolerance is measured against the modulus of the
/// running total.
pub fn adaptive<T, F>(
    f: F,
    points: &[f64],
    tol: Tolerance,
    max_panels: usize,
    what: &'static str,
) -> Result<Estimate<T>>
where
    T: QuadValue,
    F: Fn(f64) -> Result<T>,
{
    adaptive_with(f, points, tol, max_panels, what, |v: &T| v.norm())
}

/// Like [`adaptive`], but the relative tolerance is measured with `magnitude`
/// (for instance the real part only when the imaginary part is discarded).
pub fn adaptive_with<T, F, M>(
    f: F,
    points: &[f64],
    tol: Tolerance,
    max_panels: usize,
    what: &'static str,
    magnitude: M,
) -> Result<Estimate<T>>
where
    T: QuadValue,
    F: Fn(f64) -> Result<T>,
    M: Fn(&T) -> f64,
{
    assert!(points.len() >= 2, "need at least one interval");
    let mut heap = BinaryHeap::new();
    let mut total = T::default();
    let mut total_err = 0.0;
    let mut l1 = 0.0;
    let mut evals = 0;
    for w in points.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let (v, e, r) = gk21(&f, w[0], w[1])?;
        evals += 21;
        total = total + v;
        total_err += e;
        l1 += r;
        heap.push(Panel { a: w[0], b: w[1], value: v, error: e, l1: r });
    }
    // nothing below 1e-300 is worth resolving
    let floor = |l1: f64| (1e2 * f64::EPSILON * l1).max(1e-300);
    while total_err > tol.target(magnitude(&total)).max(floor(l1)) {
        if heap.len() >= max_panels {
            return Err(Error::NonconvergentQuadrature { what, estimate: magnitude(&total), error: total_err });
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // cannot split further; keep it and stop refining
            heap.push(worst);
            break;
        }
        let (v1, e1, r1) = gk21(&f, worst.a, mid)?;
        let (v2, e2, r2) = gk21(&f, mid, worst.b)?;
        evals += 42;
        total = total - worst.value + v1 + v2;
        total_err += e1 + e2 - worst.error;
        l1 += r1 + r2 - worst.l1;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1, l1: r1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2, l1: r2 });
    }
    // re-sum to shed accumulated update drift
    let mut panels: Vec<_> = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let mut value = T::default();
    let mut err = 0.0;
    let mut abs = 0.0;
    for p in &panels {
        value = value + p.value;
        err += p.error;
        abs += p.l1;
    }
    Ok(Estimate { value, error: err, l1: abs, evaluations: evals })
}

/// Breakpoints splitting [a, b] into `n` equal pieces.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let n = n.max(1);
    (0..=n).map(|i| if i == n { b } else { a + (b - a) * i as f64 / n as f64 }).collect()
}

/// Compensated (Neumaier) summation of complex terms.
#[derive(Default, Clone, Copy, Debug)]
pub struct CompensatedSum {
    sum: Complex64,
    comp: Complex64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: Complex64) {
        let re = neumaier_step(self.sum.re, &mut self.comp.re, x.re);
        let im = neumaier_step(self.sum.im, &mut self.comp.im, x.im);
        self.sum = Complex64::new(re, im);
    }

    pub fn value(&self) -> Complex64 {
        self.sum + self.comp
    }
}

fn neumaier_step(sum: f64, comp: &mut f64, x: f64) -> f64 {
    let t = sum + x;
    if sum.abs() >= x.abs() {
        *comp += (sum - t) + x;
    } else {
        *comp += (x - t) + sum;
    }
    t
}
