//! Seeded simulation of I = ∫₀^∞ e^{−ξ_s} ds.
//!
//! Compound Poisson specs are simulated exactly up to the stopping level.
//! Infinite-activity specs keep jumps ≥ ε and replace the smaller ones by
//! their mean drift.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bernstein::{Atom, BernsteinSpec, ClosedForm, MeasureSpec};
use crate::error::{Error, Result};
use crate::inversion;

/// Per-path cap on simulated events.
pub const MAX_EVENTS: usize = 10_000_000;
const TABLE_POINTS_PER_DECADE: f64 = 64.0;
const QUANTILE_LEVELS: [f64; 7] = [0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99];

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub sample_count: usize,
    pub seed: u64,
    #[serde(default = "default_threshold")]
    pub jump_threshold: f64,
    #[serde(default = "default_stop")]
    pub stop_level: f64,
    /// 0 means the rayon default.
    #[serde(default)]
    pub worker_count: usize,
}

fn default_threshold() -> f64 {
    1e-3
}

fn default_stop() -> f64 {
    1e-10
}

impl SimConfig {
    pub fn new(sample_count: usize, seed: u64) -> Self {
        SimConfig { sample_count, seed, jump_threshold: default_threshold(), stop_level: default_stop(), worker_count: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_count == 0 {
            return Err(Error::domain("sample_count must be at least 1"));
        }
        if !(self.stop_level > 0.0 && self.stop_level <= 1e-6) {
            return Err(Error::domain(format!("stop_level must lie in (0, 1e-6], got {}", self.stop_level)));
        }
        if !(self.jump_threshold > 0.0) || !self.jump_threshold.is_finite() {
            return Err(Error::domain(format!("jump_threshold must be positive, got {}", self.jump_threshold)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scheme {
    Exact,
    /// Jumps below `threshold` replaced by the deterministic `drift`.
    SmallJumpDrift { threshold: f64, drift: f64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
    pub min: f64,
    pub max: f64,
    /// (level, value) pairs.
    pub quantiles: Vec<(f64, f64)>,
}

impl Summary {
    pub fn from_draws(draws: &[f64]) -> Summary {
        let n = draws.len();
        let nf = n as f64;
        let mean = draws.iter().sum::<f64>() / nf;
        let variance = if n > 1 { draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0) } else { 0.0 };
        let mut sorted = draws.to_vec();
        sorted.sort_by(f64::total_cmp);
        let quantiles = QUANTILE_LEVELS.iter().map(|&p| (p, quantile(&sorted, p))).collect();
        Summary {
            count: n,
            mean,
            variance,
            std_error: (variance / nf).sqrt(),
            min: sorted.first().copied().unwrap_or(f64::NAN),
            max: sorted.last().copied().unwrap_or(f64::NAN),
            quantiles,
        }
    }
}

/// Linear interpolation between order statistics.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = p * (sorted.len() - 1) as f64;
    let i = h.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (h - i as f64) * (sorted[j] - sorted[i])
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleBatch {
    pub draws: Vec<f64>,
    pub summary: Summary,
    pub config: SimConfig,
    pub scheme: Scheme,
    /// Set when small jumps were replaced by drift.
    pub scheme_bias: bool,
    /// Upper bound on the mean mass discarded by stopping paths, stop_level·mean.
    pub truncation_bias_bound: f64,
}

#[derive(Serialize)]
struct SummaryExport<'a> {
    summary: &'a Summary,
    config: &'a SimConfig,
    scheme: &'a Scheme,
    scheme_bias: bool,
    truncation_bias_bound: f64,
}

impl SampleBatch {
    /// One draw per line under a `draw` header.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Config(format!("writing CSV: {e}"));
        out.write_record(["draw"]).map_err(io)?;
        for d in &self.draws {
            out.write_record([format!("{d:e}")]).map_err(io)?;
        }
        out.flush().map_err(|e| Error::Config(format!("writing CSV: {e}")))
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::to_value(SummaryExport {
            summary: &self.summary,
            config: &self.config,
            scheme: &self.scheme,
            scheme_bias: self.scheme_bias,
            truncation_bias_bound: self.truncation_bias_bound,
        })
        .expect("summary serializes")
    }

    /// Fraction of draws above x.
    pub fn empirical_tail(&self, x: f64) -> f64 {
        self.draws.iter().filter(|&&d| d > x).count() as f64 / self.draws.len() as f64
    }
}

/// Jump-size law conditioned on the simulated jumps.
enum JumpLaw {
    None,
    Discrete { atoms: Vec<Atom>, cumulative: Vec<f64> },
    Exponential { scale: f64 },
    /// μ̄(y) ∝ y^{−α} on [ε, ∞).
    Pareto { lower: f64, alpha: f64 },
    /// Inverse of a tabulated tail, log-linear between nodes.
    Table { log_y: Vec<f64>, log_tail: Vec<f64> },
}

impl JumpLaw {
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            JumpLaw::None => f64::INFINITY,
            JumpLaw::Discrete { atoms, cumulative } => {
                let u = rng.random::<f64>() * cumulative[cumulative.len() - 1];
                let i = cumulative.partition_point(|&c| c <= u).min(atoms.len() - 1);
                atoms[i].location
            }
            JumpLaw::Exponential { scale } => scale * rng.sample::<f64, _>(Exp1),
            JumpLaw::Pareto { lower, alpha } => {
                let u: f64 = 1.0 - rng.random::<f64>();
                lower * u.powf(-1.0 / alpha)
            }
            JumpLaw::Table { log_y, log_tail } => {
                // target tail level ln(U μ̄(y₀)), U in (0, 1]
                let target = (1.0 - rng.random::<f64>()).ln() + log_tail[0];
                let last = log_tail.len() - 1;
                if target <= log_tail[last] {
                    return log_y[last].exp();
                }
                // log_tail is non-increasing
                let i = log_tail.partition_point(|&t| t >= target).clamp(1, last);
                let (t0, t1) = (log_tail[i - 1], log_tail[i]);
                let w = if t0 > t1 && t1.is_finite() { (t0 - target) / (t0 - t1) } else { 0.0 };
                (log_y[i - 1] + w * (log_y[i] - log_y[i - 1])).exp()
            }
        }
    }
}

struct Simulator {
    kill: f64,
    jump_rate: f64,
    drift: f64,
    law: JumpLaw,
    log_stop: f64,
}

impl Simulator {
    fn path(&self, rng: &mut ChaCha8Rng) -> Result<f64> {
        let total = self.kill + self.jump_rate;
        let mut s: f64 = 0.0;
        let mut acc = 0.0;
        for _ in 0..MAX_EVENTS {
            let tau: f64 = rng.sample::<f64, _>(Exp1) / total;
            let level = (-s).exp();
            acc += if self.drift > 0.0 {
                let ds = self.drift * tau;
                s += ds;
                level * if ds < 1e-12 { tau } else { -(-ds).exp_m1() / self.drift }
            } else {
                level * tau
            };
            if rng.random::<f64>() * total < self.kill {
                return Ok(acc);
            }
            s += self.law.sample(rng);
            if -s <= self.log_stop {
                return Ok(acc);
            }
        }
        Err(Error::BudgetExceeded(format!("path exceeded {MAX_EVENTS} events")))
    }
}

fn tail_table(spec: &BernsteinSpec, lower: f64) -> Result<JumpLaw> {
    let t0 = spec.levy_tail(lower)?;
    let mut hi = lower;
    let mut n = 0;
    while spec.levy_tail(hi)? > 1e-14 * t0 && n < 400 {
        hi *= 2.0;
        n += 1;
    }
    let decades = (hi / lower).log10();
    let points = (decades * TABLE_POINTS_PER_DECADE).ceil().max(2.0) as usize;
    let log_y: Vec<f64> = crate::quad::linspace(lower.ln(), hi.ln(), points);
    let log_tail = log_y
        .par_iter()
        .map(|&ly| spec.levy_tail(ly.exp()).map(f64::ln))
        .collect::<Result<Vec<_>>>()?;
    Ok(JumpLaw::Table { log_y, log_tail })
}

fn simulator(spec: &BernsteinSpec, config: &SimConfig) -> Result<(Simulator, Scheme)> {
    if spec.d() > 0.0 {
        return Err(Error::domain("simulation needs d = 0"));
    }
    let log_stop = config.stop_level.ln();
    let kill = spec.q();
    if spec.is_compound_poisson() {
        let mass = spec.total_mass();
        if kill == 0.0 && mass == 0.0 {
            return Err(Error::domain("the zero Bernstein function has I = ∞"));
        }
        let law = match spec.measure() {
            MeasureSpec::ClosedForm(ClosedForm::PureKill) => JumpLaw::None,
            MeasureSpec::ClosedForm(ClosedForm::ExpJumpCpp { scale, .. }) => JumpLaw::Exponential { scale: *scale },
            MeasureSpec::Atoms(atoms) => {
                let cumulative = atoms
                    .iter()
                    .scan(0.0, |c, a| {
                        *c += a.mass;
                        Some(*c)
                    })
                    .collect();
                JumpLaw::Discrete { atoms: atoms.clone(), cumulative }
            }
            // mass below 1e-12 is moved up to 1e-12
            _ => tail_table(spec, 1e-12)?,
        };
        return Ok((Simulator { kill, jump_rate: mass, drift: 0.0, law, log_stop }, Scheme::Exact));
    }
    let eps = config.jump_threshold;
    // ∫₀^ε y μ(dy) = I(ε) − ε μ̄(ε)
    let rate = spec.levy_tail(eps)?;
    let drift = spec.integrated_tail(eps)? - eps * rate;
    let law = match spec.measure() {
        MeasureSpec::ClosedForm(ClosedForm::Stable { alpha, .. }) => JumpLaw::Pareto { lower: eps, alpha: *alpha },
        _ => tail_table(spec, eps)?,
    };
    Ok((Simulator { kill, jump_rate: rate, drift: drift.max(0.0), law, log_stop }, Scheme::SmallJumpDrift { threshold: eps, drift }))
}

/// Draws sample i from stream i of the seeded generator, so the output does
/// not depend on the worker count.
pub fn sample_batch(spec: &BernsteinSpec, config: &SimConfig) -> Result<SampleBatch> {
    config.validate()?;
    let (sim, scheme) = simulator(spec, config)?;
    let key = ChaCha8Rng::seed_from_u64(config.seed).get_seed();
    let run = || {
        (0..config.sample_count)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::from_seed(key);
                rng.set_stream(i as u64);
                sim.path(&mut rng)
            })
            .collect::<Result<Vec<f64>>>()
    };
    let draws = if config.worker_count > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.worker_count)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(run)?
    } else {
        run()?
    };
    let summary = Summary::from_draws(&draws);
    Ok(SampleBatch {
        truncation_bias_bound: config.stop_level * summary.mean,
        scheme_bias: scheme != Scheme::Exact,
        draws,
        summary,
        config: config.clone(),
        scheme,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CompareRow {
    pub x: f64,
    pub empirical_tail: f64,
    pub inverted_tail: f64,
    pub std_error: f64,
    pub z_score: f64,
    /// |z| > 4.
    pub flagged: bool,
}

/// Empirical against inverted tails. The standard error uses the empirical
/// frequency clamped to [1/N, 1 − 1/N].
pub fn compare_batch(spec: &BernsteinSpec, batch: &SampleBatch, xs: &[f64], tol: f64) -> Result<Vec<CompareRow>> {
    let n = batch.draws.len() as f64;
    xs.iter()
        .map(|&x| {
            let emp = batch.empirical_tail(x);
            let inv = inversion::tail(spec, x, tol)?.value;
            let p = emp.clamp(1.0 / n, 1.0 - 1.0 / n);
            let se = (p * (1.0 - p) / n).sqrt();
            let z = (emp - inv) / se;
            Ok(CompareRow { x, empirical_tail: emp, inverted_tail: inv, std_error: se, z_score: z, flagged: z.abs() > 4.0 })
        })
        .collect()
}

pub fn compare_to_inversion(spec: &BernsteinSpec, config: &SimConfig, xs: &[f64]) -> Result<Vec<CompareRow>> {
    if xs.is_empty() {
        return Ok(Vec::new());
    }
    let batch = sample_batch(spec, config)?;
    compare_batch(spec, &batch, xs, 1e-8)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_kill_is_exponential() {
        let s = BernsteinSpec::pure_kill(1.0).unwrap();
        let b = sample_batch(&s, &SimConfig::new(200_000, 3)).unwrap();
        assert!((b.summary.mean - 1.0).abs() < 3.0 * b.summary.std_error, "{:?}", b.summary);
        assert!((b.summary.variance - 1.0).abs() < 0.03);
        assert_eq!(b.scheme, Scheme::Exact);
    }

    #[test]
    fn reproducible_across_worker_counts() {
        let s = BernsteinSpec::atoms(&[(1.0, 1.0)]).unwrap();
        let mut c = SimConfig::new(5000, 11);
        c.worker_count = 1;
        let a = sample_batch(&s, &c).unwrap();
        c.worker_count = 3;
        let b = sample_batch(&s, &c).unwrap();
        assert_eq!(a.draws, b.draws);
        c.seed = 12;
        assert_ne!(a.draws, sample_batch(&s, &c).unwrap().draws);
    }

    #[test]
    fn exp_jump_tail_matches_gamma_law() {
        let s = BernsteinSpec::exp_jump_cpp(1.0, 1.0).unwrap();
        let b = sample_batch(&s, &SimConfig::new(200_000, 5)).unwrap();
        let p = b.empirical_tail(2.0);
        let exact = 3.0 * (-2f64).exp();
        let se = (exact * (1.0 - exact) / 200_000.0).sqrt();
        assert!((p - exact).abs() < 3.0 * se, "{p} vs {exact}");
    }

    #[test]
    fn stable_uses_drift_scheme() {
        let s = BernsteinSpec::stable(1.0, 0.5).unwrap();
        let b = sample_batch(&s, &SimConfig::new(20_000, 1)).unwrap();
        assert!(b.scheme_bias);
        // E[I] = 1/φ(1) = 1
        assert!((b.summary.mean - 1.0).abs() < 0.05, "{:?}", b.summary);
    }

    #[test]
    fn config_checks() {
        let s = BernsteinSpec::pure_kill(1.0).unwrap();
        let mut c = SimConfig::new(10, 0);
        c.stop_level = 1e-3;
        assert!(matches!(sample_batch(&s, &c), Err(Error::Domain(_))));
        assert!(matches!(sample_batch(&s, &SimConfig::new(0, 0)), Err(Error::Domain(_))));
        assert!(compare_to_inversion(&s, &SimConfig::new(10, 0), &[]).unwrap().is_empty());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let s = BernsteinSpec::pure_kill(2.0).unwrap();
        let b = sample_batch(&s, &SimConfig::new(3, 0)).unwrap();
        let mut out = Vec::new();
        b.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("draw\n"));
    }

    #[test]
    fn quantiles_interpolate() {
        let s = Summary::from_draws(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(s.quantiles[3], (0.5, 3.0));
        assert!((s.variance - 2.5).abs() < 1e-15);
    }
}
