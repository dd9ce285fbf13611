//! JSON model configuration.
//!
//! ```json
//! {"model": "stable", "params": {"c": 1.0, "alpha": 0.5}, "q": 0.0, "d": 0.0}
//! ```

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_li;

use crate::bernstein::{BernsteinSpec, ClosedForm, DensityMeasure, MeasureSpec};
use crate::error::{Error, Result};
use crate::special::exp_integral_e1;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub model: String,
    #[serde(default = "empty_object")]
    pub params: serde_json::Value,
    #[serde(default)]
    pub q: f64,
    #[serde(default)]
    pub d: f64,
}

fn empty_object() -> serde_json::Value {
    serde_json::Value::Object(Default::default())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StableParams {
    c: f64,
    alpha: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GammaParams {
    a: f64,
    b: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NoParams {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AtomParams {
    /// [location, mass] pairs.
    atoms: Vec<(f64, f64)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExpParams {
    rate: f64,
    scale: f64,
}

/// Lévy measures with closed-form tail, density and integrated tail.
#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum DensityParams {
    /// μ̄(y) = c y^{−α} e^{−λy}.
    Power {
        c: f64,
        alpha: f64,
        #[serde(default)]
        tempering: f64,
    },
    /// μ̄(y) = a E₁(by).
    Gamma { a: f64, b: f64 },
    /// μ̄(y) = rate e^{−y/scale}.
    Exp { rate: f64, scale: f64 },
    /// μ̄(y) = c y^{−1} (e + |ln y|)^{−p}, 1 < p < e.
    IndexOneLog { c: f64, p: f64 },
}

fn params<T: DeserializeOwned>(model: &str, v: &serde_json::Value) -> Result<T> {
    serde_json::from_value(v.clone()).map_err(|e| Error::Config(format!("params of '{model}': {e}")))
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidSpec(format!("{name} must be positive and finite, got {v}")))
    }
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("model JSON: {e}")))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("reading {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn build(&self) -> Result<BernsteinSpec> {
        let m = self.model.as_str();
        let measure = match m {
            "stable" => {
                let p: StableParams = params(m, &self.params)?;
                MeasureSpec::ClosedForm(ClosedForm::Stable { c: p.c, alpha: p.alpha })
            }
            "gamma_sub" => {
                let p: GammaParams = params(m, &self.params)?;
                MeasureSpec::ClosedForm(ClosedForm::GammaSub { a: p.a, b: p.b })
            }
            "pure_kill" => {
                let _: NoParams = params(m, &self.params)?;
                MeasureSpec::ClosedForm(ClosedForm::PureKill)
            }
            "cpp_atoms" => {
                let p: AtomParams = params(m, &self.params)?;
                BernsteinSpec::atoms(&p.atoms)?.measure().clone()
            }
            "exp_jump_cpp" => {
                let p: ExpParams = params(m, &self.params)?;
                MeasureSpec::ClosedForm(ClosedForm::ExpJumpCpp { rate: p.rate, scale: p.scale })
            }
            "custom_density" => MeasureSpec::Density(density_measure(params(m, &self.params)?)?),
            other => return Err(Error::Config(format!("unknown model '{other}'"))),
        };
        BernsteinSpec::new(self.q, self.d, measure)
    }
}

fn density_measure(p: DensityParams) -> Result<DensityMeasure> {
    Ok(match p {
        DensityParams::Power { c, alpha, tempering: lam } => {
            positive("c", c)?;
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::InvalidSpec(format!("alpha must lie in (0,1), got {alpha}")));
            }
            if !(lam >= 0.0 && lam.is_finite()) {
                return Err(Error::InvalidSpec(format!("tempering must be ≥ 0, got {lam}")));
            }
            DensityMeasure::from_tail("power", move |y| c * y.powf(-alpha) * (-lam * y).exp())
                .with_density(move |y| c * y.powf(-alpha - 1.0) * (alpha + lam * y) * (-lam * y).exp())
                .with_integrated_tail(move |x| {
                    if lam == 0.0 {
                        c * x.powf(1.0 - alpha) / (1.0 - alpha)
                    } else {
                        c * lam.powf(alpha - 1.0) * gamma_li(1.0 - alpha, lam * x)
                    }
                })
                .with_index_at_zero(alpha)
                .with_total_mass(f64::INFINITY)
        }
        DensityParams::Gamma { a, b } => {
            positive("a", a)?;
            positive("b", b)?;
            DensityMeasure::from_tail("gamma", move |y| a * exp_integral_e1(b * y))
                .with_density(move |y| a * (-b * y).exp() / y)
                .with_integrated_tail(move |x| {
                    let t = b * x;
                    a / b * (t * exp_integral_e1(t) - (-t).exp_m1())
                })
                .with_index_at_zero(0.0)
                .with_total_mass(f64::INFINITY)
        }
        DensityParams::Exp { rate, scale } => {
            positive("rate", rate)?;
            positive("scale", scale)?;
            DensityMeasure::from_tail("exp", move |y| rate * (-y / scale).exp())
                .with_density(move |y| rate / scale * (-y / scale).exp())
                .with_integrated_tail(move |x| -rate * scale * (-x / scale).exp_m1())
                .with_index_at_zero(0.0)
                .with_total_mass(rate)
        }
        DensityParams::IndexOneLog { c, p } => index_one_log(c, p)?,
    })
}

/// μ̄(y) = c y^{−1}(e + |ln y|)^{−p}: regularly varying of index 1 at the
/// origin, yet with ∫₀¹ μ̄ finite for p > 1. Monotone for p < e.
pub fn index_one_log(c: f64, p: f64) -> Result<DensityMeasure> {
    positive("c", c)?;
    let e = std::f64::consts::E;
    if !(p > 1.0 && p < e) {
        return Err(Error::InvalidSpec(format!("p must lie in (1, e), got {p}")));
    }
    let at_one = c * e.powf(1.0 - p) / (p - 1.0);
    Ok(DensityMeasure::from_tail("index_one_log", move |y| c / (y * (e + y.ln().abs()).powf(p)))
        .with_density(move |y| {
            let l = y.ln();
            let s = e + l.abs();
            c * (s + p * l.signum()) / (y * y * s.powf(p + 1.0))
        })
        .with_integrated_tail(move |x| {
            let l = x.ln();
            if l <= 0.0 {
                c * (e - l).powf(1.0 - p) / (p - 1.0)
            } else {
                at_one + c * ((e + l).powf(1.0 - p) - e.powf(1.0 - p)) / (1.0 - p)
            }
        })
        .with_index_at_zero(1.0)
        .with_total_mass(f64::INFINITY))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    #[test]
    fn parses_each_model() {
        let cases = [
            (r#"{"model":"stable","params":{"c":1,"alpha":0.5}}"#, 4.0, 2.0),
            (r#"{"model":"pure_kill","q":2}"#, 3.0, 2.0),
            (r#"{"model":"gamma_sub","params":{"a":1,"b":1}}"#, 1.0, 2f64.ln()),
            (r#"{"model":"cpp_atoms","params":{"atoms":[[1,1]]}}"#, 1.0, 1.0 - (-1f64).exp()),
            (r#"{"model":"exp_jump_cpp","params":{"rate":1,"scale":1}}"#, 1.0, 0.5),
            (r#"{"model":"custom_density","params":{"kind":"exp","rate":1,"scale":1}}"#, 1.0, 0.5),
        ];
        for (json, x, phi) in cases {
            let s = ModelConfig::from_json(json).unwrap().build().unwrap();
            let v = s.phi(C64::new(x, 0.0)).unwrap().re;
            assert!((v - phi).abs() < 1e-10, "{json}: {v} vs {phi}");
        }
    }

    #[test]
    fn rejects_unknown_keys_and_models() {
        for json in [
            r#"{"model":"stable","params":{"c":1,"alpha":0.5},"extra":1}"#,
            r#"{"model":"stable","params":{"c":1,"alpha":0.5,"beta":2}}"#,
            r#"{"model":"custom_density","params":{"kind":"exp","rate":1,"scale":1,"x":0}}"#,
            r#"{"model":"levy_flight"}"#,
            r#"{"model":"pure_kill","params":{"q":1}}"#,
        ] {
            assert!(matches!(ModelConfig::from_json(json).and_then(|c| c.build()), Err(Error::Config(_))), "{json}");
        }
        assert!(matches!(
            ModelConfig::from_json(r#"{"model":"stable","params":{"c":1,"alpha":1.5}}"#).unwrap().build(),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn power_density_matches_stable() {
        let alpha: f64 = 0.6;
        let g = statrs::function::gamma::gamma(1.0 - alpha);
        let json = format!(r#"{{"model":"custom_density","params":{{"kind":"power","c":{},"alpha":0.6}}}}"#, 1.0 / g);
        let d = ModelConfig::from_json(&json).unwrap().build().unwrap();
        let s = BernsteinSpec::stable(1.0, alpha).unwrap();
        for z in [C64::new(0.5, 0.0), C64::new(3.0, 7.0)] {
            let (a, b) = (d.phi(z).unwrap(), s.phi(z).unwrap());
            assert!((a - b).norm() < 1e-9 * b.norm(), "{a} vs {b}");
        }
    }

    #[test]
    fn index_one_pieces_are_consistent() {
        let m = index_one_log(1.0, 1.25).unwrap();
        for y in [0.01, 0.5, 0.99, 1.5, 20.0] {
            let h = 1e-6 * y;
            let slope = (m.tail(y + h).unwrap() - m.tail(y - h).unwrap()) / (2.0 * h);
            assert!((slope + m.density(y).unwrap()).abs() < 1e-6 * m.density(y).unwrap(), "{y}");
            let di = (m.integrated_tail(y + h).unwrap() - m.integrated_tail(y - h).unwrap()) / (2.0 * h);
            assert!((di - m.tail(y).unwrap()).abs() < 1e-6 * m.tail(y).unwrap(), "{y}");
        }
        assert!(index_one_log(1.0, 3.0).is_err());
    }
}
