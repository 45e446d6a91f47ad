//! Scenario files: TOML with one section per sub-system.
//!
//! ```toml
//! [source]
//! n_bar = 4.975e-3
//! n_bar_alpha = 0.01
//!
//! [idler]
//! eta = 0.99999
//!
//! [eve]
//! eta = 0.99999
//! theta = 0.0
//!
//! [signal]
//! eta = [0.201, 0.56, 0.07, 0.28]
//! xi = 0.05
//! xi_eve = 0.1
//!
//! [noise]
//! idler = 0.001
//! eve = 0.001
//! signal = 0.025
//! signal_eve = 0.0255
//!
//! [intrusion]
//! p_real = 0.0
//! p_false = 0.5
//!
//! [delays]
//! idler_to_signal = 2
//! idler_to_eve = 1
//! eve_to_signal = 2
//! ```
//!
//! Per-mode values are a scalar or a four-element `[H, V, D, A]` array. Background
//! means follow `noise.convention`: `"rescaled"` (default) gives the thermal mean at
//! the beamsplitter input, `"raw"` the mean reaching the detector.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coincidence::{Delays, IntrusionParams, Scenario};
use crate::error::{Error, Result};
use crate::fock::{fair_n_bar, ComponentModel, Numerics, SeriesPolicy};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerMode {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl PerMode {
    fn expand(&self, key: &str) -> Result<[f64; 4]> {
        match self {
            PerMode::Scalar(x) => Ok([*x; 4]),
            PerMode::Vector(v) if v.len() == 1 => Ok([v[0]; 4]),
            PerMode::Vector(v) if v.len() == 4 => Ok([v[0], v[1], v[2], v[3]]),
            PerMode::Vector(v) => Err(Error::Validation {
                key: key.into(),
                msg: format!("expected 1 or 4 entries, found {}", v.len()),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum System {
    #[default]
    Qi,
    Bb84,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ModelName {
    #[default]
    Exact,
    Incoherent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseConvention {
    #[default]
    Rescaled,
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_bar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_bar_alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<System>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_terms: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdlerSection {
    pub eta: PerMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EveSection {
    pub eta: PerMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSection {
    pub eta: PerMode,
    pub xi: f64,
    pub xi_eve: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convention: Option<NoiseConvention>,
    pub idler: PerMode,
    pub eve: PerMode,
    pub signal: PerMode,
    pub signal_eve: PerMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntrusionSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_real: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_false: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelaysSection {
    pub idler_to_signal: u32,
    pub idler_to_eve: u32,
    pub eve_to_signal: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub source: SourceSection,
    pub idler: IdlerSection,
    pub eve: EveSection,
    pub signal: SignalSection,
    pub noise: NoiseSection,
    pub intrusion: IntrusionSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delays: Option<DelaysSection>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

fn unit(key: &str, x: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(Error::Validation { key: key.into(), msg: format!("{x} is outside [0,1]") })
    }
}

fn unit4(key: &str, v: &PerMode) -> Result<[f64; 4]> {
    let a = v.expand(key)?;
    for x in a {
        unit(key, x)?;
    }
    Ok(a)
}

fn nonneg4(key: &str, v: &PerMode) -> Result<[f64; 4]> {
    let a = v.expand(key)?;
    if let Some(x) = a.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
        return Err(Error::Validation { key: key.into(), msg: format!("{x} must be finite and >= 0") });
    }
    Ok(a)
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Parse {
            line: e.span().map(|s| line_of(text, s.start)).unwrap_or(0),
            msg: e.message().to_string(),
        })?;
        file.validate()?;
        Ok(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Domain(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serialises")
    }

    pub fn system(&self) -> System {
        self.source.system.unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        self.to_scenario::<f64>().map(|_| ())
    }

    pub fn to_scenario<T: Real>(&self) -> Result<Scenario<T>> {
        let eta_i = unit4("idler.eta", &self.idler.eta)?;
        let eta_e = unit4("eve.eta", &self.eve.eta)?;
        let eta_s = unit4("signal.eta", &self.signal.eta)?;
        let xi = unit("signal.xi", self.signal.xi)?;
        let xi_eve = unit("signal.xi_eve", self.signal.xi_eve)?;
        let mut n_b_i = nonneg4("noise.idler", &self.noise.idler)?;
        let mut n_b_e = nonneg4("noise.eve", &self.noise.eve)?;
        let mut n_b_s = nonneg4("noise.signal", &self.noise.signal)?;
        let mut n_b_s_eve = nonneg4("noise.signal_eve", &self.noise.signal_eve)?;
        if self.noise.convention.unwrap_or_default() == NoiseConvention::Rescaled {
            for i in 0..4 {
                n_b_i[i] *= 1.0 - eta_i[i];
                n_b_e[i] *= 1.0 - eta_e[i];
                n_b_s[i] *= 1.0 - eta_s[i] * xi;
                n_b_s_eve[i] *= 1.0 - eta_s[i] * xi_eve;
            }
        }

        let (n_bar, n_bar_alpha) = match (self.source.n_bar, self.source.n_bar_alpha) {
            (Some(n), Some(a)) => (n, a),
            (Some(n), None) => (n, 2.0 * n / (1.0 - eta_i[0] * n)),
            (None, Some(a)) => (fair_n_bar(a, eta_i[0]), a),
            (None, None) => {
                return Err(Error::Validation {
                    key: "source.n_bar".into(),
                    msg: "one of n_bar or n_bar_alpha is required".into(),
                })
            }
        };
        for (k, x) in [("source.n_bar", n_bar), ("source.n_bar_alpha", n_bar_alpha)] {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(Error::Validation { key: k.into(), msg: format!("{x} must be >= 0") });
            }
        }

        let it = &self.intrusion;
        let (p_real, p_false) = match (it.p, it.p_real, it.p_false) {
            (_, Some(r), Some(f)) => (r, f),
            (Some(p), Some(r), None) => (r, p - r),
            (Some(p), None, Some(f)) => (p - f, f),
            (Some(p), None, None) => (0.0, p),
            (None, r, f) => (r.unwrap_or(0.0), f.unwrap_or(0.0)),
        };
        unit("intrusion.p_real", p_real)?;
        unit("intrusion.p_false", p_false)?;
        let p = unit("intrusion.p", p_real + p_false)?;
        if let Some(given) = it.p {
            if (given - p).abs() > 1e-12 {
                return Err(Error::Validation {
                    key: "intrusion.p".into(),
                    msg: format!("{given} differs from p_real + p_false = {p}"),
                });
            }
        }
        let r = unit("intrusion.r", it.r.unwrap_or(0.5))?;

        let policy = SeriesPolicy {
            tail_epsilon: self.source.tail_epsilon.unwrap_or(1e-14),
            max_terms: self.source.max_terms.unwrap_or(10_000),
        };
        policy.validate().map_err(|e| Error::Validation { key: "source.tail_epsilon".into(), msg: e.to_string() })?;
        let model = match self.source.model.unwrap_or_default() {
            ModelName::Exact => ComponentModel::Exact,
            ModelName::Incoherent => ComponentModel::Incoherent,
        };
        let delays = self
            .delays
            .map(|d| Delays {
                idler_to_signal: d.idler_to_signal,
                idler_to_eve: d.idler_to_eve,
                eve_to_signal: d.eve_to_signal,
            })
            .unwrap_or_default();

        let v4 = |a: [f64; 4]| a.map(T::lit);
        let sc = Scenario {
            n_bar: T::lit(n_bar),
            n_bar_alpha: T::lit(n_bar_alpha),
            eta_i: v4(eta_i),
            eta_e: v4(eta_e),
            eta_s: v4(eta_s),
            xi: T::lit(xi),
            xi_eve: T::lit(xi_eve),
            n_b_i: v4(n_b_i),
            n_b_e: v4(n_b_e),
            n_b_s: v4(n_b_s),
            n_b_s_eve: v4(n_b_s_eve),
            intrusion: IntrusionParams {
                p: T::lit(p),
                p_real: T::lit(p_real),
                p_false: T::lit(p_false),
                r: T::lit(r),
            },
            theta: T::lit(self.eve.theta.unwrap_or(0.0)),
            delays,
            numerics: Numerics { model, policy },
        };
        sc.validate()?;
        Ok(sc)
    }
}

/// Scenario files shipped with the crate, by name.
pub fn builtin(name: &str) -> Option<&'static str> {
    match name {
        "set1" => Some(include_str!("../../../scenarios/set1.toml")),
        "set2" => Some(include_str!("../../../scenarios/set2.toml")),
        "set2-bb84" => Some(include_str!("../../../scenarios/set2-bb84.toml")),
        "set3" => Some(include_str!("../../../scenarios/set3.toml")),
        _ => None,
    }
}

pub const BUILTIN_NAMES: [&str; 4] = ["set1", "set2", "set2-bb84", "set3"];

pub fn load_builtin(name: &str) -> Result<ScenarioFile> {
    let text = builtin(name).ok_or_else(|| Error::Validation {
        key: "scenario".into(),
        msg: format!("no built-in scenario named {name}"),
    })?;
    ScenarioFile::parse(text)
}
