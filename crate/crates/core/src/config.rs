//! JSON run configuration.
//!
//! ```json
//! {
//!   "model": "sl",
//!   "M": 3, "N": 3,
//!   "params": {"alpha": -2, "beta": 0.5},
//!   "C": 2,
//!   "delay": {"homogeneous": 20},
//!   "sim": {"t_end": 200, "dt": 0.01, "record_every": 10},
//!   "seed": 0
//! }
//! ```
//!
//! Model parameters, `tau` and the `sim` fields may also be given at the top
//! level (`"alpha": -2, "tau": 20, "t_end": 200`). Unknown keys are rejected.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::lattice::{FhnParams, LatticeSpec, ModelParams, SlParams};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("config {path}: {reason}")]
pub struct ConfigError {
    /// Dotted location of the offending field, `$` for the document root.
    pub path: String,
    pub reason: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Self { path: path.into(), reason: reason.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelaySource {
    Homogeneous(f64),
    /// Two CSV matrices, paths relative to the config file.
    Files { down: PathBuf, right: PathBuf },
}

/// Initial history for `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitSpec {
    /// Same state on every node.
    Constant(Vec<f64>),
    /// Stuart-Landau plane wave number `index` in enumeration order.
    PlaneWave { index: usize },
    /// Synchronous orbit of a single self-coupled node, computed for `settle`
    /// time units and replayed on every node shifted by the field in `eta`.
    Sync { state: Vec<f64>, settle: f64, eta: Option<PathBuf> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub t_end: f64,
    pub dt: Option<f64>,
    pub record_every: usize,
    pub record_from: f64,
    pub init: InitSpec,
    /// Uniform noise amplitude added to the initial state.
    pub noise: f64,
    pub spike_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(rename = "M")]
    pub rows: usize,
    #[serde(rename = "N")]
    pub cols: usize,
    pub params: ModelParams,
    #[serde(rename = "C")]
    pub coupling: f64,
    pub delay: DelaySource,
    pub sim: SimConfig,
    pub seed: u64,
}

impl RunConfig {
    pub fn lattice(&self) -> LatticeSpec {
        LatticeSpec::new(self.rows, self.cols, self.params, self.coupling).expect("validated on parse")
    }

    /// Homogeneous delay, if the config uses one.
    pub fn tau(&self) -> Option<f64> {
        match self.delay {
            DelaySource::Homogeneous(t) => Some(t),
            DelaySource::Files { .. } => None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

const TOP_KEYS: &[&str] = &["model", "M", "N", "params", "C", "delay", "sim", "seed", "tau"];
const SL_KEYS: &[&str] = &["alpha", "beta"];
const FHN_KEYS: &[&str] = &["I", "a", "b", "eps", "v_r"];
const SIM_KEYS: &[&str] = &["t_end", "dt", "record_every", "record_from", "init", "noise", "spike_threshold"];

pub const DEFAULT_T_END: f64 = 100.0;
pub const DEFAULT_RECORD_EVERY: usize = 10;

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| ConfigError::new("$", e.to_string()))?;
    let Value::Object(mut top) = doc else {
        return Err(ConfigError::new("$", "expected a JSON object"));
    };

    let model = match top.remove("model") {
        Some(Value::String(s)) if s == "sl" || s == "fhn" => s,
        Some(other) => return Err(ConfigError::new("model", format!("expected \"sl\" or \"fhn\", got {other}"))),
        None => return Err(ConfigError::new("model", "missing required field")),
    };
    let (param_keys, other_keys) = if model == "sl" { (SL_KEYS, FHN_KEYS) } else { (FHN_KEYS, SL_KEYS) };

    let mut params = take_object(&mut top, "params")?.unwrap_or_default();
    for key in params.keys() {
        if !param_keys.contains(&key.as_str()) {
            return Err(ConfigError::new(format!("params.{key}"), format!("unknown key for model \"{model}\"")));
        }
    }
    hoist(&mut top, &mut params, param_keys, "params")?;
    let mut sim = take_object(&mut top, "sim")?.unwrap_or_default();
    for key in sim.keys() {
        if !SIM_KEYS.contains(&key.as_str()) {
            return Err(ConfigError::new(format!("sim.{key}"), "unknown key"));
        }
    }
    hoist(&mut top, &mut sim, SIM_KEYS, "sim")?;
    for key in top.keys() {
        if other_keys.contains(&key.as_str()) {
            return Err(ConfigError::new(key.as_str(), format!("not a parameter of model \"{model}\"")));
        }
        if !TOP_KEYS.contains(&key.as_str()) {
            return Err(ConfigError::new(key.as_str(), "unknown key"));
        }
    }

    let rows = positive_int(&top, "M")?;
    let cols = positive_int(&top, "N")?;
    let coupling = number(&top, "C", "C")?.ok_or_else(|| ConfigError::new("C", "missing required field"))?;
    if !(coupling >= 0.0 && coupling.is_finite()) {
        return Err(ConfigError::new("C", format!("coupling must be finite and >= 0, got {coupling}")));
    }

    let params = if model == "sl" {
        let req = |k: &str| {
            number(&params, k, &format!("params.{k}"))?
                .ok_or_else(|| ConfigError::new(format!("params.{k}"), "missing required field"))
        };
        ModelParams::StuartLandau(SlParams { alpha: req("alpha")?, beta: req("beta")? })
    } else {
        let opt = |k: &str, d: f64| Ok::<_, ConfigError>(number(&params, k, &format!("params.{k}"))?.unwrap_or(d));
        let p = FhnParams {
            current: opt("I", 0.0)?,
            a: opt("a", FhnParams::DEFAULT_A)?,
            b: opt("b", FhnParams::DEFAULT_B)?,
            eps: opt("eps", FhnParams::DEFAULT_EPS)?,
            v_r: opt("v_r", FhnParams::DEFAULT_V_R)?,
        };
        if !(p.eps > 0.0) {
            return Err(ConfigError::new("params.eps", format!("must be > 0, got {}", p.eps)));
        }
        ModelParams::FitzHughNagumo(p)
    };

    let delay = parse_delay(&mut top)?;
    let sim = parse_sim(&sim, &params)?;
    let seed = match top.get("seed") {
        None => 0,
        Some(v) => v.as_u64().ok_or_else(|| ConfigError::new("seed", "expected a non-negative integer"))?,
    };
    Ok(RunConfig { rows, cols, params, coupling, delay, sim, seed })
}

fn take_object(top: &mut Map<String, Value>, key: &str) -> Result<Option<Map<String, Value>>, ConfigError> {
    match top.remove(key) {
        None => Ok(None),
        Some(Value::Object(m)) => Ok(Some(m)),
        Some(_) => Err(ConfigError::new(key, "expected an object")),
    }
}

/// Move flat shorthand keys from the top level into `section`.
fn hoist(
    top: &mut Map<String, Value>,
    section: &mut Map<String, Value>,
    keys: &[&str],
    name: &str,
) -> Result<(), ConfigError> {
    for key in keys {
        if let Some(v) = top.remove(*key) {
            if section.contains_key(*key) {
                return Err(ConfigError::new(*key, format!("given both at top level and in {name}")));
            }
            section.insert((*key).to_string(), v);
        }
    }
    Ok(())
}

fn number(map: &Map<String, Value>, key: &str, path: &str) -> Result<Option<f64>, ConfigError> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => match v.as_f64() {
            Some(x) if x.is_finite() => Ok(Some(x)),
            _ => Err(ConfigError::new(path, format!("expected a finite number, got {v}"))),
        },
    }
}

fn positive_int(map: &Map<String, Value>, key: &str) -> Result<usize, ConfigError> {
    match map.get(key) {
        None => Err(ConfigError::new(key, "missing required field")),
        Some(v) => match v.as_u64() {
            Some(n) if n >= 1 => Ok(n as usize),
            _ => Err(ConfigError::new(key, format!("expected a positive integer, got {v}"))),
        },
    }
}

fn parse_delay(top: &mut Map<String, Value>) -> Result<DelaySource, ConfigError> {
    let flat = number(top, "tau", "tau")?;
    let delay = match top.remove("delay") {
        None => {
            let tau = flat.ok_or_else(|| ConfigError::new("delay", "missing required field"))?;
            DelaySource::Homogeneous(tau)
        }
        Some(_) if flat.is_some() => return Err(ConfigError::new("tau", "given together with delay")),
        Some(Value::Object(d)) => {
            if d.len() != 1 {
                return Err(ConfigError::new("delay", "expected exactly one of homogeneous, files"));
            }
            if let Some(v) = d.get("homogeneous") {
                let tau = v
                    .as_f64()
                    .ok_or_else(|| ConfigError::new("delay.homogeneous", format!("expected a number, got {v}")))?;
                DelaySource::Homogeneous(tau)
            } else if let Some(Value::Object(f)) = d.get("files") {
                for key in f.keys() {
                    if key != "down" && key != "right" {
                        return Err(ConfigError::new(format!("delay.files.{key}"), "unknown key"));
                    }
                }
                let path = |k: &str| match f.get(k) {
                    Some(Value::String(s)) => Ok(PathBuf::from(s)),
                    _ => Err(ConfigError::new(format!("delay.files.{k}"), "expected a path string")),
                };
                DelaySource::Files { down: path("down")?, right: path("right")? }
            } else {
                let key = d.keys().next().map(String::as_str).unwrap_or("");
                return Err(ConfigError::new(format!("delay.{key}"), "unknown key"));
            }
        }
        Some(_) => return Err(ConfigError::new("delay", "expected an object")),
    };
    if let DelaySource::Homogeneous(tau) = delay {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(ConfigError::new("delay.homogeneous", format!("delay must be > 0, got {tau}")));
        }
    }
    Ok(delay)
}

fn parse_sim(sim: &Map<String, Value>, params: &ModelParams) -> Result<SimConfig, ConfigError> {
    let t_end = number(sim, "t_end", "sim.t_end")?.unwrap_or(DEFAULT_T_END);
    if !(t_end > 0.0) {
        return Err(ConfigError::new("sim.t_end", format!("must be > 0, got {t_end}")));
    }
    let dt = number(sim, "dt", "sim.dt")?;
    if let Some(dt) = dt {
        if !(dt > 0.0) {
            return Err(ConfigError::new("sim.dt", format!("must be > 0, got {dt}")));
        }
    }
    let record_every = match sim.get("record_every") {
        None => DEFAULT_RECORD_EVERY,
        Some(v) => match v.as_u64() {
            Some(n) if n >= 1 => n as usize,
            _ => return Err(ConfigError::new("sim.record_every", format!("expected a positive integer, got {v}"))),
        },
    };
    let record_from = number(sim, "record_from", "sim.record_from")?.unwrap_or(0.0);
    let noise = number(sim, "noise", "sim.noise")?.unwrap_or(0.0);
    if noise < 0.0 {
        return Err(ConfigError::new("sim.noise", format!("must be >= 0, got {noise}")));
    }
    let spike_threshold = number(sim, "spike_threshold", "sim.spike_threshold")?.unwrap_or(0.0);
    let d = params.dim();
    let init = match sim.get("init") {
        None => match params {
            ModelParams::StuartLandau(_) => InitSpec::Constant(vec![0.1, 0.0]),
            ModelParams::FitzHughNagumo(_) => InitSpec::Constant(vec![1.5, 0.0, 0.5]),
        },
        Some(v) => serde_json::from_value::<InitSpec>(v.clone())
            .map_err(|e| ConfigError::new("sim.init", e.to_string()))?,
    };
    match &init {
        InitSpec::Constant(s) | InitSpec::Sync { state: s, .. } if s.len() != d => {
            return Err(ConfigError::new("sim.init", format!("state needs {d} components, got {}", s.len())));
        }
        InitSpec::PlaneWave { .. } if d != 2 => {
            return Err(ConfigError::new("sim.init", "plane_wave history requires model \"sl\""));
        }
        InitSpec::Sync { settle, .. } if !(*settle >= 0.0) => {
            return Err(ConfigError::new("sim.init.sync.settle", "must be >= 0"));
        }
        _ => {}
    }
    Ok(SimConfig { t_end, dt, record_every, record_from, init, noise, spike_threshold })
}
