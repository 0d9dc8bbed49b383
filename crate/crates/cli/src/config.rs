//! Run configuration as flat `key = value` text.
//!
//! Vectors are written `[1, 2, 3]`. Unset optional constants are written
//! `estimate` (sampled from the objective) or `auto` (planner default).
//! Later assignments override earlier ones, so command-line overrides are
//! applied after the file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use lipadam::driver::{GlobalConfig, DEFAULT_LOCAL_CAP, DEFAULT_TOL};
use lipadam::objectives::{NormKind, Objective, ObjectiveRegistry, ObjectiveSpec, DEFAULT_SAMPLES};
use lipadam::planner::AlphaChoice;
use lipadam::Point;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: `{value}` ({reason})")]
    BadValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("cannot read config {path}: {reason}")]
    Read { path: PathBuf, reason: String },
}

/// Starting point: explicit coordinates or a named preset.
#[derive(Debug, Clone, PartialEq)]
pub enum Start {
    Explicit(Vec<f64>),
    /// `zero`, `ones` or `e1`
    Preset(String),
}

const PRESETS: [&str; 3] = ["zero", "ones", "e1"];

impl Start {
    pub fn resolve(&self, dim: usize) -> Result<Point, ConfigError> {
        let coords = match self {
            Start::Explicit(c) => {
                if c.len() != dim {
                    return Err(bad(
                        "w0",
                        &format_vec(c),
                        format!("expected {dim} coordinates"),
                    ));
                }
                c.clone()
            }
            Start::Preset(p) => match p.as_str() {
                "zero" => vec![0.0; dim],
                "ones" => vec![1.0; dim],
                "e1" => {
                    let mut v = vec![0.0; dim];
                    v[0] = 1.0;
                    v
                }
                _ => return Err(bad("w0", p, "unknown preset")),
            },
        };
        Point::new(coords).map_err(|e| bad("w0", &self.to_string(), e.to_string()))
    }
}

impl fmt::Display for Start {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Start::Explicit(c) => f.write_str(&format_vec(c)),
            Start::Preset(p) => f.write_str(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub objective: String,
    pub dim: usize,
    pub norm: NormKind,
    pub profile: String,
    pub w0: Start,
    /// `None` uses the objective's declared minimizer.
    pub w_star: Option<Vec<f64>>,
    pub delta: Option<f64>,
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub m_const: Option<f64>,
    pub a: Option<f64>,
    pub eps: f64,
    pub beta2: Option<f64>,
    pub alpha: AlphaChoice,
    pub radius: f64,
    pub r0: f64,
    pub safety: f64,
    pub basin_beta1: Option<f64>,
    pub basin_eps: Option<f64>,
    pub basin_beta2: f64,
    /// Multiplies the planned `α` of the local phase.
    pub alpha_scale: f64,
    /// Multiplies the planned `M` of the basin phase.
    pub m_scale: f64,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub local_cap: u64,
    pub basin_cap: Option<u64>,
    pub tail: f64,
    pub out: Option<PathBuf>,
}

/// Every key in serialization order.
pub const KEYS: [&str; 30] = [
    "objective",
    "dim",
    "norm",
    "profile",
    "w0",
    "w_star",
    "delta",
    "mu",
    "sigma",
    "M",
    "A",
    "eps",
    "beta2",
    "alpha",
    "R",
    "R0",
    "safety",
    "basin_beta1",
    "basin_eps",
    "basin_beta2",
    "alpha_scale",
    "m_scale",
    "samples",
    "seed",
    "tol",
    "local_cap",
    "basin_cap",
    "tail",
    "out",
    "config_version",
];

const VERSION: u32 = 1;

fn bad(key: &str, value: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.into(),
    }
}

/// Shortest round-trip form, with an exponent for very small or large values.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

fn format_vec(c: &[f64]) -> String {
    let parts: Vec<String> = c.iter().map(|&x| num(x)).collect();
    format!("[{}]", parts.join(", "))
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| bad(key, value, e.to_string()))
}

fn parse_opt<T: FromStr>(key: &str, value: &str) -> Result<Option<T>, ConfigError>
where
    T::Err: fmt::Display,
{
    match value {
        "estimate" | "auto" => Ok(None),
        _ => parse_num(key, value).map(Some),
    }
}

fn parse_vec(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    let inner = value
        .strip_prefix('[')
        .and_then(|v| v.strip_suffix(']'))
        .ok_or_else(|| bad(key, value, "vectors are written [a, b, …]"))?;
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner.split(',').map(|t| parse_num(key, t.trim())).collect()
}

fn show_opt(v: Option<f64>, unset: &str) -> String {
    v.map_or_else(|| unset.to_string(), num)
}

impl RunConfig {
    pub fn new(objective: impl Into<String>, dim: usize) -> Self {
        let g = GlobalConfig::default();
        RunConfig {
            objective: objective.into(),
            dim,
            norm: NormKind::Euclid,
            profile: "square".into(),
            w0: Start::Preset("ones".into()),
            w_star: None,
            delta: None,
            mu: None,
            sigma: None,
            m_const: None,
            a: None,
            eps: g.eps,
            beta2: None,
            alpha: g.alpha,
            radius: g.radius,
            r0: g.r0,
            safety: g.safety,
            basin_beta1: None,
            basin_eps: None,
            basin_beta2: g.basin_beta2,
            alpha_scale: 1.0,
            m_scale: 1.0,
            samples: DEFAULT_SAMPLES,
            seed: 0,
            tol: DEFAULT_TOL,
            local_cap: DEFAULT_LOCAL_CAP,
            basin_cap: None,
            tail: 0.5,
            out: None,
        }
    }

    /// Assigns one key. Values are trimmed.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key.trim() {
            "objective" => self.objective = v.to_string(),
            "dim" => self.dim = parse_num(key, v)?,
            "norm" => {
                self.norm = v
                    .parse()
                    .map_err(|e: lipadam::objectives::ObjectiveError| bad(key, v, e.to_string()))?
            }
            "profile" => self.profile = v.to_string(),
            "w0" => {
                self.w0 = if v.starts_with('[') {
                    Start::Explicit(parse_vec(key, v)?)
                } else if PRESETS.contains(&v) {
                    Start::Preset(v.to_string())
                } else {
                    return Err(bad(
                        key,
                        v,
                        format!("expected a vector or one of {PRESETS:?}"),
                    ));
                }
            }
            "w_star" => {
                self.w_star = match v {
                    "auto" => None,
                    _ => Some(parse_vec(key, v)?),
                }
            }
            "delta" => self.delta = parse_opt(key, v)?,
            "mu" => self.mu = parse_opt(key, v)?,
            "sigma" => self.sigma = parse_opt(key, v)?,
            "M" => self.m_const = parse_opt(key, v)?,
            "A" => self.a = parse_opt(key, v)?,
            "eps" => self.eps = parse_num(key, v)?,
            "beta2" => self.beta2 = parse_opt(key, v)?,
            "alpha" => {
                self.alpha = v
                    .parse()
                    .map_err(|e: lipadam::planner::PlanError| bad(key, v, e.to_string()))?
            }
            "R" => self.radius = parse_num(key, v)?,
            "R0" => self.r0 = parse_num(key, v)?,
            "safety" => self.safety = parse_num(key, v)?,
            "basin_beta1" => self.basin_beta1 = parse_opt(key, v)?,
            "basin_eps" => self.basin_eps = parse_opt(key, v)?,
            "basin_beta2" => self.basin_beta2 = parse_num(key, v)?,
            "alpha_scale" => self.alpha_scale = parse_num(key, v)?,
            "m_scale" => self.m_scale = parse_num(key, v)?,
            "samples" => self.samples = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "tol" => self.tol = parse_num(key, v)?,
            "local_cap" => self.local_cap = parse_num(key, v)?,
            "basin_cap" => self.basin_cap = parse_opt(key, v)?,
            "tail" => self.tail = parse_num(key, v)?,
            "out" => {
                self.out = match v {
                    "none" => None,
                    _ => Some(PathBuf::from(v)),
                }
            }
            "config_version" => {
                let n: u32 = parse_num(key, v)?;
                if n != VERSION {
                    return Err(bad(key, v, format!("this build reads version {VERSION}")));
                }
            }
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_pairs(parse_pairs(text)?)
    }

    /// Builds from assignments applied in order. `objective` and `dim`
    /// have no default.
    pub fn from_pairs(pairs: Vec<(String, String)>) -> Result<Self, ConfigError> {
        let last = |k: &str| {
            pairs
                .iter()
                .rev()
                .find(|(key, _)| key == k)
                .map(|(_, v)| v.as_str())
        };
        let objective = last("objective").ok_or(ConfigError::Missing("objective"))?;
        let dim = last("dim").ok_or(ConfigError::Missing("dim"))?;
        let mut cfg = RunConfig::new(objective, parse_num("dim", dim)?);
        for (k, v) in &pairs {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Vec<(String, String)>, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        parse_pairs(&text)
    }

    fn value_of(&self, key: &str) -> String {
        match key {
            "objective" => self.objective.clone(),
            "dim" => self.dim.to_string(),
            "norm" => self.norm.to_string(),
            "profile" => self.profile.clone(),
            "w0" => self.w0.to_string(),
            "w_star" => self.w_star.as_deref().map_or("auto".into(), format_vec),
            "delta" => show_opt(self.delta, "estimate"),
            "mu" => show_opt(self.mu, "estimate"),
            "sigma" => show_opt(self.sigma, "estimate"),
            "M" => show_opt(self.m_const, "estimate"),
            "A" => show_opt(self.a, "auto"),
            "eps" => num(self.eps),
            "beta2" => show_opt(self.beta2, "auto"),
            "alpha" => self.alpha.to_string(),
            "R" => num(self.radius),
            "R0" => num(self.r0),
            "safety" => num(self.safety),
            "basin_beta1" => show_opt(self.basin_beta1, "auto"),
            "basin_eps" => show_opt(self.basin_eps, "auto"),
            "basin_beta2" => num(self.basin_beta2),
            "alpha_scale" => num(self.alpha_scale),
            "m_scale" => num(self.m_scale),
            "samples" => self.samples.to_string(),
            "seed" => self.seed.to_string(),
            "tol" => num(self.tol),
            "local_cap" => self.local_cap.to_string(),
            "basin_cap" => self.basin_cap.map_or("auto".into(), |c| c.to_string()),
            "tail" => num(self.tail),
            "out" => self
                .out
                .as_ref()
                .map_or("none".into(), |p| p.display().to_string()),
            "config_version" => VERSION.to_string(),
            _ => unreachable!("key list and serializer out of sync"),
        }
    }

    pub fn build_objective(
        &self,
        registry: &ObjectiveRegistry,
    ) -> Result<Box<dyn Objective>, lipadam::objectives::ObjectiveError> {
        let spec = ObjectiveSpec::new(self.objective.clone(), self.dim)
            .with_norm(self.norm.clone())
            .with_profile(self.profile.clone());
        registry.build(&spec)
    }

    pub fn start(&self) -> Result<Point, ConfigError> {
        self.w0.resolve(self.dim)
    }

    pub fn minimizer(&self) -> Result<Option<Point>, ConfigError> {
        match &self.w_star {
            None => Ok(None),
            Some(c) if c.len() != self.dim => Err(bad(
                "w_star",
                &format_vec(c),
                format!("expected {} coordinates", self.dim),
            )),
            Some(c) => Point::new(c.clone())
                .map(Some)
                .map_err(|e| bad("w_star", &format_vec(c), e.to_string())),
        }
    }

    pub fn global_config(&self) -> Result<GlobalConfig, ConfigError> {
        Ok(GlobalConfig {
            w_star: self.minimizer()?,
            radius: self.radius,
            r0: self.r0,
            samples: self.samples,
            seed: self.seed,
            safety: self.safety,
            delta: self.delta,
            mu: self.mu,
            sigma: self.sigma,
            m_const: self.m_const,
            m_scale: self.m_scale,
            a: self.a,
            eps: self.eps,
            beta2: self.beta2,
            alpha: self.alpha,
            basin_beta1: self.basin_beta1,
            basin_eps: self.basin_eps,
            basin_beta2: self.basin_beta2,
            tol: self.tol,
            basin_cap: self.basin_cap,
            local_cap: self.local_cap,
        })
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for key in KEYS {
            writeln!(f, "{key} = {}", self.value_of(key))?;
        }
        Ok(())
    }
}

/// Splits text into ordered `(key, value)` pairs without interpreting them.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            text: raw.to_string(),
        })?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}
