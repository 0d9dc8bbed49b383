//! Objective oracles: value, Clarke selection `ζ_w`, and (optionally) a known
//! minimizer.
//!
//! Built-in families are registered by name in an [`ObjectiveRegistry`] so the
//! command line and config files can select them at runtime. New families
//! plug in by registering a constructor.

mod builtin;
mod estimate;
mod phi_norm;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::minnorm::MinNormError;
use crate::vector::{Point, VectorError};

pub use builtin::{SqL2Scaled, SqLinf};
pub use estimate::{
    check_estimate_transfer, estimate_descent_constant, estimate_growth, estimate_lipschitz,
    DescentSampling, HypothesisEstimate, TransferReport, DEFAULT_SAMPLES,
};
pub use phi_norm::{
    KinkedSquare, NormKind, PhiNormObjective, PhiProfile, ProfileDerivative, ProfileRegistry,
    Square,
};

/// Coordinates within `TIE_TOL · ‖w‖∞` of the max are treated as tied when
/// deciding whether `‖·‖∞` is differentiable.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObjectiveError {
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error(transparent)]
    MinNorm(#[from] MinNormError),
    #[error("profile derivative undefined at radius {radius} (no one-sided derivative)")]
    UndefinedDerivative { radius: f64 },
    #[error("unknown objective `{0}`")]
    UnknownObjective(String),
    #[error("unknown profile `{0}`")]
    UnknownProfile(String),
    #[error("invalid objective spec: {0}")]
    InvalidSpec(String),
    #[error("hypothesis violation: {reason}")]
    HypothesisViolation {
        reason: String,
        estimate: Box<HypothesisEstimate>,
    },
}

/// A locally Lipschitz objective `C: ℝᴺ → ℝ` together with its selection
/// `ζ_w` from the Clarke generalized gradient (the gradient where `C` is
/// differentiable, the least-norm element otherwise).
pub trait Objective: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn value(&self, w: &Point) -> f64;

    fn clarke_selection(&self, w: &Point) -> Result<Point, ObjectiveError>;

    /// Whether `C` is differentiable at `w` (up to the tie tolerance).
    fn is_smooth_at(&self, _w: &Point) -> bool {
        true
    }

    /// A known minimizer with `ζ_{w*} = 0`, if the family declares one.
    fn minimizer(&self) -> Option<Point> {
        None
    }
}

impl fmt::Debug for dyn Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Objective({}, dim={})", self.name(), self.dim())
    }
}

/// Name + parameters selecting an objective from the registry.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSpec {
    pub name: String,
    pub dim: usize,
    pub norm: NormKind,
    pub profile: String,
}

impl ObjectiveSpec {
    pub fn new(name: impl Into<String>, dim: usize) -> Self {
        ObjectiveSpec {
            name: name.into(),
            dim,
            norm: NormKind::Euclid,
            profile: "square".to_string(),
        }
    }

    pub fn with_norm(mut self, norm: NormKind) -> Self {
        self.norm = norm;
        self
    }

    pub fn with_profile(mut self, profile: impl Into<String>) -> Self {
        self.profile = profile.into();
        self
    }
}

type Constructor =
    Box<dyn Fn(&ObjectiveSpec) -> Result<Box<dyn Objective>, ObjectiveError> + Send + Sync>;

pub struct ObjectiveRegistry {
    entries: BTreeMap<String, Constructor>,
}

impl ObjectiveRegistry {
    pub fn empty() -> Self {
        ObjectiveRegistry {
            entries: BTreeMap::new(),
        }
    }

    /// Registry holding `sq_l2_scaled`, `sq_linf` and `phi_norm`.
    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        reg.register("sq_l2_scaled", |spec| {
            Ok(Box::new(SqL2Scaled::new(spec.dim)?) as Box<dyn Objective>)
        });
        reg.register("sq_linf", |spec| {
            Ok(Box::new(SqLinf::new(spec.dim)?) as Box<dyn Objective>)
        });
        reg.register("phi_norm", |spec| {
            let profile = ProfileRegistry::with_builtins().build(&spec.profile)?;
            Ok(
                Box::new(PhiNormObjective::new(profile, spec.norm.clone(), spec.dim)?)
                    as Box<dyn Objective>,
            )
        });
        reg
    }

    pub fn register<F>(&mut self, name: &str, ctor: F)
    where
        F: Fn(&ObjectiveSpec) -> Result<Box<dyn Objective>, ObjectiveError> + Send + Sync + 'static,
    {
        self.entries.insert(name.to_string(), Box::new(ctor));
    }

    pub fn build(&self, spec: &ObjectiveSpec) -> Result<Box<dyn Objective>, ObjectiveError> {
        if spec.dim == 0 {
            return Err(ObjectiveError::InvalidSpec("dim must be at least 1".into()));
        }
        let ctor = self
            .entries
            .get(&spec.name)
            .ok_or_else(|| ObjectiveError::UnknownObjective(spec.name.clone()))?;
        ctor(spec)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

impl Default for ObjectiveRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl FromStr for NormKind {
    type Err = ObjectiveError;

    /// `euclid`, `linf`, or `scaled-euclid:w1,w2,…`
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "euclid" => Ok(NormKind::Euclid),
            "linf" => Ok(NormKind::Linf),
            _ => {
                let Some(rest) = s.strip_prefix("scaled-euclid:") else {
                    return Err(ObjectiveError::InvalidSpec(format!("unknown norm `{s}`")));
                };
                let weights = rest
                    .split(',')
                    .map(|t| t.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| ObjectiveError::InvalidSpec(format!("bad norm weight: {e}")))?;
                if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
                    return Err(ObjectiveError::InvalidSpec(
                        "norm weights must be positive".into(),
                    ));
                }
                Ok(NormKind::ScaledEuclid(weights))
            }
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormKind::Euclid => write!(f, "euclid"),
            NormKind::Linf => write!(f, "linf"),
            NormKind::ScaledEuclid(w) => {
                write!(f, "scaled-euclid:")?;
                for (i, x) in w.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x}")?;
                }
                Ok(())
            }
        }
    }
}

/// Indices whose `|w_i|` ties with `‖w‖∞` within [`TIE_TOL`].
pub(crate) fn linf_active_set(w: &Point) -> Vec<usize> {
    let max = w.inf_norm();
    let cutoff = max - TIE_TOL * max;
    w.as_slice()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.abs() >= cutoff)
        .map(|(i, _)| i)
        .collect()
}
