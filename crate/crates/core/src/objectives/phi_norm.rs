//! The family `C(w) = φ(‖w‖*)` for a radial profile `φ` with
//! `δ′ r ≤ φ′(r) ≤ μ′ r` and a norm `‖·‖*`.

use std::collections::BTreeMap;

use crate::minnorm::{min_norm_point, HullSpec, DEFAULT_TOL};
use crate::vector::Point;

use super::{linf_active_set, Objective, ObjectiveError};

/// Derivative information of a profile at a radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileDerivative {
    Smooth(f64),
    /// One-sided derivatives at a kink.
    Kink {
        left: f64,
        right: f64,
    },
    Undefined,
}

/// A locally Lipschitz radial profile `φ: ℝ⁺ → ℝ⁺`.
pub trait PhiProfile: Send + Sync {
    fn name(&self) -> &str;
    fn value(&self, r: f64) -> f64;
    fn derivative(&self, r: f64) -> ProfileDerivative;
    /// `(δ′, μ′)` with `δ′ r ≤ φ′(r) ≤ μ′ r` wherever `φ′` exists.
    fn growth_bounds(&self) -> (f64, f64);
}

/// `φ(r) = r²`
#[derive(Debug, Clone, Copy, Default)]
pub struct Square;

impl PhiProfile for Square {
    fn name(&self) -> &str {
        "square"
    }

    fn value(&self, r: f64) -> f64 {
        r * r
    }

    fn derivative(&self, r: f64) -> ProfileDerivative {
        ProfileDerivative::Smooth(2.0 * r)
    }

    fn growth_bounds(&self) -> (f64, f64) {
        (2.0, 2.0)
    }
}

/// `φ(r) = r²` on `[0, 1]` and `2r² − 1` beyond: continuous, with a kink at
/// `r = 1` where `φ′` jumps from 2 to 4.
#[derive(Debug, Clone, Copy, Default)]
pub struct KinkedSquare;

impl PhiProfile for KinkedSquare {
    fn name(&self) -> &str {
        "kinked_square"
    }

    fn value(&self, r: f64) -> f64 {
        if r <= 1.0 {
            r * r
        } else {
            2.0 * r * r - 1.0
        }
    }

    fn derivative(&self, r: f64) -> ProfileDerivative {
        if r < 1.0 {
            ProfileDerivative::Smooth(2.0 * r)
        } else if r > 1.0 {
            ProfileDerivative::Smooth(4.0 * r)
        } else {
            ProfileDerivative::Kink {
                left: 2.0,
                right: 4.0,
            }
        }
    }

    fn growth_bounds(&self) -> (f64, f64) {
        (2.0, 4.0)
    }
}

type ProfileCtor = fn() -> Box<dyn PhiProfile>;

pub struct ProfileRegistry {
    entries: BTreeMap<&'static str, ProfileCtor>,
}

impl ProfileRegistry {
    pub fn with_builtins() -> Self {
        let mut entries: BTreeMap<&'static str, ProfileCtor> = BTreeMap::new();
        entries.insert("square", || Box::new(Square));
        entries.insert("kinked_square", || Box::new(KinkedSquare));
        ProfileRegistry { entries }
    }

    pub fn register(&mut self, name: &'static str, ctor: ProfileCtor) {
        self.entries.insert(name, ctor);
    }

    pub fn build(&self, name: &str) -> Result<Box<dyn PhiProfile>, ObjectiveError> {
        self.entries
            .get(name)
            .map(|ctor| ctor())
            .ok_or_else(|| ObjectiveError::UnknownProfile(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NormKind {
    Euclid,
    Linf,
    /// `‖w‖ = (Σ sᵢ wᵢ²)^{1/2}` with positive weights `sᵢ`.
    ScaledEuclid(Vec<f64>),
}

impl NormKind {
    pub fn eval(&self, w: &Point) -> f64 {
        match self {
            NormKind::Euclid => w.norm(),
            NormKind::Linf => w.inf_norm(),
            NormKind::ScaledEuclid(s) => w
                .as_slice()
                .iter()
                .zip(s)
                .map(|(x, si)| si * x * x)
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Limiting gradients of the norm at `w ≠ 0` (one element where the
    /// norm is differentiable).
    fn limiting_gradients(&self, w: &Point, value: f64) -> Vec<Point> {
        match self {
            NormKind::Euclid => vec![w.scale(1.0 / value)],
            NormKind::ScaledEuclid(s) => vec![Point::from_raw(
                w.as_slice()
                    .iter()
                    .zip(s)
                    .map(|(x, si)| si * x / value)
                    .collect(),
            )],
            NormKind::Linf => linf_active_set(w)
                .into_iter()
                .map(|i| {
                    let mut g = vec![0.0; w.dim()];
                    g[i] = w[i].signum();
                    Point::from_raw(g)
                })
                .collect(),
        }
    }
}

pub struct PhiNormObjective {
    profile: Box<dyn PhiProfile>,
    norm: NormKind,
    dim: usize,
    name: String,
}

/// Radii at which the growth condition is spot-checked on construction.
const PROFILE_CHECK_RADII: usize = 2000;
const PROFILE_CHECK_MAX: f64 = 20.0;

impl PhiNormObjective {
    pub fn new(
        profile: Box<dyn PhiProfile>,
        norm: NormKind,
        dim: usize,
    ) -> Result<Self, ObjectiveError> {
        if dim == 0 {
            return Err(ObjectiveError::InvalidSpec("dim must be at least 1".into()));
        }
        if let NormKind::ScaledEuclid(s) = &norm {
            if s.len() != dim {
                return Err(ObjectiveError::InvalidSpec(format!(
                    "scaled-euclid has {} weights for dim {dim}",
                    s.len()
                )));
            }
        }
        validate_profile(profile.as_ref())?;
        let name = format!("phi_norm({}, {})", profile.name(), norm);
        Ok(PhiNormObjective {
            profile,
            norm,
            dim,
            name,
        })
    }

    pub fn norm(&self) -> &NormKind {
        &self.norm
    }

    pub fn profile(&self) -> &dyn PhiProfile {
        self.profile.as_ref()
    }
}

/// Samples `δ′ r ≤ φ′(r) ≤ μ′ r` on a grid of radii in `(0, 20]`.
fn validate_profile(profile: &dyn PhiProfile) -> Result<(), ObjectiveError> {
    let (lo, hi) = profile.growth_bounds();
    if !(lo > 0.0 && lo <= hi) {
        return Err(ObjectiveError::InvalidSpec(format!(
            "profile `{}` needs 0 < δ′ ≤ μ′, got ({lo}, {hi})",
            profile.name()
        )));
    }
    for k in 1..=PROFILE_CHECK_RADII {
        let r = PROFILE_CHECK_MAX * k as f64 / PROFILE_CHECK_RADII as f64;
        if let ProfileDerivative::Smooth(d) = profile.derivative(r) {
            let slack = 1e-12 * r.max(1.0);
            if d < lo * r - slack || d > hi * r + slack {
                return Err(ObjectiveError::InvalidSpec(format!(
                    "profile `{}` violates {lo}·r ≤ φ′(r) ≤ {hi}·r at r = {r} (φ′ = {d})",
                    profile.name()
                )));
            }
        }
    }
    Ok(())
}

impl Objective for PhiNormObjective {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, w: &Point) -> f64 {
        self.profile.value(self.norm.eval(w))
    }

    fn clarke_selection(&self, w: &Point) -> Result<Point, ObjectiveError> {
        crate::vector::check_dims(self.dim, w.dim())?;
        let r = self.norm.eval(w);
        if r == 0.0 {
            return Ok(Point::zeros(self.dim));
        }
        let slopes: Vec<f64> = match self.profile.derivative(r) {
            ProfileDerivative::Smooth(d) => vec![d],
            ProfileDerivative::Kink { left, right } => vec![left, right],
            ProfileDerivative::Undefined => {
                return Err(ObjectiveError::UndefinedDerivative { radius: r })
            }
        };
        let grads = self.norm.limiting_gradients(w, r);
        let vertices: Vec<Point> = slopes
            .iter()
            .flat_map(|&d| grads.iter().map(move |g| g.scale(d)))
            .collect();
        if vertices.len() == 1 {
            return Ok(vertices.into_iter().next().expect("one vertex"));
        }
        let hull = HullSpec::new(vertices)?;
        Ok(min_norm_point(&hull, DEFAULT_TOL)?.point)
    }

    fn is_smooth_at(&self, w: &Point) -> bool {
        let r = self.norm.eval(w);
        if r == 0.0 {
            return true;
        }
        let profile_smooth = matches!(self.profile.derivative(r), ProfileDerivative::Smooth(_));
        let norm_smooth = match self.norm {
            NormKind::Linf => linf_active_set(w).len() == 1,
            _ => true,
        };
        profile_smooth && norm_smooth
    }

    fn minimizer(&self) -> Option<Point> {
        Some(Point::zeros(self.dim))
    }
}
