//! Generalized Adam and bias-corrected Adam.
//!
//! A step taken from `x_n` with `ζ = ζ_{w_n}` produces `x_{n+1}`. Adam's step
//! is split as `Θ(n, x) = Γ(x) + Ω(n, x)`: `Γ` is the autonomous map with the
//! fixed `α`, `Ω` the vanishing bias-correction displacement of `w`. The
//! direction `m′/√(v′+ε)` is evaluated once and shared by both parts, so the
//! split holds bit for bit.

use thiserror::Error;

use crate::vector::{
    check_dims, cw_div_sqrt_shift, cw_square, AdamState, NonnegPoint, Point, VectorError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizerError {
    #[error("invalid Adam parameters: {0}")]
    InvalidParams(String),
    #[error("fixed step size α required")]
    MissingAlpha,
    #[error("empty ζ history")]
    EmptyHistory,
    #[error(transparent)]
    Vector(#[from] VectorError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub eps: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Fixed step size for Adam; `None` for Generalized Adam driven by a
    /// per-step `αₙ`.
    pub alpha: Option<f64>,
}

impl AdamParams {
    pub fn new(
        eps: f64,
        beta1: f64,
        beta2: f64,
        alpha: Option<f64>,
    ) -> Result<Self, OptimizerError> {
        let p = AdamParams {
            eps,
            beta1,
            beta2,
            alpha,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), OptimizerError> {
        let bad = |m: String| Err(OptimizerError::InvalidParams(m));
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad(format!("eps = {} must be positive", self.eps));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return bad(format!("{name} = {b} must lie in [0, 1)"));
            }
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a.is_finite()) {
                return bad(format!("alpha = {a} must be positive"));
            }
        }
        Ok(())
    }

    fn require_alpha(&self) -> Result<f64, OptimizerError> {
        self.alpha.ok_or(OptimizerError::MissingAlpha)
    }
}

/// Moments after one step plus the shared direction `m′/√(v′+ε)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentUpdate {
    pub m: Point,
    pub v: NonnegPoint,
    pub direction: Point,
}

pub fn update_moments(
    x: &AdamState,
    zeta: &Point,
    p: &AdamParams,
) -> Result<MomentUpdate, OptimizerError> {
    check_dims(x.dim(), zeta.dim())?;
    let (b1, b2) = (p.beta1, p.beta2);
    let m = x.m.scale(b1).axpy(1.0 - b1, zeta);
    let sq = cw_square(zeta);
    let v = NonnegPoint::from_raw(
        x.v.as_slice()
            .iter()
            .zip(sq.as_slice())
            .map(|(v, z)| b2 * v + (1.0 - b2) * z)
            .collect(),
    );
    let direction = cw_div_sqrt_shift(&m, &v, p.eps);
    Ok(MomentUpdate { m, v, direction })
}

/// One Generalized Adam step with step size `alpha_n`.
pub fn generalized_step(
    x: &AdamState,
    zeta: &Point,
    alpha_n: f64,
    p: &AdamParams,
) -> Result<AdamState, OptimizerError> {
    let u = update_moments(x, zeta, p)?;
    Ok(AdamState {
        w: x.w.axpy(-alpha_n, &u.direction),
        m: u.m,
        v: u.v,
    })
}

/// `√(1−β₂ⁿ⁺¹)/(1−β₁ⁿ⁺¹)`
pub fn bias_factor(n: u64, beta1: f64, beta2: f64) -> f64 {
    let k = (n as f64) + 1.0;
    (1.0 - beta2.powf(k)).sqrt() / (1.0 - beta1.powf(k))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub state_after: AdamState,
    pub zeta: Point,
    /// `α·√(1−β₂ⁿ⁺¹)/(1−β₁ⁿ⁺¹)`
    pub alpha_used: f64,
    pub gamma_part: AdamState,
    pub omega_part: Point,
}

/// Adam step `n`: `x_{n+1} = Γ(x_n) + Ω(n, x_n)`.
pub fn adam_step(
    x: &AdamState,
    zeta: &Point,
    n: u64,
    p: &AdamParams,
) -> Result<StepReport, OptimizerError> {
    let alpha = p.require_alpha()?;
    let u = update_moments(x, zeta, p)?;
    let bias = bias_factor(n, p.beta1, p.beta2);
    let gamma_w = x.w.axpy(-alpha, &u.direction);
    let omega = u.direction.scale(-alpha * (bias - 1.0));
    let gamma_part = AdamState {
        m: u.m,
        v: u.v,
        w: gamma_w,
    };
    let state_after = AdamState {
        m: gamma_part.m.clone(),
        v: gamma_part.v.clone(),
        w: gamma_part.w.add(&omega),
    };
    Ok(StepReport {
        state_after,
        zeta: zeta.clone(),
        alpha_used: alpha * bias,
        gamma_part,
        omega_part: omega,
    })
}

/// `Γ(x) = (β₁m+(1−β₁)ζ, β₂v+(1−β₂)ζ², w − α·m′/√(v′+ε))`
pub fn gamma_map(x: &AdamState, zeta: &Point, p: &AdamParams) -> Result<AdamState, OptimizerError> {
    let alpha = p.require_alpha()?;
    generalized_step(x, zeta, alpha, p)
}

/// The `w`-slot of `Ω(n, x)`: `−α(√(1−β₂ⁿ⁺¹)/(1−β₁ⁿ⁺¹) − 1)·m′/√(v′+ε)`.
pub fn omega_map(
    n: u64,
    x: &AdamState,
    zeta: &Point,
    p: &AdamParams,
) -> Result<Point, OptimizerError> {
    let alpha = p.require_alpha()?;
    let u = update_moments(x, zeta, p)?;
    let bias = bias_factor(n, p.beta1, p.beta2);
    Ok(u.direction.scale(-alpha * (bias - 1.0)))
}

/// `m_{n+1} = β₁ⁿ⁺¹m₀ + (1−β₁)Σ β₁ⁿ⁻ⁱζᵢ` and the analogous sum for `v`,
/// evaluated with explicit powers rather than by recursion.
pub fn moments_closed_form(
    zeta_history: &[Point],
    m0: &Point,
    v0: &NonnegPoint,
    p: &AdamParams,
) -> Result<(Point, NonnegPoint), OptimizerError> {
    let Some(last) = zeta_history.len().checked_sub(1) else {
        return Err(OptimizerError::EmptyHistory);
    };
    let dim = m0.dim();
    check_dims(dim, v0.dim())?;
    for z in zeta_history {
        check_dims(dim, z.dim())?;
    }
    let n = last as i32;
    let (b1, b2) = (p.beta1, p.beta2);
    let mut m = m0.scale(b1.powi(n + 1));
    let mut v = v0.as_point().scale(b2.powi(n + 1));
    for (i, z) in zeta_history.iter().enumerate() {
        let k = n - i as i32;
        m = m.axpy((1.0 - b1) * b1.powi(k), z);
        v = v.axpy((1.0 - b2) * b2.powi(k), cw_square(z).as_point());
    }
    Ok((m, NonnegPoint::clamp_from(&v)))
}

/// Outcome of asking a [`StepSizeRule`] for `αₙ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    Take(f64),
    /// The rule has no step to offer (zero direction): the run is at a
    /// critical point.
    Stop,
}

/// Per-step `αₙ` for Generalized Adam.
pub trait StepSizeRule: Send + Sync {
    fn name(&self) -> &str;

    /// `αₙ` given `ζ_{w_n}` and the freshly updated moments.
    fn step_size(&self, n: u64, zeta: &Point, update: &MomentUpdate) -> StepSize;
}

/// Adam's `αₙ = α√(1−β₂ⁿ⁺¹)/(1−β₁ⁿ⁺¹)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasCorrected {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl StepSizeRule for BiasCorrected {
    fn name(&self) -> &str {
        "bias_corrected"
    }

    fn step_size(&self, n: u64, _zeta: &Point, _update: &MomentUpdate) -> StepSize {
        StepSize::Take(self.alpha * bias_factor(n, self.beta1, self.beta2))
    }
}

/// `αₙ = ⟨ζ, d⟩ / (M‖d‖²)` with `d = m′/√(v′+ε)`, the step that minimizes
/// the quadratic upper model along `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentAdaptive {
    pub m_const: f64,
}

impl StepSizeRule for DescentAdaptive {
    fn name(&self) -> &str {
        "descent_adaptive"
    }

    fn step_size(&self, _n: u64, zeta: &Point, update: &MomentUpdate) -> StepSize {
        let dd = update.direction.dot(&update.direction);
        if dd == 0.0 {
            return StepSize::Stop;
        }
        StepSize::Take(zeta.dot(&update.direction) / (self.m_const * dd))
    }
}
