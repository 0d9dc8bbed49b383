//! Parameter selection and certified constants for both phases.
//!
//! [`plan_local`] turns growth bounds `δ ≤ μ` into Adam parameters together
//! with the contraction constants that certify exponential convergence near
//! the minimizer. [`plan_basin`] picks Generalized Adam parameters for the
//! approach phase and computes the guaranteed per-step decrease `s`.

mod basin;
mod local;

use std::fmt;

use thiserror::Error;

use crate::vector::{cw_div_sqrt_shift, NonnegPoint, Point};

pub use basin::{
    lemma_inner_product_bound, lemma_theta_bound, plan_basin, plan_basin_unchecked, BasinInputs,
    BasinPlan,
};
pub use local::{
    compute_d, d_under_coupling, plan_local, AlphaChoice, L0Term, LocalInputs, LocalPlan, N0_CAP,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("infeasible: {constraint} violated ({detail})")]
    Infeasible { constraint: String, detail: String },
    #[error("bad planner input: {0}")]
    BadInput(String),
}

pub(crate) fn infeasible(constraint: &str, detail: impl Into<String>) -> PlanError {
    PlanError::Infeasible {
        constraint: constraint.to_string(),
        detail: detail.into(),
    }
}

/// Outcome of the adaptive basin step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AdaptiveAlpha {
    /// `⟨ζ, d⟩/(M‖d‖²)`; may be ≤ 0 when the hypotheses fail.
    Value(f64),
    /// `d = 0`: nothing to step along.
    ZeroDirection,
}

/// `αₙ = ⟨ζ, d⟩/(M‖d‖²)` with `d = m_next/√(v_next + ε)`.
pub fn adaptive_alpha(
    zeta: &Point,
    m_next: &Point,
    v_next: &NonnegPoint,
    eps: f64,
    m_const: f64,
) -> Result<AdaptiveAlpha, PlanError> {
    if !(m_const > 0.0) {
        return Err(PlanError::BadInput(format!(
            "M = {m_const} must be positive"
        )));
    }
    if !(eps > 0.0) {
        return Err(PlanError::BadInput(format!("eps = {eps} must be positive")));
    }
    let d = cw_div_sqrt_shift(m_next, v_next, eps);
    let dd = d.dot(&d);
    if dd == 0.0 {
        return Ok(AdaptiveAlpha::ZeroDirection);
    }
    Ok(AdaptiveAlpha::Value(zeta.dot(&d) / (m_const * dd)))
}

/// One `key = value` line per field, numbers at round-trip precision.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KeyValues(pub Vec<(String, String)>);

impl KeyValues {
    pub fn push(&mut self, key: &str, value: impl fmt::Display) {
        self.0.push((key.to_string(), value.to_string()));
    }

    /// Shortest round-trip form, with an exponent for very small or large values.
    pub fn num(&mut self, key: &str, value: f64) {
        self.push(key, format!("{value:?}"));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

impl fmt::Display for KeyValues {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.0 {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn value(a: AdaptiveAlpha) -> f64 {
        match a {
            AdaptiveAlpha::Value(v) => v,
            AdaptiveAlpha::ZeroDirection => panic!("zero direction"),
        }
    }

    #[test]
    fn adaptive_alpha_one_dimensional() {
        let z = Point::new(vec![1.0]).unwrap();
        let m = Point::new(vec![0.9]).unwrap();
        let v = NonnegPoint::new(vec![0.5]).unwrap();
        let a = value(adaptive_alpha(&z, &m, &v, 1.0, 2.0).unwrap());
        assert!((a - 1.5_f64.sqrt() / 1.8).abs() < 1e-15);
        assert!((a - 0.680414).abs() < 1e-6);
    }

    #[test]
    fn adaptive_alpha_orthogonal_and_zero() {
        let z = Point::new(vec![1.0, 0.0]).unwrap();
        let m = Point::new(vec![0.0, 3.0]).unwrap();
        let v = NonnegPoint::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(value(adaptive_alpha(&z, &m, &v, 1.0, 1.0).unwrap()), 0.0);
        let m0 = Point::zeros(2);
        assert_eq!(
            adaptive_alpha(&z, &m0, &v, 1.0, 1.0).unwrap(),
            AdaptiveAlpha::ZeroDirection
        );
        assert!(adaptive_alpha(&z, &m, &v, 1.0, 0.0).is_err());
    }

    #[test]
    fn adaptive_alpha_first_step_closed_form() {
        let (b1, b2, eps, mc) = (0.2, 0.6, 0.5, 3.0);
        for g in [0.3, -1.7, 4.0] {
            let z = Point::new(vec![g]).unwrap();
            let m = Point::new(vec![(1.0 - b1) * g]).unwrap();
            let v = NonnegPoint::new(vec![(1.0 - b2) * g * g]).unwrap();
            let a = value(adaptive_alpha(&z, &m, &v, eps, mc).unwrap());
            let want = ((1.0 - b2) * g * g + eps).sqrt() / (mc * (1.0 - b1));
            assert!((a - want).abs() < 1e-14 * want, "{a} vs {want}");
        }
    }
}
