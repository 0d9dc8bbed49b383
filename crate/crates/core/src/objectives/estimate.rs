//! Sampling estimators for the constants the convergence results assume:
//! growth bounds `μ`, `δ` around a minimizer, a Lipschitz bound `σ` on `ζ`,
//! and the one-sided curvature constant `M` of the descent condition.
//!
//! All estimators are deterministic given their seed.

use crate::sampling::{seeded, uniform_in_ball, uniform_in_shell, uniform_offset};
use crate::vector::Point;

use super::{Objective, ObjectiveError};

pub const DEFAULT_SAMPLES: usize = 10_000;

/// Samples closer than `INNER_EXCLUSION · R` to the minimizer are rejected.
const INNER_EXCLUSION: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisEstimate {
    pub mu_hat: f64,
    pub delta_hat: f64,
    /// Largest sampled `‖ζ‖` on the same ball.
    pub sigma_hat: f64,
    pub m_hat: Option<f64>,
    pub radius: f64,
    pub sample_count: usize,
    pub seed: u64,
}

fn invalid(msg: impl Into<String>) -> ObjectiveError {
    ObjectiveError::InvalidSpec(msg.into())
}

/// `μ̂ = max ‖ζ_w‖/‖w − w*‖` and `δ̂ = min ⟨ζ_w, w − w*⟩/‖w − w*‖²` over
/// uniform samples of `B(w*, R)` (minus a tiny core around `w*`).
///
/// A nonpositive `δ̂` means the objective is outside the class the local
/// result covers on this ball and is returned as
/// [`ObjectiveError::HypothesisViolation`], carrying the estimate.
pub fn estimate_growth(
    oracle: &dyn Objective,
    w_star: &Point,
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<HypothesisEstimate, ObjectiveError> {
    if !(radius > 0.0) {
        return Err(invalid("growth radius must be positive"));
    }
    if samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    let mut rng = seeded(seed);
    let mut mu_hat = 0.0_f64;
    let mut delta_hat = f64::INFINITY;
    let mut sigma_hat = 0.0_f64;
    for _ in 0..samples {
        let w = uniform_in_shell(&mut rng, w_star, radius, INNER_EXCLUSION * radius);
        let zeta = oracle.clarke_selection(&w)?;
        let d = w.sub(w_star);
        let dn = d.norm();
        let zn = zeta.norm();
        mu_hat = mu_hat.max(zn / dn);
        delta_hat = delta_hat.min(zeta.dot(&d) / (dn * dn));
        sigma_hat = sigma_hat.max(zn);
    }
    // δ̂ and μ̂ come from different roundings of the same ratios
    if delta_hat > mu_hat && delta_hat - mu_hat <= 1e-12 * mu_hat {
        delta_hat = mu_hat;
    }
    let estimate = HypothesisEstimate {
        mu_hat,
        delta_hat,
        sigma_hat,
        m_hat: None,
        radius,
        sample_count: samples,
        seed,
    };
    if !(delta_hat > 0.0) {
        return Err(ObjectiveError::HypothesisViolation {
            reason: format!("estimated δ = {delta_hat} is not positive on B(w*, {radius})"),
            estimate: Box::new(estimate),
        });
    }
    Ok(estimate)
}

/// Largest sampled `‖ζ_w‖` over `B(center, radius)`.
pub fn estimate_lipschitz(
    oracle: &dyn Objective,
    center: &Point,
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<f64, ObjectiveError> {
    if !(radius > 0.0) {
        return Err(invalid("region radius must be positive"));
    }
    let mut rng = seeded(seed);
    let mut sigma = oracle.clarke_selection(center)?.norm();
    for _ in 0..samples {
        let w = uniform_in_ball(&mut rng, center, radius);
        sigma = sigma.max(oracle.clarke_selection(&w)?.norm());
    }
    Ok(sigma)
}

/// Where and how densely the descent constant is probed.
#[derive(Debug, Clone, PartialEq)]
pub struct DescentSampling {
    pub center: Point,
    pub region_radius: f64,
    /// `R₀`: pairs satisfy `‖w − w′‖ < R₀`.
    pub pair_radius: f64,
    pub pairs: usize,
    pub seed: u64,
    /// Lower bound returned when every sampled remainder is ≤ 0.
    pub floor: f64,
}

impl DescentSampling {
    pub fn new(center: Point, region_radius: f64, pair_radius: f64, seed: u64) -> Self {
        DescentSampling {
            center,
            region_radius,
            pair_radius,
            pairs: DEFAULT_SAMPLES,
            seed,
            floor: 1e-6,
        }
    }
}

/// `M̂ = max 2·(C(w′) − C(w) − ⟨ζ_w, w′ − w⟩)/‖w′ − w‖²` over sampled pairs,
/// floored at `sampling.floor`.
pub fn estimate_descent_constant(
    oracle: &dyn Objective,
    sampling: &DescentSampling,
) -> Result<f64, ObjectiveError> {
    if sampling.pairs == 0 {
        return Err(invalid("need at least one pair"));
    }
    if !(sampling.region_radius > 0.0 && sampling.pair_radius > 0.0) {
        return Err(invalid("sampling radii must be positive"));
    }
    let mut rng = seeded(sampling.seed);
    let mut m_hat = sampling.floor;
    let mut taken = 0;
    while taken < sampling.pairs {
        let w = uniform_in_ball(&mut rng, &sampling.center, sampling.region_radius);
        let h = uniform_offset(&mut rng, w.dim(), sampling.pair_radius);
        let hh = h.dot(&h);
        if hh == 0.0 {
            continue;
        }
        taken += 1;
        let w2 = w.add(&h);
        let zeta = oracle.clarke_selection(&w)?;
        let remainder = oracle.value(&w2) - oracle.value(&w) - zeta.dot(&h);
        m_hat = m_hat.max(2.0 * remainder / hh);
    }
    Ok(m_hat)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferReport {
    pub samples: usize,
    /// Largest `(‖ζ‖/‖w−w*‖ − μ̂)/μ̂` seen on fresh samples.
    pub mu_excess: f64,
    /// Largest `(δ̂ − ⟨ζ, w−w*⟩/‖w−w*‖²)/δ̂` seen on fresh samples.
    pub delta_deficit: f64,
    pub flagged: bool,
}

/// Re-samples the growth ball with a fresh seed and reports how far the
/// recorded `μ̂`, `δ̂` are exceeded. Flags relative excess above `1e-9`.
pub fn check_estimate_transfer(
    oracle: &dyn Objective,
    w_star: &Point,
    estimate: &HypothesisEstimate,
    seed: u64,
) -> Result<TransferReport, ObjectiveError> {
    let mut rng = seeded(seed);
    let radius = estimate.radius;
    let mut mu_excess = f64::NEG_INFINITY;
    let mut delta_deficit = f64::NEG_INFINITY;
    for _ in 0..estimate.sample_count {
        let w = uniform_in_shell(&mut rng, w_star, radius, INNER_EXCLUSION * radius);
        let zeta = oracle.clarke_selection(&w)?;
        let d = w.sub(w_star);
        let dn = d.norm();
        let mu = zeta.norm() / dn;
        let delta = zeta.dot(&d) / (dn * dn);
        mu_excess = mu_excess.max((mu - estimate.mu_hat) / estimate.mu_hat);
        delta_deficit = delta_deficit.max((estimate.delta_hat - delta) / estimate.delta_hat);
    }
    Ok(TransferReport {
        samples: estimate.sample_count,
        mu_excess,
        delta_deficit,
        flagged: mu_excess > 1e-9 || delta_deficit > 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{SqL2Scaled, SqLinf};

    struct Zero(usize);
    impl Objective for Zero {
        fn name(&self) -> &str {
            "zero"
        }
        fn dim(&self) -> usize {
            self.0
        }
        fn value(&self, _: &Point) -> f64 {
            0.0
        }
        fn clarke_selection(&self, w: &Point) -> Result<Point, ObjectiveError> {
            Ok(Point::zeros(w.dim()))
        }
    }

    /// `C(w) = w` on the half-line, an affine patch.
    struct Affine;
    impl Objective for Affine {
        fn name(&self) -> &str {
            "affine"
        }
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, w: &Point) -> f64 {
            w[0]
        }
        fn clarke_selection(&self, _: &Point) -> Result<Point, ObjectiveError> {
            Ok(Point::new(vec![1.0]).unwrap())
        }
    }

    #[test]
    fn quadratic_growth_is_exact() {
        let c = SqL2Scaled::new(5).unwrap();
        for radius in [0.1, 1.0, 7.0] {
            let e = estimate_growth(&c, &Point::zeros(5), radius, 2000, 3).unwrap();
            assert!((e.mu_hat - 0.4).abs() < 1e-12, "{}", e.mu_hat);
            assert!((e.delta_hat - 0.4).abs() < 1e-12, "{}", e.delta_hat);
            assert!(e.delta_hat <= e.mu_hat);
        }
    }

    #[test]
    fn linf_growth_within_analytic_bounds() {
        let c = SqLinf::new(2).unwrap();
        let e = estimate_growth(&c, &Point::zeros(2), 1.0, DEFAULT_SAMPLES, 11).unwrap();
        assert!(e.delta_hat >= 1.0 - 1e-12, "{}", e.delta_hat);
        assert!(e.mu_hat <= 2.0 + 1e-12, "{}", e.mu_hat);
        assert!(e.sigma_hat <= 2.0 + 1e-12);
    }

    #[test]
    fn flat_oracle_is_a_violation() {
        let w_star = Point::new(vec![1.0, 2.0]).unwrap();
        match estimate_growth(&Zero(2), &w_star, 1.0, 100, 0) {
            Err(ObjectiveError::HypothesisViolation { estimate, .. }) => {
                assert_eq!(estimate.mu_hat, 0.0);
                assert_eq!(estimate.delta_hat, 0.0);
            }
            other => panic!("expected violation, got {other:?}"),
        }
    }

    #[test]
    fn estimates_are_seed_deterministic() {
        let c = SqLinf::new(3).unwrap();
        let a = estimate_growth(&c, &Point::zeros(3), 1.0, 500, 42).unwrap();
        let b = estimate_growth(&c, &Point::zeros(3), 1.0, 500, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn descent_constant_of_quadratic() {
        for n in [1usize, 2, 5] {
            let c = SqL2Scaled::new(n).unwrap();
            let s = DescentSampling::new(Point::zeros(n), 3.0, 1.0, 9);
            let m = estimate_descent_constant(&c, &s).unwrap();
            // difference quotients on short pairs lose digits to cancellation
            assert!((m - 2.0 / n as f64).abs() < 1e-6, "n={n}: {m}");
        }
    }

    #[test]
    fn linf_remainder_quotient_is_unbounded_near_ties() {
        let c = SqLinf::new(2).unwrap();
        let a = 0.5;
        let w = Point::new(vec![a, a]).unwrap();
        let zeta = c.clarke_selection(&w).unwrap();
        for h in [1e-1, 1e-2, 1e-3] {
            let w2 = Point::new(vec![a + h, a - h]).unwrap();
            let d = w2.sub(&w);
            let q = 2.0 * (c.value(&w2) - c.value(&w) - zeta.dot(&d)) / d.dot(&d);
            assert!((q - (2.0 * a / h + 1.0)).abs() < 1e-6 * q, "h={h}: {q}");
        }
        let s = DescentSampling::new(Point::zeros(2), 1.0, 1.0, 9);
        assert!(estimate_descent_constant(&c, &s).unwrap() > 2.0);
    }

    #[test]
    fn affine_patch_hits_the_floor() {
        let center = Point::new(vec![1.5]).unwrap();
        let mut s = DescentSampling::new(center, 0.5, 0.5, 1);
        s.floor = 1e-3;
        assert_eq!(estimate_descent_constant(&Affine, &s).unwrap(), 1e-3);
    }

    #[test]
    fn transfer_check_on_exact_quadratic() {
        let c = SqL2Scaled::new(4).unwrap();
        let w = Point::zeros(4);
        let e = estimate_growth(&c, &w, 1.0, 1000, 1).unwrap();
        let t = check_estimate_transfer(&c, &w, &e, 2).unwrap();
        assert!(!t.flagged, "{t:?}");
    }

    #[test]
    fn lipschitz_estimate_on_quadratic() {
        let c = SqL2Scaled::new(2).unwrap();
        let s = estimate_lipschitz(&c, &Point::zeros(2), 2.0, 5000, 0).unwrap();
        // ‖ζ‖ = ‖w‖ on the ball of radius 2
        assert!(s <= 2.0 && s > 1.95, "{s}");
    }
}
