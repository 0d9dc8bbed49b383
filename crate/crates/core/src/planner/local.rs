use std::fmt;
use std::str::FromStr;

use super::{infeasible, KeyValues, PlanError};

/// Upper limit on the search for the transient index `n₀`.
pub const N0_CAP: u64 = 1_000_000;

/// Where `α` sits in the admissible interval `(α_lo, α_hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaChoice {
    /// Just above the open lower end (1% of the way up).
    LowerPlus,
    Mid,
    Upper,
    /// `α_lo + t·(α_hi − α_lo)` for `t ∈ (0, 1]`.
    Fraction(f64),
}

impl AlphaChoice {
    pub fn fraction(self) -> f64 {
        match self {
            AlphaChoice::LowerPlus => 0.01,
            AlphaChoice::Mid => 0.5,
            AlphaChoice::Upper => 1.0,
            AlphaChoice::Fraction(t) => t,
        }
    }
}

impl FromStr for AlphaChoice {
    type Err = PlanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "lower+" | "lower" => Ok(AlphaChoice::LowerPlus),
            "mid" => Ok(AlphaChoice::Mid),
            "upper" => Ok(AlphaChoice::Upper),
            other => other
                .parse::<f64>()
                .map(AlphaChoice::Fraction)
                .map_err(|_| PlanError::BadInput(format!("unknown alpha choice `{other}`"))),
        }
    }
}

impl fmt::Display for AlphaChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaChoice::LowerPlus => write!(f, "lower+"),
            AlphaChoice::Mid => write!(f, "mid"),
            AlphaChoice::Upper => write!(f, "upper"),
            AlphaChoice::Fraction(t) => write!(f, "{t}"),
        }
    }
}

/// Which of the three terms defines `L₀`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum L0Term {
    /// `β₁ + μ(1−β₁)/A`
    Momentum,
    /// `β₂ + μ²(1−β₂)/A²`
    Variance,
    /// `Aαβ₁/√ε + D`
    Weights,
}

impl fmt::Display for L0Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            L0Term::Momentum => "momentum",
            L0Term::Variance => "variance",
            L0Term::Weights => "weights",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalInputs {
    pub delta: f64,
    pub mu: f64,
    /// Weight of `w` in the triple norm; defaults to 1 for `μ < 1`, else
    /// slightly above `μ`.
    pub a: Option<f64>,
    pub eps: f64,
    /// Defaults to the largest value ≤ 0.1 keeping the variance term of `L₀`
    /// below the weights term.
    pub beta2: Option<f64>,
    pub alpha: AlphaChoice,
    /// Radius `R` of the ball on which the growth bounds hold.
    pub radius: f64,
}

impl LocalInputs {
    pub fn new(delta: f64, mu: f64, eps: f64) -> Self {
        LocalInputs {
            delta,
            mu,
            a: None,
            eps,
            beta2: None,
            alpha: AlphaChoice::Upper,
            radius: 1.0,
        }
    }

    pub fn with_a(mut self, a: f64) -> Self {
        self.a = Some(a);
        self
    }

    pub fn with_beta2(mut self, beta2: f64) -> Self {
        self.beta2 = Some(beta2);
        self
    }

    pub fn with_alpha(mut self, alpha: AlphaChoice) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }
}

/// Certified local-phase parameters and constants.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalPlan {
    pub delta: f64,
    pub mu: f64,
    pub a: f64,
    pub eps: f64,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub d: f64,
    pub l0_terms: [f64; 3],
    pub l0_term: L0Term,
    pub l0: f64,
    pub l: f64,
    pub k1: f64,
    pub k2: f64,
    pub k0: f64,
    pub beta: f64,
    pub n0: u64,
    pub k: f64,
    /// Radius before clamping by `R` and `1/A`.
    pub r_raw: f64,
    pub radius: f64,
    pub r: f64,
    pub eta: f64,
}

impl LocalPlan {
    /// Decay constant of `Ω` measured in the triple norm.
    pub fn omega_const(&self) -> f64 {
        self.a * self.k0
    }

    /// `L₀ + A·K₀·βⁿ`, the per-step factor of the triple-norm error at step n.
    pub fn step_factor(&self, n: u64) -> f64 {
        self.l0 + self.omega_const() * self.beta.powf(n as f64)
    }

    /// `K·Lⁿ⁻ⁿ⁰`, the envelope multiplier for `n ≥ n₀`.
    pub fn envelope(&self, n: u64) -> f64 {
        self.k * self.l.powf(n as f64 - self.n0 as f64)
    }

    pub fn to_key_values(&self) -> KeyValues {
        let mut kv = KeyValues::default();
        kv.num("delta", self.delta);
        kv.num("mu", self.mu);
        kv.num("A", self.a);
        kv.num("eps", self.eps);
        kv.num("alpha_lo", self.alpha_lo);
        kv.num("alpha_hi", self.alpha_hi);
        kv.num("alpha", self.alpha);
        kv.num("beta1", self.beta1);
        kv.num("beta2", self.beta2);
        kv.num("D", self.d);
        kv.num("L0_momentum", self.l0_terms[0]);
        kv.num("L0_variance", self.l0_terms[1]);
        kv.num("L0_weights", self.l0_terms[2]);
        kv.push("L0_term", self.l0_term);
        kv.num("L0", self.l0);
        kv.num("L", self.l);
        kv.num("K1", self.k1);
        kv.num("K2", self.k2);
        kv.num("K0", self.k0);
        kv.num("beta", self.beta);
        kv.push("n0", self.n0);
        kv.num("K", self.k);
        kv.num("r_raw", self.r_raw);
        kv.num("R", self.radius);
        kv.num("r", self.r);
        kv.num("eta", self.eta);
        kv
    }
}

/// `D = √(1 − 9αδ(1−β₁)/(8√ε) + α²(1−β₁)²μ²/ε)`
pub fn compute_d(delta: f64, mu: f64, eps: f64, alpha: f64, beta1: f64) -> Result<f64, PlanError> {
    let se = eps.sqrt();
    let c = alpha * (1.0 - beta1);
    let radicand = 1.0 - 9.0 * c * delta / (8.0 * se) + c * c * mu * mu / eps;
    if !(radicand > 0.0) {
        return Err(infeasible(
            "D radicand > 0",
            format!("radicand = {radicand}"),
        ));
    }
    Ok(radicand.sqrt())
}

/// `D` when `1 − β₁ = δ√ε/(2αμ²)`: `√(1 − (5/16)(δ/μ)²)`.
pub fn d_under_coupling(delta: f64, mu: f64) -> f64 {
    let q = delta / mu;
    (1.0 - 5.0 / 16.0 * q * q).sqrt()
}

fn default_a(mu: f64) -> f64 {
    if mu < 1.0 {
        1.0
    } else {
        mu * (1.0 + 1e-3)
    }
}

pub fn plan_local(inputs: &LocalInputs) -> Result<LocalPlan, PlanError> {
    let LocalInputs {
        delta,
        mu,
        eps,
        radius,
        alpha: choice,
        ..
    } = *inputs;
    if !(delta > 0.0 && delta <= mu && mu.is_finite()) {
        return Err(infeasible(
            "0 < delta <= mu",
            format!("delta = {delta}, mu = {mu}"),
        ));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(infeasible("eps > 0", format!("eps = {eps}")));
    }
    if !(radius > 0.0) {
        return Err(infeasible("R > 0", format!("R = {radius}")));
    }
    let a = inputs.a.unwrap_or_else(|| default_a(mu));
    if !(a >= 1.0 && a > mu && a.is_finite()) {
        return Err(infeasible(
            "A >= 1 and A > mu",
            format!("A = {a}, mu = {mu}"),
        ));
    }
    let t = choice.fraction();
    if !(t > 0.0 && t <= 1.0) {
        return Err(infeasible(
            "alpha in (alpha_lo, alpha_hi]",
            format!("fraction {t} outside (0, 1]"),
        ));
    }

    let se = eps.sqrt();
    let alpha_lo = delta * se / (2.0 * mu * mu);
    let alpha_hi = alpha_lo * (1.0 + delta / (4.0 * a));
    let alpha = if t == 1.0 {
        alpha_hi
    } else {
        alpha_lo + t * (alpha_hi - alpha_lo)
    };
    if !(alpha > alpha_lo) {
        return Err(infeasible(
            "alpha in (alpha_lo, alpha_hi]",
            format!("alpha = {alpha} collapses onto alpha_lo"),
        ));
    }
    let beta1 = 1.0 - alpha_lo / alpha;
    let d = compute_d(delta, mu, eps, alpha, beta1)?;

    let ma = mu / a;
    let momentum = beta1 + ma * (1.0 - beta1);
    let weights = a * alpha * beta1 / se + d;
    let beta2 = match inputs.beta2 {
        Some(b) => b,
        None => {
            let q = ma * ma;
            let cap = (weights.max(momentum) - q) / (1.0 - q);
            if cap > 0.0 {
                cap.min(0.1)
            } else {
                0.1
            }
        }
    };
    if !(beta2 > 0.0 && beta2 < 1.0) {
        return Err(infeasible("0 < beta2 < 1", format!("beta2 = {beta2}")));
    }
    let variance = beta2 + ma * ma * (1.0 - beta2);
    let terms = [momentum, variance, weights];
    let (l0_term, l0) = [L0Term::Momentum, L0Term::Variance, L0Term::Weights]
        .into_iter()
        .zip(terms)
        .fold((L0Term::Momentum, f64::NEG_INFINITY), |acc, (k, v)| {
            if v > acc.1 {
                (k, v)
            } else {
                acc
            }
        });
    if !(l0 < 1.0) {
        return Err(infeasible("L0 < 1", format!("{l0_term} term = {l0}")));
    }
    let l = (l0 + 1.0) / 2.0;

    let k1 = alpha / se * (beta1 + mu * (1.0 - beta1));
    let k2 = 1.0 / ((1.0 - beta1) * ((1.0 - beta1) + (1.0 - beta2).sqrt()));
    let k0 = 2.0 * k1 * k2;
    let beta = beta1.max(beta2);
    let omega = a * k0;

    let mut n0 = None;
    let mut power = 1.0_f64;
    for n in 0..=N0_CAP {
        if l0 + omega * power < l {
            n0 = Some(n);
            break;
        }
        power *= beta;
    }
    let Some(n0) = n0 else {
        return Err(infeasible(
            "n0 <= 1e6",
            "no transient index found below the search cap",
        ));
    };
    let mut k = 1.0_f64;
    let mut prod = 1.0_f64;
    let mut power = 1.0_f64;
    for _ in 0..n0 {
        prod *= l0 + omega * power;
        k = k.max(prod);
        power *= beta;
    }

    let r_raw = eps / (beta2 + (1.0 - beta2) * mu * mu)
        * ((1.0 + delta / (2.0 * mu + delta)).powi(2) - 1.0);
    let r = r_raw.min(radius).min(1.0 / a);
    let eta = delta * r.min(1.0 / mu) / (a * k);

    Ok(LocalPlan {
        delta,
        mu,
        a,
        eps,
        alpha_lo,
        alpha_hi,
        alpha,
        beta1,
        beta2,
        d,
        l0_terms: terms,
        l0_term,
        l0,
        l,
        k1,
        k2,
        k0,
        beta,
        n0,
        k,
        r_raw,
        radius,
        r,
        eta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_inputs() -> LocalInputs {
        LocalInputs::new(0.4, 0.4, 1.0).with_a(1.0).with_beta2(0.1)
    }

    #[test]
    fn d_reproduces_sqrt11_over_4() {
        let (delta, mu, eps, alpha): (f64, f64, f64, f64) = (0.4, 0.4, 1.0, 1.375);
        let beta1 = 1.0 - delta * eps.sqrt() / (2.0 * alpha * mu * mu);
        let d = compute_d(delta, mu, eps, alpha, beta1).unwrap();
        assert!((d - 11.0_f64.sqrt() / 4.0).abs() < 1e-12);
        assert!((d - 0.829156).abs() < 1e-6);
    }

    #[test]
    fn d_degenerate_and_half_delta() {
        assert_eq!(compute_d(0.3, 0.5, 2.0, 1.7, 1.0).unwrap(), 1.0);
        let (delta, mu, eps, alpha): (f64, f64, f64, f64) = (0.25, 0.5, 1.0, 0.8);
        let beta1 = 1.0 - delta * eps.sqrt() / (2.0 * alpha * mu * mu);
        let d = compute_d(delta, mu, eps, alpha, beta1).unwrap();
        assert!((d - (1.0 - 5.0 / 64.0_f64).sqrt()).abs() < 1e-12);
        assert!((d - 0.960143).abs() < 1e-6);
        assert!(d < 0.96875);
    }

    #[test]
    fn d_rejects_nonpositive_radicand() {
        // 1 − 9/8 + 1/100 < 0
        let e = compute_d(1.0, 0.1, 1.0, 1.0, 0.0).unwrap_err();
        assert!(matches!(e, PlanError::Infeasible { .. }));
    }

    #[test]
    fn worked_example_constants() {
        let p = plan_local(&paper_inputs()).unwrap();
        assert!((p.alpha_lo - 1.25).abs() < 1e-15);
        assert!((p.alpha - 1.375).abs() < 1e-15);
        assert!((p.beta1 - 1.0 / 11.0).abs() < 1e-15);
        assert!((p.d - 11.0_f64.sqrt() / 4.0).abs() < 1e-12);
        let l0 = (1.0 + 2.0 * 11.0_f64.sqrt()) / 8.0;
        let l = (9.0 + 2.0 * 11.0_f64.sqrt()) / 16.0;
        assert!((p.l0 - l0).abs() < 1e-12);
        assert!((p.l - l).abs() < 1e-12);
        assert_eq!(p.l0_term, L0Term::Weights);
        assert!(p.beta1 <= 0.2);
        assert!(p.k < 3.0);
        assert_eq!(p.beta, 0.1);
        assert_eq!(p.n0, 2);
        assert!((p.k1 - 0.625).abs() < 1e-15);
        assert!((p.r_raw - (7.0 / 9.0) / 0.244).abs() < 1e-12);
        assert_eq!(p.r, 1.0);
        assert!((p.eta - 0.4 / p.k).abs() < 1e-15);
    }

    #[test]
    fn transient_index_is_minimal() {
        let p = plan_local(&paper_inputs()).unwrap();
        assert!(p.step_factor(p.n0) < p.l);
        if p.n0 > 0 {
            assert!(p.step_factor(p.n0 - 1) >= p.l);
        }
        let prod: f64 = (0..p.n0).map(|i| p.step_factor(i)).product();
        assert!((p.k - prod.max(1.0)).abs() < 1e-15);
    }

    #[test]
    fn delta_above_mu_names_the_constraint() {
        let e = plan_local(&LocalInputs::new(0.5, 0.4, 1.0)).unwrap_err();
        match e {
            PlanError::Infeasible { constraint, .. } => assert_eq!(constraint, "0 < delta <= mu"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn large_beta2_is_fine_but_bad_a_is_not() {
        assert!(plan_local(&paper_inputs().with_beta2(0.95)).is_ok());
        assert!(plan_local(&paper_inputs().with_a(0.3)).is_err());
        assert!(plan_local(&LocalInputs::new(2.0, 2.0, 1.0).with_a(1.5)).is_err());
    }

    #[test]
    fn defaults_for_large_mu() {
        let p = plan_local(&LocalInputs::new(0.8, 2.5, 1.0)).unwrap();
        assert!((p.a - 2.5 * 1.001).abs() < 1e-15);
        assert!(p.l0 < 1.0);
        assert!(p.l0_terms[1] <= p.l0_terms[2].max(p.l0_terms[0]) + 1e-15);
        assert!(p.r <= 1.0 / p.a);
    }

    #[test]
    fn alpha_choices_stay_in_interval() {
        for c in [
            AlphaChoice::LowerPlus,
            AlphaChoice::Mid,
            AlphaChoice::Upper,
            AlphaChoice::Fraction(0.3),
        ] {
            let p = plan_local(&paper_inputs().with_alpha(c)).unwrap();
            assert!(p.alpha > p.alpha_lo && p.alpha <= p.alpha_hi, "{c}");
        }
        assert!(plan_local(&paper_inputs().with_alpha(AlphaChoice::Fraction(0.0))).is_err());
        assert!(plan_local(&paper_inputs().with_alpha(AlphaChoice::Fraction(1.5))).is_err());
    }

    #[test]
    fn alpha_choice_parses() {
        for s in ["lower+", "mid", "upper", "0.25"] {
            let c: AlphaChoice = s.parse().unwrap();
            assert_eq!(c.to_string(), s);
        }
        assert!("top".parse::<AlphaChoice>().is_err());
    }

    #[test]
    fn key_values_carry_full_precision() {
        let p = plan_local(&paper_inputs()).unwrap();
        let kv = p.to_key_values();
        assert_eq!(kv.get("L0").unwrap().parse::<f64>().unwrap(), p.l0);
        assert_eq!(kv.get("L0_term"), Some("weights"));
        assert!(kv.to_string().contains("\nL = 0.977078"));
    }
}
