use super::{infeasible, KeyValues, PlanError};

#[derive(Debug, Clone, PartialEq)]
pub struct BasinInputs {
    pub sigma: f64,
    pub eta: f64,
    /// Defaults to half the admissible bound `η/(η+σ)`.
    pub beta1s: Option<f64>,
    /// Defaults to `(2σ/θ₁)²`, which makes `θ₂ = σ/θ₁`.
    pub epss: Option<f64>,
    pub beta2s: f64,
    pub m_const: f64,
}

impl BasinInputs {
    pub fn new(sigma: f64, eta: f64, m_const: f64) -> Self {
        BasinInputs {
            sigma,
            eta,
            beta1s: None,
            epss: None,
            beta2s: 0.9,
            m_const,
        }
    }

    pub fn with_beta1(mut self, b: f64) -> Self {
        self.beta1s = Some(b);
        self
    }

    pub fn with_eps(mut self, e: f64) -> Self {
        self.epss = Some(e);
        self
    }

    pub fn with_beta2(mut self, b: f64) -> Self {
        self.beta2s = b;
        self
    }
}

/// Parameters and constants of the approach phase.
#[derive(Debug, Clone, PartialEq)]
pub struct BasinPlan {
    pub sigma: f64,
    pub eta: f64,
    pub beta1s: f64,
    pub beta2s: f64,
    pub epss: f64,
    pub m_const: f64,
    pub theta1: f64,
    pub theta2: f64,
    /// Guaranteed decrease of `C` per step while `‖ζ‖ > η`.
    pub s: f64,
}

impl BasinPlan {
    /// `⌊gap/s⌋`, the bound on steps before `‖ζ‖ ≤ η`, where `gap` is
    /// `C(w₀) − inf C`.
    pub fn step_bound(&self, gap: f64) -> u64 {
        let q = (gap / self.s).floor();
        if q >= u64::MAX as f64 {
            u64::MAX
        } else if q > 0.0 {
            q as u64
        } else {
            0
        }
    }

    /// `s` from its factored form `η⁴(β₁(1−β₁)θ₁θ₂/(σ+√ε))²/(2Mσ²)`.
    pub fn s_factored(&self) -> f64 {
        factored_s(
            self.sigma,
            self.eta,
            self.beta1s,
            self.epss,
            self.m_const,
            self.theta1,
            self.theta2,
        )
    }

    pub fn to_key_values(&self) -> KeyValues {
        let mut kv = KeyValues::default();
        kv.num("sigma", self.sigma);
        kv.num("eta", self.eta);
        kv.num("beta1", self.beta1s);
        kv.num("beta2", self.beta2s);
        kv.num("eps", self.epss);
        kv.num("M", self.m_const);
        kv.num("theta1", self.theta1);
        kv.num("theta2", self.theta2);
        kv.num("s", self.s);
        kv
    }
}

fn factored_s(sigma: f64, eta: f64, b1: f64, eps: f64, m: f64, t1: f64, t2: f64) -> f64 {
    let inner = b1 * (1.0 - b1) * t1 * t2 / (sigma + eps.sqrt());
    eta.powi(4) * inner * inner / (2.0 * m * sigma * sigma)
}

fn closed_s(sigma: f64, eta: f64, b1: f64, eps: f64, m: f64) -> f64 {
    let se = eps.sqrt();
    let inner = (1.0 - b1) * ((1.0 - b1) * eta - (sigma + sigma * sigma / se) * b1);
    eps * eta.powi(4) * inner * inner / (2.0 * m * sigma.powi(4) * (sigma + se).powi(2))
}

fn resolve(inputs: &BasinInputs) -> (f64, f64, f64) {
    let BasinInputs { sigma, eta, .. } = *inputs;
    let beta1s = inputs.beta1s.unwrap_or(0.5 * eta / (eta + sigma));
    let theta1 = (1.0 - beta1s) * eta / (sigma * beta1s) - 1.0;
    let epss = inputs
        .epss
        .unwrap_or_else(|| (2.0 * sigma / theta1).powi(2));
    (beta1s, theta1, epss)
}

/// Builds the plan without checking feasibility. Intended for negative
/// controls; the constants may be meaningless.
pub fn plan_basin_unchecked(inputs: &BasinInputs) -> BasinPlan {
    let (beta1s, theta1, epss) = resolve(inputs);
    let theta2 = epss.sqrt() - inputs.sigma / theta1;
    BasinPlan {
        sigma: inputs.sigma,
        eta: inputs.eta,
        beta1s,
        beta2s: inputs.beta2s,
        epss,
        m_const: inputs.m_const,
        theta1,
        theta2,
        s: closed_s(inputs.sigma, inputs.eta, beta1s, epss, inputs.m_const),
    }
}

pub fn plan_basin(inputs: &BasinInputs) -> Result<BasinPlan, PlanError> {
    let BasinInputs {
        sigma,
        eta,
        beta2s,
        m_const,
        ..
    } = *inputs;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(infeasible("sigma > 0", format!("sigma = {sigma}")));
    }
    if !(eta > 0.0 && eta < sigma) {
        return Err(infeasible(
            "0 < eta < sigma",
            format!("eta = {eta}, sigma = {sigma}"),
        ));
    }
    if !(m_const > 0.0 && m_const.is_finite()) {
        return Err(infeasible("M > 0", format!("M = {m_const}")));
    }
    if !(beta2s > 0.0 && beta2s < 1.0) {
        return Err(infeasible("0 < beta2 < 1", format!("beta2 = {beta2s}")));
    }
    let bound = eta / (eta + sigma);
    if let Some(b) = inputs.beta1s {
        if !(b > 0.0 && b < bound) {
            return Err(infeasible(
                "0 < beta1 < eta/(eta+sigma)",
                format!("beta1 = {b}, bound = {bound}"),
            ));
        }
    }
    if let Some(e) = inputs.epss {
        if !(e > 0.0 && e.is_finite()) {
            return Err(infeasible("eps > 0", format!("eps = {e}")));
        }
    }
    let plan = plan_basin_unchecked(inputs);
    if !(plan.theta1 > 0.0) {
        return Err(infeasible(
            "theta1 > 0",
            format!("theta1 = {}", plan.theta1),
        ));
    }
    if !(plan.epss.sqrt() * plan.theta1 > sigma && plan.theta2 > 0.0) {
        return Err(infeasible(
            "sqrt(eps)*theta1 > sigma",
            format!(
                "sqrt(eps)*theta1 = {}, sigma = {sigma}",
                plan.epss.sqrt() * plan.theta1
            ),
        ));
    }
    if !(plan.s > 0.0) {
        return Err(infeasible("s > 0", format!("s = {}", plan.s)));
    }
    Ok(plan)
}

/// Lower bound on `⟨ζ_{w_n}, m_{n+1}/√(v_{n+1}+ε)⟩` from zero moments, given
/// `‖ζ_{w_n}‖` and `σ_n = max_{i≤n} ‖ζ_{w_i}‖`.
pub fn lemma_inner_product_bound(
    zeta_norm: f64,
    sigma_n: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    n: u64,
) -> f64 {
    if zeta_norm == 0.0 {
        return 0.0;
    }
    let k = n as f64 + 1.0;
    let se = eps.sqrt();
    let head = (1.0 - beta1) / (sigma_n * (1.0 - beta2.powf(k)).sqrt() + se);
    let tail = (beta1 - beta1.powf(k)) * sigma_n / (zeta_norm * se);
    zeta_norm * zeta_norm * (head - tail)
}

/// `(β₁ − β₁ⁿ⁺¹)θ₁θ₂/(√ε(σ+√ε))`, the floor on the bracket of the inner
/// product bound when `‖ζ‖ ≥ η`.
pub fn lemma_theta_bound(plan: &BasinPlan, n: u64) -> f64 {
    let se = plan.epss.sqrt();
    let b = plan.beta1s;
    (b - b.powf(n as f64 + 1.0)) * plan.theta1 * plan.theta2 / (se * (plan.sigma + se))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> BasinInputs {
        BasinInputs::new(1.0, 0.1, 2.0)
            .with_beta1(0.05)
            .with_eps(2.0)
    }

    #[test]
    fn thetas_of_the_example() {
        let p = plan_basin(&example()).unwrap();
        assert!((p.theta1 - 0.9).abs() < 1e-14);
        assert!((p.theta2 - (2.0_f64.sqrt() - 1.0 / 0.9)).abs() < 1e-14);
        assert!((p.theta2 - 0.303103).abs() < 1e-6);
    }

    #[test]
    fn closed_and_factored_s_agree() {
        let p = plan_basin(&example()).unwrap();
        assert!(p.s > 0.0);
        assert!((p.s - p.s_factored()).abs() <= 1e-14 * p.s);
        assert_eq!(p.step_bound(1.0), (1.0 / p.s).floor() as u64);
    }

    #[test]
    fn boundary_beta1_is_infeasible() {
        let e = plan_basin(&example().with_beta1(1.0 / 11.0)).unwrap_err();
        assert!(matches!(e, PlanError::Infeasible { .. }), "{e:?}");
        let p = plan_basin_unchecked(&example().with_beta1(1.0 / 11.0));
        assert!(p.theta1.abs() < 1e-14);
    }

    #[test]
    fn small_eps_is_infeasible() {
        // √ε·θ₁ = 0.9·0.5 < 1
        let e = plan_basin(&example().with_eps(0.25)).unwrap_err();
        match e {
            PlanError::Infeasible { constraint, .. } => {
                assert_eq!(constraint, "sqrt(eps)*theta1 > sigma")
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn defaults_are_feasible() {
        let p = plan_basin(&BasinInputs::new(3.0, 0.2, 1.0)).unwrap();
        assert!((p.theta1 - (1.0 + 0.2 / 3.0)).abs() < 1e-14);
        assert!((p.theta2 - 3.0 / p.theta1).abs() < 1e-12);
        assert_eq!(p.beta2s, 0.9);
    }

    #[test]
    fn range_checks() {
        assert!(plan_basin(&BasinInputs::new(1.0, 1.0, 1.0)).is_err());
        assert!(plan_basin(&BasinInputs::new(1.0, 0.1, 0.0)).is_err());
        assert!(plan_basin(&BasinInputs::new(1.0, 0.1, 1.0).with_beta2(1.0)).is_err());
    }

    #[test]
    fn inner_product_bound_first_step() {
        // from zero moments the first inner product is (1−β₁)g²/√((1−β₂)g²+ε)
        let (b1, b2, eps) = (0.05, 0.9, 2.0);
        for g in [0.2_f64, 1.0, 3.0] {
            let actual = (1.0 - b1) * g * g / ((1.0 - b2) * g * g + eps).sqrt();
            let bound = lemma_inner_product_bound(g, g, b1, b2, eps, 0);
            assert!(actual >= bound - 1e-15, "g={g}");
        }
        assert_eq!(lemma_inner_product_bound(0.0, 1.0, b1, b2, eps, 4), 0.0);
    }

    #[test]
    fn theta_bound_is_a_floor_on_the_bracket() {
        let p = plan_basin(&example()).unwrap();
        for n in 1..40 {
            let bracket = lemma_inner_product_bound(p.eta, p.sigma, p.beta1s, p.beta2s, p.epss, n)
                / (p.eta * p.eta);
            assert!(bracket >= lemma_theta_bound(&p, n) - 1e-15, "n={n}");
            assert!(lemma_theta_bound(&p, n) > 0.0);
        }
        assert_eq!(lemma_theta_bound(&p, 0), 0.0);
    }
}
