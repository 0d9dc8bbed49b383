//! The three runs: the basin phase with adaptive step sizes, the local phase
//! with certified Adam parameters, and the composed global run that hands
//! off from the first to the second.

use std::fmt;

use thiserror::Error;

use crate::objectives::{
    estimate_descent_constant, estimate_growth, estimate_lipschitz, DescentSampling,
    HypothesisEstimate, Objective, ObjectiveError, DEFAULT_SAMPLES,
};
use crate::optimizer::{
    adam_step, update_moments, AdamParams, DescentAdaptive, OptimizerError, StepSize, StepSizeRule,
};
use crate::planner::{
    plan_basin, plan_local, AlphaChoice, BasinInputs, BasinPlan, LocalInputs, LocalPlan, PlanError,
};
use crate::vector::{check_dims, cw_div_sqrt_shift, AdamState, Point, VectorError};

/// Absolute slack on the per-step descent check.
pub const DESCENT_SLACK: f64 = 1e-9;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_LOCAL_CAP: u64 = 100_000;
/// Hard ceiling on basin steps whatever the certified bound says.
pub const BASIN_HARD_CAP: u64 = 10_000_000;
/// Local runs stop as diverged once the error exceeds this multiple of the
/// initial error.
pub const DIVERGENCE_FACTOR: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DriverError {
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error("a known minimizer is required: {0}")]
    MissingMinimizer(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    CriticalPoint,
    EtaReached,
    ToleranceReached,
    StepCap,
    HypothesisViolation,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::CriticalPoint => "critical_point",
            Termination::EtaReached => "eta_reached",
            Termination::ToleranceReached => "tolerance_reached",
            Termination::StepCap => "step_cap",
            Termination::HypothesisViolation => "hypothesis_violation",
        }
    }

    pub fn is_success(self) -> bool {
        matches!(
            self,
            Termination::CriticalPoint | Termination::EtaReached | Termination::ToleranceReached
        )
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanUsed {
    Local(LocalPlan),
    Basin(BasinPlan),
}

/// State `x_n` with `ζ_{w_n}` and the step taken from it.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub n: u64,
    pub w: Point,
    pub c: f64,
    pub zeta_norm: f64,
    pub m_norm: f64,
    pub v_norm: f64,
    /// `‖w_n − w*‖`
    pub err_w: Option<f64>,
    /// `⫴x_n − x*⫴` (with `A = 1` in basin traces)
    pub triple_err: Option<f64>,
    /// `‖x_n − x*‖∞`
    pub inf_err: Option<f64>,
    /// Step size used to leave `x_n`; 0 when no step was taken.
    pub alpha_n: f64,
    /// `⟨ζ_{w_n}, m_{n+1}/√(v_{n+1}+ε)⟩`; 0 when no step was taken.
    pub inner: f64,
    /// `‖m_{n+1}/√(v_{n+1}+ε)‖`; 0 when no step was taken.
    pub dir_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    pub plan_used: PlanUsed,
    pub termination: Termination,
    pub notes: Vec<String>,
}

impl Trace {
    pub fn last(&self) -> &TraceRecord {
        self.records
            .last()
            .expect("traces hold at least the initial record")
    }

    /// Number of steps taken.
    pub fn steps(&self) -> u64 {
        self.last().n
    }
}

struct Recorder<'a> {
    oracle: &'a dyn Objective,
    star: Option<AdamState>,
    a: f64,
}

impl Recorder<'_> {
    fn record(&self, n: u64, x: &AdamState, zeta: &Point) -> TraceRecord {
        let (err_w, triple_err, inf_err) = match &self.star {
            Some(s) => (
                Some(x.w.distance(&s.w)),
                Some(x.triple_distance(s, self.a)),
                Some(x.inf_distance(s)),
            ),
            None => (None, None, None),
        };
        TraceRecord {
            n,
            w: x.w.clone(),
            c: self.oracle.value(&x.w),
            zeta_norm: zeta.norm(),
            m_norm: x.m.norm(),
            v_norm: x.v.norm(),
            err_w,
            triple_err,
            inf_err,
            alpha_n: 0.0,
            inner: 0.0,
            dir_norm: 0.0,
        }
    }
}

fn resolve_star(oracle: &dyn Objective, w_star: Option<&Point>) -> Option<Point> {
    w_star.cloned().or_else(|| oracle.minimizer())
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BasinOptions {
    /// Defaults to `min(10·⌊gap/s⌋, 10⁷)`, at least 1.
    pub step_cap: Option<u64>,
    /// Overrides the oracle's declared minimizer.
    pub w_star: Option<Point>,
}

/// Generalized Adam from `(0, 0, w₀)` with the adaptive step size, until
/// `‖ζ‖ ≤ η`, a critical point, or the cap. A step whose decrease falls short
/// of `s`, or a nonpositive step size, ends the run as a hypothesis violation.
pub fn run_basin(
    oracle: &dyn Objective,
    w0: &Point,
    bp: &BasinPlan,
    opts: &BasinOptions,
) -> Result<Trace, DriverError> {
    check_dims(oracle.dim(), w0.dim())?;
    let params = AdamParams::new(bp.epss, bp.beta1s, bp.beta2s, None)?;
    let rule = DescentAdaptive {
        m_const: bp.m_const,
    };
    let w_star = resolve_star(oracle, opts.w_star.as_ref());
    let floor = w_star.as_ref().map_or(0.0, |w| oracle.value(w));
    let cap = opts.step_cap.unwrap_or_else(|| {
        let bound = bp.step_bound(oracle.value(w0) - floor);
        bound.saturating_mul(10).clamp(1, BASIN_HARD_CAP)
    });
    let rec = Recorder {
        oracle,
        star: w_star.map(AdamState::at_rest),
        a: 1.0,
    };

    let mut notes = Vec::new();
    let mut records = Vec::new();
    let mut x = AdamState::at_rest(w0.clone());
    let mut n = 0u64;
    let termination = loop {
        let zeta = oracle.clarke_selection(&x.w)?;
        let mut r = rec.record(n, &x, &zeta);
        if zeta.is_zero() {
            records.push(r);
            break Termination::CriticalPoint;
        }
        if r.zeta_norm <= bp.eta {
            records.push(r);
            break Termination::EtaReached;
        }
        if n >= cap {
            records.push(r);
            break Termination::StepCap;
        }
        if r.zeta_norm > bp.sigma {
            notes.push(format!(
                "n={n}: ‖ζ‖ = {} exceeds sigma = {}",
                r.zeta_norm, bp.sigma
            ));
        }
        let update = update_moments(&x, &zeta, &params)?;
        let alpha = match rule.step_size(n, &zeta, &update) {
            StepSize::Take(a) => a,
            StepSize::Stop => {
                records.push(r);
                notes.push(format!("n={n}: zero direction with ζ ≠ 0"));
                break Termination::CriticalPoint;
            }
        };
        r.inner = zeta.dot(&update.direction);
        r.dir_norm = update.direction.norm();
        if !(alpha > 0.0) {
            records.push(r);
            notes.push(format!(
                "n={n}: step size {alpha} not positive (⟨ζ, d⟩ = {}); step not taken",
                zeta.dot(&update.direction)
            ));
            break Termination::HypothesisViolation;
        }
        r.alpha_n = alpha;
        let c_before = r.c;
        records.push(r);
        x = AdamState {
            w: x.w.axpy(-alpha, &update.direction),
            m: update.m,
            v: update.v,
        };
        x.w = x.w.ensure_finite()?;
        n += 1;
        let c_after = oracle.value(&x.w);
        if c_after - c_before > -bp.s + DESCENT_SLACK {
            let zeta = oracle.clarke_selection(&x.w)?;
            records.push(rec.record(n, &x, &zeta));
            notes.push(format!(
                "n={}: decrease {} short of s = {}",
                n - 1,
                c_before - c_after,
                bp.s
            ));
            break Termination::HypothesisViolation;
        }
    };
    Ok(Trace {
        records,
        plan_used: PlanUsed::Basin(bp.clone()),
        termination,
        notes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalOptions {
    /// On `‖w − w*‖`, or on `‖ζ‖` when no minimizer is known.
    pub tol: f64,
    pub step_cap: u64,
    pub w_star: Option<Point>,
}

impl Default for LocalOptions {
    fn default() -> Self {
        LocalOptions {
            tol: DEFAULT_TOL,
            step_cap: DEFAULT_LOCAL_CAP,
            w_star: None,
        }
    }
}

/// Adam with the plan's `α, β₁, β₂, ε` from `(0, 0, w₀)`.
pub fn run_local(
    oracle: &dyn Objective,
    w0: &Point,
    lp: &LocalPlan,
    opts: &LocalOptions,
) -> Result<Trace, DriverError> {
    check_dims(oracle.dim(), w0.dim())?;
    let params = AdamParams::new(lp.eps, lp.beta1, lp.beta2, Some(lp.alpha))?;
    let w_star = resolve_star(oracle, opts.w_star.as_ref());
    let star = w_star.map(AdamState::at_rest);
    let rec = Recorder {
        oracle,
        star: star.clone(),
        a: lp.a,
    };
    let mut notes = Vec::new();
    let mut x = AdamState::at_rest(w0.clone());
    let initial = star.as_ref().map(|s| x.triple_distance(s, lp.a));
    match initial {
        Some(e0) if e0 > lp.r / lp.k => notes.push(format!(
            "initial triple error {e0} exceeds r/K = {}; envelope not certified",
            lp.r / lp.k
        )),
        None => notes.push("no known minimizer: stopping on ‖ζ‖ and no error columns".into()),
        _ => {}
    }

    let mut records = Vec::new();
    let mut n = 0u64;
    let termination = loop {
        let zeta = oracle.clarke_selection(&x.w)?;
        let mut r = rec.record(n, &x, &zeta);
        let converged = match r.err_w {
            Some(e) => e <= opts.tol,
            None => r.zeta_norm <= opts.tol,
        };
        if converged {
            records.push(r);
            break Termination::ToleranceReached;
        }
        if let (Some(e), Some(e0)) = (r.triple_err, initial) {
            if e > DIVERGENCE_FACTOR * e0 {
                records.push(r);
                notes.push(format!(
                    "n={n}: error {e} exceeds {DIVERGENCE_FACTOR}× initial"
                ));
                break Termination::HypothesisViolation;
            }
        }
        if n >= opts.step_cap {
            records.push(r);
            break Termination::StepCap;
        }
        let step = adam_step(&x, &zeta, n, &params)?;
        let d = cw_div_sqrt_shift(&step.state_after.m, &step.state_after.v, lp.eps);
        r.alpha_n = step.alpha_used;
        r.inner = zeta.dot(&d);
        r.dir_norm = d.norm();
        records.push(r);
        x = step.state_after;
        x.w = x.w.ensure_finite()?;
        n += 1;
    };
    Ok(Trace {
        records,
        plan_used: PlanUsed::Local(lp.clone()),
        termination,
        notes,
    })
}

/// Inputs of the composed run. Unset constants are estimated by sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalConfig {
    pub w_star: Option<Point>,
    /// Radius `R` of the growth ball around `w*`.
    pub radius: f64,
    /// `R₀` of the one-sided quadratic bound.
    pub r0: f64,
    pub samples: usize,
    pub seed: u64,
    /// Estimated `δ̂` is divided by it; `μ̂`, `σ̂`, `M̂` are multiplied.
    pub safety: f64,
    pub delta: Option<f64>,
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub m_const: Option<f64>,
    /// Multiplies the final `M`. Below 1 it voids the basin guarantee.
    pub m_scale: f64,
    pub a: Option<f64>,
    pub eps: f64,
    pub beta2: Option<f64>,
    pub alpha: AlphaChoice,
    pub basin_beta1: Option<f64>,
    pub basin_eps: Option<f64>,
    pub basin_beta2: f64,
    pub tol: f64,
    pub basin_cap: Option<u64>,
    pub local_cap: u64,
}

impl Default for GlobalConfig {
    fn default() -> Self {
        GlobalConfig {
            w_star: None,
            radius: 1.0,
            r0: 1.0,
            samples: DEFAULT_SAMPLES,
            seed: 0,
            safety: 1.25,
            delta: None,
            mu: None,
            sigma: None,
            m_const: None,
            m_scale: 1.0,
            a: None,
            eps: 1.0,
            beta2: None,
            alpha: AlphaChoice::Upper,
            basin_beta1: None,
            basin_eps: None,
            basin_beta2: 0.9,
            tol: DEFAULT_TOL,
            basin_cap: None,
            local_cap: DEFAULT_LOCAL_CAP,
        }
    }
}

/// The constants the global run settled on and where they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalSetup {
    pub estimate: Option<HypothesisEstimate>,
    pub sigma_hat: Option<f64>,
    pub m_hat: Option<f64>,
    pub local_plan: LocalPlan,
    pub basin_plan: BasinPlan,
    /// `⌊(C(w₀) − C(w*))/s⌋`
    pub step_bound: u64,
}

/// The numerical chain `‖ζ‖ ≤ η ⇒ A‖w − w*‖ ≤ r/K` at the handoff point.
#[derive(Debug, Clone, PartialEq)]
pub struct HandoffCheck {
    pub zeta_norm: f64,
    pub eta: f64,
    pub err_w: Option<f64>,
    /// `r/K`
    pub radius: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalRun {
    pub setup: GlobalSetup,
    pub basin: Trace,
    pub handoff: Option<HandoffCheck>,
    pub local: Option<Trace>,
}

impl GlobalRun {
    /// Termination of the last phase that ran.
    pub fn termination(&self) -> Termination {
        match (&self.handoff, &self.local) {
            (Some(h), _) if !h.ok => Termination::HypothesisViolation,
            (_, Some(t)) => t.termination,
            _ => self.basin.termination,
        }
    }
}

/// Estimates (or takes) the constants and builds both plans.
pub fn prepare_global(
    oracle: &dyn Objective,
    w0: &Point,
    cfg: &GlobalConfig,
) -> Result<GlobalSetup, DriverError> {
    check_dims(oracle.dim(), w0.dim())?;
    let w_star = resolve_star(oracle, cfg.w_star.as_ref());
    let need_star =
        |what: &str| DriverError::MissingMinimizer(format!("{what} has to be estimated around w*"));

    let (estimate, delta, mu) = match (cfg.delta, cfg.mu) {
        (Some(d), Some(m)) => (None, d, m),
        (d, m) => {
            let star = w_star.as_ref().ok_or_else(|| need_star("delta/mu"))?;
            let e = estimate_growth(oracle, star, cfg.radius, cfg.samples, cfg.seed)?;
            let delta = d.unwrap_or(e.delta_hat / cfg.safety);
            let mu = m.unwrap_or(e.mu_hat * cfg.safety);
            (Some(e), delta, mu)
        }
    };

    let (center, region) = match &w_star {
        Some(s) => (s.clone(), w0.distance(s).max(cfg.radius)),
        None => (w0.clone(), cfg.radius),
    };
    let (sigma_hat, sigma) = match cfg.sigma {
        Some(s) => (None, s),
        None => {
            let s = estimate_lipschitz(oracle, &center, region, cfg.samples, cfg.seed ^ 0x5151)?;
            (Some(s), s * cfg.safety)
        }
    };
    let (m_hat, m_const) = match cfg.m_const {
        Some(m) => (None, m),
        None => {
            let mut sampling = DescentSampling::new(center, region, cfg.r0, cfg.seed ^ 0xd35c);
            sampling.pairs = cfg.samples;
            let m = estimate_descent_constant(oracle, &sampling)?;
            let floor = sigma / cfg.r0 * (1.0 + 1e-6);
            (Some(m), (m * cfg.safety).max(floor))
        }
    };
    let m_const = m_const * cfg.m_scale;

    let mut inputs = LocalInputs::new(delta, mu, cfg.eps)
        .with_alpha(cfg.alpha)
        .with_radius(cfg.radius);
    inputs.a = cfg.a;
    inputs.beta2 = cfg.beta2;
    let local_plan = plan_local(&inputs)?;

    let eta = local_plan.eta.min(0.5 * sigma);
    let mut basin_inputs = BasinInputs::new(sigma, eta, m_const).with_beta2(cfg.basin_beta2);
    basin_inputs.beta1s = cfg.basin_beta1;
    basin_inputs.epss = cfg.basin_eps;
    let basin_plan = plan_basin(&basin_inputs)?;

    let floor = w_star.as_ref().map_or(0.0, |w| oracle.value(w));
    let step_bound = basin_plan.step_bound(oracle.value(w0) - floor);
    Ok(GlobalSetup {
        estimate,
        sigma_hat,
        m_hat,
        local_plan,
        basin_plan,
        step_bound,
    })
}

/// Basin phase, then (if `‖ζ‖ ≤ η` was reached) the local phase restarted
/// from `(0, 0, w)` at the reached point.
pub fn run_global(
    oracle: &dyn Objective,
    w0: &Point,
    cfg: &GlobalConfig,
) -> Result<GlobalRun, DriverError> {
    let setup = prepare_global(oracle, w0, cfg)?;
    run_global_with(oracle, w0, cfg, setup)
}

/// [`run_global`] with precomputed plans.
pub fn run_global_with(
    oracle: &dyn Objective,
    w0: &Point,
    cfg: &GlobalConfig,
    setup: GlobalSetup,
) -> Result<GlobalRun, DriverError> {
    let w_star = resolve_star(oracle, cfg.w_star.as_ref());
    let basin = run_basin(
        oracle,
        w0,
        &setup.basin_plan,
        &BasinOptions {
            step_cap: cfg.basin_cap,
            w_star: w_star.clone(),
        },
    )?;
    if basin.termination != Termination::EtaReached {
        return Ok(GlobalRun {
            setup,
            basin,
            handoff: None,
            local: None,
        });
    }

    let lp = &setup.local_plan;
    let last = basin.last();
    let radius = lp.r / lp.k;
    let err_w = last.err_w;
    let ok = err_w.is_none_or(|e| lp.a * e <= radius);
    let handoff = HandoffCheck {
        zeta_norm: last.zeta_norm,
        eta: setup.basin_plan.eta,
        err_w,
        radius,
        ok,
    };
    let w_handoff = last.w.clone();
    let mut local = run_local(
        oracle,
        &w_handoff,
        lp,
        &LocalOptions {
            tol: cfg.tol,
            step_cap: cfg.local_cap,
            w_star,
        },
    )?;
    if !ok {
        local.notes.insert(
            0,
            format!(
                "handoff outside the certified ball: A‖w − w*‖ = {} > r/K = {radius}",
                lp.a * err_w.unwrap_or(f64::NAN)
            ),
        );
    }
    Ok(GlobalRun {
        setup,
        basin,
        handoff: Some(handoff),
        local: Some(local),
    })
}
