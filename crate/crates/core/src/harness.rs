//! Numerical audits of the inequalities behind the convergence results, and
//! empirical rate fits.
//!
//! Every check is deterministic given its inputs and seed.

use std::fmt;

use thiserror::Error;

use crate::driver::{PlanUsed, Trace, TraceRecord};
use crate::objectives::{Objective, ObjectiveError};
use crate::optimizer::{gamma_map, omega_map, AdamParams, OptimizerError};
use crate::planner::{lemma_inner_product_bound, lemma_theta_bound, BasinPlan, LocalPlan};
use crate::sampling::{seeded, uniform_offset};
use crate::vector::{AdamState, NonnegPoint, Point};

/// Absolute slack on every inequality.
pub const SLACK: f64 = 1e-9;
pub const MIN_FIT_POINTS: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("the audit needs a known minimizer")]
    MissingMinimizer,
    #[error("not enough positive error values to fit a rate ({found} found)")]
    InsufficientPoints { found: usize },
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
}

/// A sampled point where an inequality failed.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub state: AdamState,
    pub n: Option<u64>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub name: &'static str,
    pub checks: usize,
    pub violations: usize,
    /// Largest observed ratio, comparable with `bound`.
    pub max_ratio: f64,
    pub bound: f64,
    pub witness: Option<Witness>,
}

impl AuditReport {
    fn new(name: &'static str, bound: f64) -> Self {
        AuditReport {
            name,
            checks: 0,
            violations: 0,
            max_ratio: 0.0,
            bound,
            witness: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    fn observe(&mut self, lhs: f64, rhs: f64, ratio: f64, witness: impl FnOnce() -> Witness) {
        self.checks += 1;
        if ratio.is_finite() {
            self.max_ratio = self.max_ratio.max(ratio);
        }
        if !(lhs <= rhs + SLACK) {
            self.violations += 1;
            if self.witness.is_none() {
                self.witness = Some(witness());
            }
        }
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "[{}] {}",
            self.name,
            if self.passed() { "pass" } else { "FAIL" }
        )?;
        writeln!(f, "  checks = {}", self.checks)?;
        writeln!(f, "  violations = {}", self.violations)?;
        writeln!(f, "  max_ratio = {:?}", self.max_ratio)?;
        writeln!(f, "  bound = {:?}", self.bound)?;
        if let Some(w) = &self.witness {
            if let Some(n) = w.n {
                writeln!(f, "  witness.n = {n}")?;
            }
            writeln!(f, "  witness.m = {}", w.state.m)?;
            writeln!(f, "  witness.v = {}", w.state.v.as_point())?;
            writeln!(f, "  witness.w = {}", w.state.w)?;
            writeln!(f, "  witness.lhs = {:?}", w.lhs)?;
            writeln!(f, "  witness.rhs = {:?}", w.rhs)?;
        }
        Ok(())
    }
}

/// A uniform-ish sample of `B∞(x*, r) ∩ X`: each block drawn from its own
/// Euclidean ball of radius `r`, `v` clamped to be nonnegative, `x = x*`
/// rejected.
fn sample_near(rng: &mut crate::sampling::SeededRng, w_star: &Point, r: f64) -> AdamState {
    let dim = w_star.dim();
    loop {
        let m = uniform_offset(rng, dim, r);
        let v = NonnegPoint::clamp_from(&uniform_offset(rng, dim, r));
        let w = w_star.add(&uniform_offset(rng, dim, r));
        let x = AdamState { m, v, w };
        if x.inf_distance(&AdamState::at_rest(w_star.clone())) > 0.0 {
            return x;
        }
    }
}

fn local_params(lp: &LocalPlan) -> Result<AdamParams, HarnessError> {
    Ok(AdamParams::new(lp.eps, lp.beta1, lp.beta2, Some(lp.alpha))?)
}

/// `⫴Γ(x) − x*⫴ ≤ L₀⫴x − x*⫴` on samples of `B∞(x*, r) ∩ X`.
pub fn check_gamma_contraction(
    oracle: &dyn Objective,
    lp: &LocalPlan,
    samples: usize,
    seed: u64,
) -> Result<AuditReport, HarnessError> {
    let w_star = oracle.minimizer().ok_or(HarnessError::MissingMinimizer)?;
    let star = AdamState::at_rest(w_star.clone());
    let params = local_params(lp)?;
    let mut rng = seeded(seed);
    let mut report = AuditReport::new("gamma_contraction", lp.l0);
    for _ in 0..samples {
        let x = sample_near(&mut rng, &w_star, lp.r);
        let zeta = oracle.clarke_selection(&x.w)?;
        let gx = gamma_map(&x, &zeta, &params)?;
        let lhs = gx.triple_distance(&star, lp.a);
        let dist = x.triple_distance(&star, lp.a);
        let rhs = lp.l0 * dist;
        report.observe(lhs, rhs, lhs / dist, || Witness {
            state: x.clone(),
            n: None,
            lhs,
            rhs,
        });
    }
    Ok(report)
}

/// `‖Ω(n, x)‖∞ ≤ K₀βⁿ‖x − x*‖∞` for `n = 0..=n_max` on samples of
/// `B∞(x*, r) ∩ X`.
pub fn check_omega_decay(
    oracle: &dyn Objective,
    lp: &LocalPlan,
    samples: usize,
    n_max: u64,
    seed: u64,
) -> Result<AuditReport, HarnessError> {
    let w_star = oracle.minimizer().ok_or(HarnessError::MissingMinimizer)?;
    let star = AdamState::at_rest(w_star.clone());
    let params = local_params(lp)?;
    let mut rng = seeded(seed);
    let mut report = AuditReport::new("omega_decay", lp.k0);
    for _ in 0..samples {
        let x = sample_near(&mut rng, &w_star, lp.r);
        let zeta = oracle.clarke_selection(&x.w)?;
        let dist = x.inf_distance(&star);
        let mut power = 1.0_f64;
        for n in 0..=n_max {
            let lhs = omega_map(n, &x, &zeta, &params)?.norm();
            let rhs = lp.k0 * power * dist;
            let ratio = if power > 0.0 {
                lhs / (power * dist)
            } else {
                f64::NAN
            };
            report.observe(lhs, rhs, ratio, || Witness {
                state: x.clone(),
                n: Some(n),
                lhs,
                rhs,
            });
            power *= lp.beta;
        }
    }
    Ok(report)
}

/// The doubled-`α` negative control: `α` is doubled past the admissible
/// interval and `β₁` re-derived from it, while the certified `L₀`, `K₀`, `β`
/// are kept as the claims to audit.
pub fn doubled_alpha_control(lp: &LocalPlan) -> LocalPlan {
    let mut bad = lp.clone();
    bad.alpha = 2.0 * lp.alpha;
    bad.beta1 = 1.0 - lp.alpha_lo / bad.alpha;
    bad
}

fn basin_plan_of(trace: &Trace) -> Option<&BasinPlan> {
    match &trace.plan_used {
        PlanUsed::Basin(bp) => Some(bp),
        PlanUsed::Local(_) => None,
    }
}

fn took_step(r: &TraceRecord) -> bool {
    r.alpha_n != 0.0
}

/// Basin-trace audit: every step taken with `‖ζ‖ > η` lowers `C` by at
/// least `s`, and moves `w` by at most `σ/M`.
#[derive(Debug, Clone, PartialEq)]
pub struct DescentReport {
    pub steps_checked: usize,
    /// Indices `n` of steps whose decrease fell short of `s`.
    pub failures: Vec<u64>,
    /// Indices `n` of steps longer than `σ/M`.
    pub long_steps: Vec<u64>,
    pub min_decrease: f64,
    pub s: f64,
}

impl DescentReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.long_steps.is_empty()
    }
}

impl fmt::Display for DescentReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "[basin_descent] {}",
            if self.passed() { "pass" } else { "FAIL" }
        )?;
        writeln!(f, "  steps_checked = {}", self.steps_checked)?;
        writeln!(f, "  s = {:?}", self.s)?;
        writeln!(f, "  min_decrease = {:?}", self.min_decrease)?;
        writeln!(f, "  short_steps = {:?}", self.failures)?;
        writeln!(f, "  long_steps = {:?}", self.long_steps)
    }
}

pub fn check_basin_descent(trace: &Trace, bp: &BasinPlan) -> DescentReport {
    let mut report = DescentReport {
        steps_checked: 0,
        failures: Vec::new(),
        long_steps: Vec::new(),
        min_decrease: f64::INFINITY,
        s: bp.s,
    };
    let max_len = bp.sigma / bp.m_const;
    for pair in trace.records.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if !(took_step(a) && a.zeta_norm > bp.eta) {
            continue;
        }
        report.steps_checked += 1;
        let decrease = a.c - b.c;
        report.min_decrease = report.min_decrease.min(decrease);
        if !(b.c - a.c <= -bp.s + SLACK) {
            report.failures.push(a.n);
        }
        if !(b.w.distance(&a.w) <= max_len * (1.0 + 1e-12)) {
            report.long_steps.push(a.n);
        }
    }
    report
}

/// Basin-trace audit of the recorded `⟨ζ_{w_n}, m_{n+1}/√(v_{n+1}+ε)⟩`
/// against its lower bound with `σ_n = max_{i≤n}‖ζ_{w_i}‖`, and (for
/// `n ≥ 1`, `‖ζ‖ > η`) of the bracket against the `θ₁θ₂` floor.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerProductReport {
    pub steps_checked: usize,
    pub failures: Vec<u64>,
    pub floor_failures: Vec<u64>,
    /// Smallest `inner − bound` seen.
    pub min_margin: f64,
}

impl InnerProductReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.floor_failures.is_empty()
    }
}

impl fmt::Display for InnerProductReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "[inner_product] {}",
            if self.passed() { "pass" } else { "FAIL" }
        )?;
        writeln!(f, "  steps_checked = {}", self.steps_checked)?;
        writeln!(f, "  min_margin = {:?}", self.min_margin)?;
        writeln!(f, "  bound_failures = {:?}", self.failures)?;
        writeln!(f, "  floor_failures = {:?}", self.floor_failures)
    }
}

pub fn check_inner_product_bound(bp: &BasinPlan, trace: &Trace) -> InnerProductReport {
    let mut report = InnerProductReport {
        steps_checked: 0,
        failures: Vec::new(),
        floor_failures: Vec::new(),
        min_margin: f64::INFINITY,
    };
    let mut sigma_n = 0.0_f64;
    for r in &trace.records {
        sigma_n = sigma_n.max(r.zeta_norm);
        if !took_step(r) {
            continue;
        }
        report.steps_checked += 1;
        let bound =
            lemma_inner_product_bound(r.zeta_norm, sigma_n, bp.beta1s, bp.beta2s, bp.epss, r.n);
        report.min_margin = report.min_margin.min(r.inner - bound);
        if !(r.inner >= bound - SLACK) {
            report.failures.push(r.n);
        }
        if r.n >= 1 && r.zeta_norm > bp.eta && r.zeta_norm <= bp.sigma {
            let bracket = lemma_inner_product_bound(
                r.zeta_norm,
                bp.sigma,
                bp.beta1s,
                bp.beta2s,
                bp.epss,
                r.n,
            ) / (r.zeta_norm * r.zeta_norm);
            if !(bracket >= lemma_theta_bound(bp, r.n) - SLACK) {
                report.floor_failures.push(r.n);
            }
        }
    }
    report
}

/// Convenience wrapper reading the plan from the trace.
pub fn audit_basin_trace(trace: &Trace) -> Option<(DescentReport, InnerProductReport)> {
    let bp = basin_plan_of(trace)?;
    Some((
        check_basin_descent(trace, bp),
        check_inner_product_bound(bp, trace),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorColumn {
    /// `⫴x − x*⫴`
    Triple,
    /// `‖x − x*‖∞`
    Inf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    /// Fitted per-step factor `exp(slope)`.
    pub rate: f64,
    pub intercept: f64,
    pub window: (u64, u64),
    /// RMS residual of the log-linear fit.
    pub residual: f64,
    pub points: usize,
    pub note: Option<String>,
}

/// Least squares of `log e_n` against `n` over the last `tail_fraction` of
/// the records (at least [`MIN_FIT_POINTS`] when available).
pub fn fit_rate(trace: &Trace, tail_fraction: f64) -> Result<RateFit, HarnessError> {
    fit_rate_by(trace, tail_fraction, ErrorColumn::Triple)
}

pub fn fit_rate_by(
    trace: &Trace,
    tail_fraction: f64,
    column: ErrorColumn,
) -> Result<RateFit, HarnessError> {
    let series: Vec<(u64, Option<f64>)> = trace
        .records
        .iter()
        .map(|r| {
            let e = match column {
                ErrorColumn::Triple => r.triple_err,
                ErrorColumn::Inf => r.inf_err,
            };
            (r.n, e)
        })
        .collect();
    fit_series(&series, tail_fraction)
}

/// [`fit_rate`] over a raw `(n, error)` series.
pub fn fit_series(
    series: &[(u64, Option<f64>)],
    tail_fraction: f64,
) -> Result<RateFit, HarnessError> {
    let mut note = None;
    let mut points = Vec::new();
    for &(n, e) in series {
        match e {
            Some(e) if e > 0.0 && e.is_finite() => points.push((n as f64, e.ln())),
            _ => {
                note = Some(format!(
                    "fit limited to the positive prefix ending before n = {n}"
                ));
                break;
            }
        }
    }
    if points.len() < 2 {
        return Err(HarnessError::InsufficientPoints {
            found: points.len(),
        });
    }
    let frac = tail_fraction.clamp(0.0, 1.0);
    let want = ((points.len() as f64) * frac).ceil() as usize;
    let take = want.max(MIN_FIT_POINTS).min(points.len());
    if take < MIN_FIT_POINTS {
        note = Some(format!("only {take} points available"));
    }
    let tail = &points[points.len() - take..];
    let k = tail.len() as f64;
    let mx = tail.iter().map(|p| p.0).sum::<f64>() / k;
    let my = tail.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = tail.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (tail
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / k)
        .sqrt();
    Ok(RateFit {
        rate: slope.exp(),
        intercept,
        window: (tail[0].0 as u64, tail[tail.len() - 1].0 as u64),
        residual,
        points: tail.len(),
        note,
    })
}

/// `⫴x_n − x*⫴ ≤ K·Lⁿ⁻ⁿ⁰·⫴x₀ − x*⫴` for all `n ≥ n₀` in a local trace.
pub fn check_local_envelope(trace: &Trace, lp: &LocalPlan) -> AuditReport {
    let mut report = AuditReport::new("local_envelope", lp.k);
    let Some(e0) = trace.records.first().and_then(|r| r.triple_err) else {
        return report;
    };
    for r in &trace.records {
        let (Some(e), true) = (r.triple_err, r.n >= lp.n0) else {
            continue;
        };
        let rhs = lp.envelope(r.n) * e0;
        let ratio = e / (lp.l.powf(r.n as f64 - lp.n0 as f64) * e0);
        report.observe(e, rhs, ratio, || Witness {
            state: AdamState::at_rest(r.w.clone()),
            n: Some(r.n),
            lhs: e,
            rhs,
        });
    }
    report
}
