use std::io::Write;
use std::path::Path;

use lipadam::driver::{prepare_global, run_global_with};
use lipadam::harness::{
    check_basin_descent, check_gamma_contraction, check_inner_product_bound, check_local_envelope,
    check_omega_decay, fit_rate, fit_series, RateFit,
};
use lipadam::objectives::{check_estimate_transfer, ObjectiveRegistry};

use super::{minimizer, scale_alpha};
use crate::config::RunConfig;
use crate::trace_csv::read_trace;
use crate::{exit, CliError};

/// Slack on the fitted rate against `L`.
pub const RATE_SLACK: f64 = 0.005;

fn write_fit(out: &mut dyn Write, fit: &RateFit) -> std::io::Result<()> {
    writeln!(out, "  rate = {:?}", fit.rate)?;
    writeln!(out, "  intercept = {:?}", fit.intercept)?;
    writeln!(out, "  window = {}..{}", fit.window.0, fit.window.1)?;
    writeln!(out, "  points = {:?}", fit.points)?;
    writeln!(out, "  residual = {:?}", fit.residual)?;
    if let Some(note) = &fit.note {
        writeln!(out, "  note = {note}")?;
    }
    Ok(())
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

pub fn cmd_verify_trace(
    path: &Path,
    max_rate: Option<f64>,
    out: &mut dyn Write,
) -> Result<u8, CliError> {
    let rows = read_trace(path)?;
    if rows.is_empty() {
        return Err(CliError::Usage(format!(
            "{}: trace has no rows, nothing to fit",
            path.display()
        )));
    }
    let series: Vec<(u64, Option<f64>)> = rows.iter().map(|r| (r.n, r.triple_err)).collect();
    let fit = fit_series(&series, 0.5)?;
    let ok = max_rate.is_none_or(|m| fit.rate <= m);
    writeln!(out, "[rate_fit] {}", verdict(ok))?;
    write_fit(out, &fit)?;
    if let Some(m) = max_rate {
        writeln!(out, "  max_rate = {m:?}")?;
    }
    Ok(if ok { exit::OK } else { exit::AUDIT_VIOLATION })
}

pub fn cmd_verify(cfg: &RunConfig, n_max: u64, out: &mut dyn Write) -> Result<u8, CliError> {
    let oracle = cfg.build_objective(&ObjectiveRegistry::with_builtins())?;
    let oracle = oracle.as_ref();
    let w0 = cfg.start()?;
    let gcfg = cfg.global_config()?;
    let star = minimizer(cfg, oracle)?
        .ok_or_else(|| CliError::Usage("verify needs a known minimizer (set w_star)".into()))?;
    let mut setup = prepare_global(oracle, &w0, &gcfg)?;
    scale_alpha(&mut setup.local_plan, cfg.alpha_scale);
    let lp = setup.local_plan.clone();
    let mut failed = Vec::new();

    writeln!(out, "[estimates]")?;
    if let Some(e) = &setup.estimate {
        writeln!(out, "  delta_hat = {:?}", e.delta_hat)?;
        writeln!(out, "  mu_hat = {:?}", e.mu_hat)?;
        writeln!(out, "  radius = {:?}", e.radius)?;
        writeln!(out, "  samples = {:?}", e.sample_count)?;
    }
    if let Some(s) = setup.sigma_hat {
        writeln!(out, "  sigma_hat = {s:?}")?;
    }
    if let Some(m) = setup.m_hat {
        writeln!(out, "  M_hat = {m:?}")?;
    }
    writeln!(out, "  delta = {:?}", lp.delta)?;
    writeln!(out, "  mu = {:?}", lp.mu)?;
    writeln!(out, "  sigma = {:?}", setup.basin_plan.sigma)?;
    writeln!(out, "  M = {:?}", setup.basin_plan.m_const)?;

    if let Some(e) = &setup.estimate {
        let t = check_estimate_transfer(oracle, &star, e, cfg.seed ^ 0x7a)?;
        // the planned δ, μ carry the safety factor; fresh samples must stay inside them
        let ok = t.mu_excess <= cfg.safety - 1.0 && t.delta_deficit <= 1.0 - 1.0 / cfg.safety;
        writeln!(out, "[estimate_transfer] {}", verdict(ok))?;
        writeln!(out, "  samples = {:?}", t.samples)?;
        writeln!(out, "  mu_excess = {:?}", t.mu_excess)?;
        writeln!(out, "  delta_deficit = {:?}", t.delta_deficit)?;
        if !ok {
            failed.push("estimate_transfer");
        }
    }

    let gamma = check_gamma_contraction(oracle, &lp, cfg.samples, cfg.seed)?;
    write!(out, "{gamma}")?;
    if !gamma.passed() {
        failed.push(gamma.name);
    }
    let omega = check_omega_decay(oracle, &lp, cfg.samples, n_max, cfg.seed.wrapping_add(1))?;
    write!(out, "{omega}")?;
    if !omega.passed() {
        failed.push(omega.name);
    }

    let run = run_global_with(oracle, &w0, &gcfg, setup)?;
    let bp = &run.setup.basin_plan;
    let descent = check_basin_descent(&run.basin, bp);
    write!(out, "{descent}")?;
    if !descent.passed() {
        failed.push("basin_descent");
    }
    let inner = check_inner_product_bound(bp, &run.basin);
    write!(out, "{inner}")?;
    if !inner.passed() {
        failed.push("inner_product");
    }
    if let Some(h) = &run.handoff {
        writeln!(out, "[handoff] {}", verdict(h.ok))?;
        writeln!(out, "  zeta_norm = {:?}", h.zeta_norm)?;
        writeln!(out, "  eta = {:?}", h.eta)?;
        if let Some(e) = h.err_w {
            writeln!(out, "  err_w = {e:?}")?;
        }
        writeln!(out, "  r_over_K = {:?}", h.radius)?;
        if !h.ok {
            failed.push("handoff");
        }
    }
    match &run.local {
        Some(local) => {
            let env = check_local_envelope(local, &lp);
            write!(out, "{env}")?;
            if !env.passed() {
                failed.push(env.name);
            }
            match fit_rate(local, cfg.tail) {
                Ok(fit) => {
                    let ok = fit.rate <= lp.l + RATE_SLACK;
                    writeln!(out, "[rate_fit] {}", verdict(ok))?;
                    write_fit(out, &fit)?;
                    writeln!(out, "  L = {:?}", lp.l)?;
                    if !ok {
                        failed.push("rate_fit");
                    }
                }
                Err(e) => writeln!(out, "[rate_fit] skipped ({e})")?,
            }
        }
        None => writeln!(out, "[local] not reached")?,
    }
    let termination = run.termination();
    writeln!(out, "[termination] {}", verdict(termination.is_success()))?;
    writeln!(out, "  termination = {termination}")?;
    if !termination.is_success() {
        failed.push("termination");
    }

    if failed.is_empty() {
        writeln!(out, "verify: pass")?;
        Ok(exit::OK)
    } else {
        writeln!(out, "verify: FAIL ({})", failed.join(", "))?;
        Ok(exit::AUDIT_VIOLATION)
    }
}
