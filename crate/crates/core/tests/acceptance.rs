//! Acceptance suite: one pass/fail line per criterion.
//!
//! Run with `cargo test -p lipadam --test acceptance -- --nocapture` to see
//! the lines.

use std::time::{Duration, Instant};

use lipadam::driver::{run_global, run_local, GlobalConfig, LocalOptions, Termination};
use lipadam::harness::{
    check_basin_descent, check_gamma_contraction, check_local_envelope, check_omega_decay,
    doubled_alpha_control, fit_rate,
};
use lipadam::minnorm::{min_norm_point, HullSpec, DEFAULT_TOL};
use lipadam::objectives::{Objective, SqL2Scaled, SqLinf};
use lipadam::optimizer::{
    adam_step, gamma_map, generalized_step, moments_closed_form, omega_map, AdamParams,
};
use lipadam::planner::{compute_d, plan_local, LocalInputs, LocalPlan};
use lipadam::sampling::{seeded, uniform_offset};
use lipadam::vector::{AdamState, NonnegPoint, Point};
use rand::Rng;

type Outcome = Result<String, String>;

fn sqrt11() -> f64 {
    11.0_f64.sqrt()
}

fn worked_plan() -> LocalPlan {
    plan_local(&LocalInputs::new(0.4, 0.4, 1.0).with_a(1.0).with_beta2(0.1))
        .expect("worked example is feasible")
}

fn within(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    if elapsed <= limit {
        Ok(())
    } else {
        Err(format!("{what} took {elapsed:?}, limit {limit:?}"))
    }
}

fn criterion_1() -> Outcome {
    let (delta, mu, eps) = (0.4_f64, 0.4_f64, 1.0_f64);
    let alpha = 1.375;
    let beta1 = 1.0 - delta * eps.sqrt() / (2.0 * alpha * mu * mu);
    let d = compute_d(delta, mu, eps, alpha, beta1).map_err(|e| e.to_string())?;
    let err = (d - sqrt11() / 4.0).abs();
    if err <= 1e-12 {
        Ok(format!("D = {d}, |D − √11/4| = {err:e}"))
    } else {
        Err(format!("D = {d}, |D − √11/4| = {err:e} > 1e-12"))
    }
}

fn criterion_2() -> Outcome {
    let p = worked_plan();
    let l0_err = (p.l0 - (1.0 + 2.0 * sqrt11()) / 8.0).abs();
    let l_err = (p.l - (9.0 + 2.0 * sqrt11()) / 16.0).abs();
    let detail = format!(
        "L0 = {} (err {l0_err:e}), L = {} (err {l_err:e}), beta1 = {}, K = {}",
        p.l0, p.l, p.beta1, p.k
    );
    if l0_err <= 1e-12 && l_err <= 1e-12 && p.beta1 <= 0.2 && p.k < 3.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_3() -> Outcome {
    let params = AdamParams::new(1.0, 1.0 / 11.0, 0.1, Some(1.375)).map_err(|e| e.to_string())?;
    let oracles: [Box<dyn Objective>; 2] = [
        Box::new(SqL2Scaled::new(5).unwrap()),
        Box::new(SqLinf::new(2).unwrap()),
    ];
    for c in &oracles {
        let w_star = c.minimizer().unwrap();
        let start = AdamState::at_rest(w_star);
        let mut x = start.clone();
        for n in 0..1000 {
            let zeta = c.clarke_selection(&x.w).map_err(|e| e.to_string())?;
            x = adam_step(&x, &zeta, n, &params)
                .map_err(|e| e.to_string())?
                .state_after;
        }
        if x != start {
            return Err(format!("{}: state moved to {:?}", c.name(), x));
        }
    }
    Ok("sq_l2_scaled(5), sq_linf(2): 1000 steps, state bitwise unchanged".into())
}

fn criterion_4() -> Outcome {
    let c = SqL2Scaled::new(5).unwrap();
    let lp = worked_plan();
    let start = Instant::now();
    let mut rng = seeded(4);
    let mut worst_rate = 0.0_f64;
    let runs = 20;
    for i in 0..runs {
        // (0, 0, w₀) has triple error A‖w₀‖, kept inside r/K
        let w0 = uniform_offset(&mut rng, 5, lp.r / (lp.k * lp.a));
        let t = run_local(&c, &w0, &lp, &LocalOptions::default()).map_err(|e| e.to_string())?;
        if t.termination != Termination::ToleranceReached {
            return Err(format!("run {i}: terminated {}", t.termination));
        }
        let env = check_local_envelope(&t, &lp);
        if !env.passed() {
            return Err(format!("run {i}: envelope violated\n{env}"));
        }
        let fit = fit_rate(&t, 0.5).map_err(|e| e.to_string())?;
        worst_rate = worst_rate.max(fit.rate);
        if fit.rate > lp.l + 0.005 {
            return Err(format!(
                "run {i}: fitted rate {} > L + 0.005 = {}",
                fit.rate,
                lp.l + 0.005
            ));
        }
    }
    let elapsed = start.elapsed();
    within(elapsed / runs, Duration::from_secs(1), "one local run")?;
    Ok(format!(
        "{runs} runs inside r/K, envelope holds for n ≥ n0 = {}, worst fitted rate {worst_rate} ≤ L + 0.005 = {}",
        lp.n0,
        lp.l + 0.005
    ))
}

struct GlobalOutcome {
    run: lipadam::GlobalRun,
    elapsed: Duration,
}

fn linf_global() -> Result<GlobalOutcome, String> {
    let c = SqLinf::new(2).unwrap();
    let w0 = Point::new(vec![2.0, 2.0]).unwrap();
    let start = Instant::now();
    let run = run_global(&c, &w0, &GlobalConfig::default()).map_err(|e| e.to_string())?;
    Ok(GlobalOutcome {
        run,
        elapsed: start.elapsed(),
    })
}

fn criterion_5(g: &GlobalOutcome) -> Outcome {
    let run = &g.run;
    let bp = &run.setup.basin_plan;
    let lp = &run.setup.local_plan;
    if run.basin.termination != Termination::EtaReached {
        return Err(format!(
            "phase 1 ended {}: {:?}",
            run.basin.termination, run.basin.notes
        ));
    }
    let steps = run.basin.steps();
    let last = run.basin.last();
    if steps > run.setup.step_bound || last.zeta_norm > bp.eta {
        return Err(format!(
            "phase 1: {steps} steps (bound {}), ‖ζ‖ = {} vs η = {}",
            run.setup.step_bound, last.zeta_norm, bp.eta
        ));
    }
    let handoff = run.handoff.as_ref().ok_or("no handoff")?;
    if !handoff.ok {
        return Err(format!("handoff outside r/K: {handoff:?}"));
    }
    let local = run.local.as_ref().ok_or("phase 2 did not run")?;
    let w_norm = local.last().w.norm();
    if local.termination != Termination::ToleranceReached || w_norm > 1e-10 {
        return Err(format!(
            "phase 2 ended {} with ‖w‖ = {w_norm}",
            local.termination
        ));
    }
    let fit = fit_rate(local, 0.5).map_err(|e| e.to_string())?;
    if fit.rate > lp.l + 0.005 {
        return Err(format!(
            "fitted rate {} > L + 0.005 = {}",
            fit.rate,
            lp.l + 0.005
        ));
    }
    within(g.elapsed, Duration::from_secs(5), "global run")?;
    Ok(format!(
        "phase 1: {steps} steps ≤ ⌊C(w0)/s⌋ = {}, ‖ζ‖ = {} ≤ η = {}; phase 2: {} steps, ‖w‖ = {w_norm:e}, rate {} ≤ {}; {:?}",
        run.setup.step_bound,
        last.zeta_norm,
        bp.eta,
        local.steps(),
        fit.rate,
        lp.l + 0.005,
        g.elapsed
    ))
}

fn criterion_6(g: &GlobalOutcome) -> Outcome {
    let bp = &g.run.setup.basin_plan;
    let rep = check_basin_descent(&g.run.basin, bp);
    if rep.steps_checked == 0 {
        return Err("no basin steps to check".into());
    }
    if !rep.failures.is_empty() {
        return Err(format!("{rep}"));
    }
    Ok(format!(
        "{} steps, min decrease {} ≥ s = {}",
        rep.steps_checked, rep.min_decrease, rep.s
    ))
}

/// Least `‖λ₁a + λ₂b + λ₃c‖` over the simplex grid of step `h`.
fn grid_min_norm(verts: &[Point], h: f64) -> f64 {
    let steps = (1.0 / h).round() as usize;
    let mut best = f64::INFINITY;
    let at = |l: &[f64]| -> f64 {
        let mut acc = [0.0; 2];
        for (v, &c) in verts.iter().zip(l) {
            acc[0] += c * v[0];
            acc[1] += c * v[1];
        }
        (acc[0] * acc[0] + acc[1] * acc[1]).sqrt()
    };
    match verts.len() {
        1 => at(&[1.0]),
        2 => {
            for i in 0..=steps {
                let l = i as f64 * h;
                best = best.min(at(&[l, 1.0 - l]));
            }
            best
        }
        _ => {
            for i in 0..=steps {
                for j in 0..=(steps - i) {
                    let (a, b) = (i as f64 * h, j as f64 * h);
                    best = best.min(at(&[a, b, (1.0 - a - b).max(0.0)]));
                }
            }
            best
        }
    }
}

fn criterion_7() -> Outcome {
    let mut rng = seeded(7);

    let params = AdamParams::new(0.5, 0.9, 0.999, Some(0.01)).map_err(|e| e.to_string())?;
    let zs: Vec<Point> = (0..200)
        .map(|_| Point::new((0..4).map(|_| rng.random_range(-3.0..3.0)).collect()).unwrap())
        .collect();
    let mut x = AdamState::at_rest(Point::zeros(4));
    for z in &zs {
        x = generalized_step(&x, z, 0.0, &params).map_err(|e| e.to_string())?;
    }
    let (m, v) = moments_closed_form(&zs, &Point::zeros(4), &NonnegPoint::zeros(4), &params)
        .map_err(|e| e.to_string())?;
    let rel = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(p, q)| (p - q).abs() / q.abs().max(1e-300))
            .fold(0.0_f64, f64::max)
    };
    let moment_err = rel(m.as_slice(), x.m.as_slice()).max(rel(v.as_slice(), x.v.as_slice()));
    if moment_err > 1e-12 {
        return Err(format!(
            "closed-form moments off by {moment_err:e} relative"
        ));
    }

    // unit-scale vertices, so one grid step moves the hull point by about 1e-3
    let mut hull_err = 0.0_f64;
    for _ in 0..100 {
        let k = rng.random_range(1..=3);
        let verts: Vec<Point> = (0..k)
            .map(|_| {
                Point::new(vec![
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ])
                .unwrap()
            })
            .collect();
        let solved = min_norm_point(&HullSpec::new(verts.clone()).unwrap(), DEFAULT_TOL)
            .map_err(|e| e.to_string())?
            .point
            .norm();
        let grid = grid_min_norm(&verts, 1e-3);
        hull_err = hull_err.max((solved - grid).abs());
        if solved > grid + 1e-12 {
            return Err(format!("solver norm {solved} above grid {grid}"));
        }
    }
    if hull_err > 1e-3 {
        return Err(format!("min-norm vs grid differ by {hull_err}"));
    }

    let p = AdamParams::new(1e-3, 0.9, 0.99, Some(0.05)).map_err(|e| e.to_string())?;
    for i in 0..10_000u64 {
        let mut draw =
            |lo: f64, hi: f64| -> Vec<f64> { (0..3).map(|_| rng.random_range(lo..hi)).collect() };
        let x = AdamState::new(
            Point::new(draw(-4.0, 4.0)).unwrap(),
            NonnegPoint::new(draw(0.0, 4.0)).unwrap(),
            Point::new(draw(-4.0, 4.0)).unwrap(),
        )
        .unwrap();
        let z = Point::new(draw(-4.0, 4.0)).unwrap();
        let n = i % 300;
        let step = adam_step(&x, &z, n, &p).map_err(|e| e.to_string())?;
        let g = gamma_map(&x, &z, &p).map_err(|e| e.to_string())?;
        let o = omega_map(n, &x, &z, &p).map_err(|e| e.to_string())?;
        let sum = g.w.add(&o);
        let bitwise = step
            .state_after
            .w
            .as_slice()
            .iter()
            .zip(sum.as_slice())
            .all(|(a, b)| a.to_bits() == b.to_bits());
        if !bitwise || step.state_after.m != g.m || step.state_after.v != g.v {
            return Err(format!("Θ ≠ Γ + Ω at sample {i}"));
        }
    }
    Ok(format!(
        "moments rel err {moment_err:e}; min-norm vs grid max diff {hull_err:e}; Θ = Γ + Ω bitwise on 10^4 states"
    ))
}

fn criterion_8() -> Outcome {
    let c = SqL2Scaled::new(5).unwrap();
    let lp = worked_plan();
    let bad = doubled_alpha_control(&lp);
    let start = Instant::now();
    let gamma = check_gamma_contraction(&c, &lp, 10_000, 8).map_err(|e| e.to_string())?;
    let omega = check_omega_decay(&c, &lp, 10_000, 100, 9).map_err(|e| e.to_string())?;
    let gamma_bad = check_gamma_contraction(&c, &bad, 10_000, 8).map_err(|e| e.to_string())?;
    let omega_bad = check_omega_decay(&c, &bad, 10_000, 100, 9).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    if !gamma.passed() {
        return Err(format!("certified plan failed\n{gamma}"));
    }
    if !omega.passed() {
        return Err(format!("certified plan failed\n{omega}"));
    }
    if gamma_bad.passed() || gamma_bad.witness.is_none() {
        return Err("doubled α: Γ contraction violation not detected".into());
    }
    if omega_bad.passed() || omega_bad.witness.is_none() {
        return Err("doubled α: Ω decay violation not detected".into());
    }
    within(elapsed, Duration::from_secs(10), "audits")?;
    Ok(format!(
        "Γ max ratio {} ≤ L0 = {}, Ω max ratio {} ≤ K0 = {}; doubled α: {} and {} violations; {elapsed:?}",
        gamma.max_ratio, lp.l0, omega.max_ratio, lp.k0, gamma_bad.violations, omega_bad.violations
    ))
}

#[test]
fn acceptance() {
    let global = linf_global();
    let results: Vec<(u32, &str, Outcome)> = vec![
        (1, "D reproduces √11/4", criterion_1()),
        (2, "worked-example L0, L, β1, K", criterion_2()),
        (3, "fixed point under 1000 Adam steps", criterion_3()),
        (4, "local exponential convergence", criterion_4()),
        (
            5,
            "nonsmooth two-phase convergence",
            global.as_ref().map_err(Clone::clone).and_then(criterion_5),
        ),
        (
            6,
            "basin descent quantum",
            global.as_ref().map_err(Clone::clone).and_then(criterion_6),
        ),
        (7, "oracle equivalences", criterion_7()),
        (8, "inequality audits with negative controls", criterion_8()),
    ];
    let mut failed = Vec::new();
    for (id, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("criterion {id} [{name}]: PASS ({detail})"),
            Err(detail) => {
                println!("criterion {id} [{name}]: FAIL ({detail})");
                failed.push(*id);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
