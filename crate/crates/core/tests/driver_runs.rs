use lipadam::driver::{
    run_basin, run_global, BasinOptions, GlobalConfig, LocalOptions, Termination,
};
use lipadam::harness::{check_inner_product_bound, check_local_envelope, fit_rate};
use lipadam::objectives::{estimate_growth, Objective, SqL2Scaled, SqLinf};
use lipadam::planner::{
    lemma_inner_product_bound, plan_basin, plan_local, BasinInputs, LocalInputs,
};
use lipadam::{run_local, Point};

fn p(c: &[f64]) -> Point {
    Point::new(c.to_vec()).unwrap()
}

#[test]
fn linf_local_run_with_estimated_growth() {
    let c = SqLinf::new(2).unwrap();
    let star = c.minimizer().unwrap();
    let e = estimate_growth(&c, &star, 1.0, 10_000, 11).unwrap();
    let lp = plan_local(&LocalInputs::new(e.delta_hat / 1.25, e.mu_hat * 1.25, 1.0)).unwrap();
    let t = run_local(&c, &p(&[0.01, 0.01]), &lp, &LocalOptions::default()).unwrap();
    assert_eq!(
        t.termination,
        Termination::ToleranceReached,
        "{:?}",
        t.notes
    );
    assert!(check_local_envelope(&t, &lp).passed());
    let fit = fit_rate(&t, 0.5).unwrap();
    assert!(fit.rate <= lp.l, "rate {} vs L {}", fit.rate, lp.l);
}

#[test]
fn first_basin_step_meets_the_inner_product_bound_in_closed_form() {
    let c = SqL2Scaled::new(1).unwrap();
    let w0 = p(&[1.5]);
    let g = c.clarke_selection(&w0).unwrap()[0];
    let bp = plan_basin(&BasinInputs::new(2.0 * g.abs(), 0.1, 1.0)).unwrap();
    let t = run_basin(
        &c,
        &w0,
        &bp,
        &BasinOptions {
            step_cap: Some(1),
            w_star: c.minimizer(),
        },
    )
    .unwrap();
    let first = &t.records[0];
    let closed = (1.0 - bp.beta1s) * g * g / ((1.0 - bp.beta2s) * g * g + bp.epss).sqrt();
    assert!((first.inner - closed).abs() <= 1e-15 * closed);
    let bound = lemma_inner_product_bound(g.abs(), g.abs(), bp.beta1s, bp.beta2s, bp.epss, 0);
    assert!(closed >= bound - 1e-12, "{closed} < {bound}");
    assert!(check_inner_product_bound(&bp, &t).passed());
}

#[test]
fn zero_selection_gives_a_zero_bound() {
    assert_eq!(lemma_inner_product_bound(0.0, 1.0, 0.01, 0.9, 4.0, 7), 0.0);
}

#[test]
fn linf_basin_trace_passes_the_inner_product_audit() {
    let c = SqLinf::new(2).unwrap();
    let run = run_global(&c, &p(&[2.0, 2.0]), &GlobalConfig::default()).unwrap();
    assert_eq!(run.basin.termination, Termination::EtaReached);
    let rep = check_inner_product_bound(&run.setup.basin_plan, &run.basin);
    assert!(rep.passed(), "{rep}");
    assert_eq!(rep.steps_checked as u64, run.basin.steps());
}
