use std::path::PathBuf;

use lipadam::objectives::NormKind;
use lipadam::planner::AlphaChoice;
use lipadam_cli::config::{RunConfig, Start};
use lipadam_cli::trace_csv::{read_rows, write_rows, TraceRow};
use proptest::prelude::*;

fn real() -> impl Strategy<Value = f64> {
    prop::num::f64::ANY.prop_filter("finite", |x| x.is_finite())
}

fn opt_real() -> impl Strategy<Value = Option<f64>> {
    prop::option::of(real())
}

fn word() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_]{0,11}"
}

fn norm() -> impl Strategy<Value = NormKind> {
    prop_oneof![
        Just(NormKind::Euclid),
        Just(NormKind::Linf),
        prop::collection::vec(1e-6..1e6_f64, 1..5).prop_map(NormKind::ScaledEuclid),
    ]
}

fn alpha() -> impl Strategy<Value = AlphaChoice> {
    prop_oneof![
        Just(AlphaChoice::LowerPlus),
        Just(AlphaChoice::Mid),
        Just(AlphaChoice::Upper),
        real().prop_map(AlphaChoice::Fraction),
    ]
}

fn start() -> impl Strategy<Value = Start> {
    prop_oneof![
        prop::sample::select(vec!["zero", "ones", "e1"]).prop_map(|p| Start::Preset(p.to_string())),
        prop::collection::vec(real(), 0..6).prop_map(Start::Explicit),
    ]
}

prop_compose! {
    fn plan_part()(
        delta in opt_real(), mu in opt_real(), sigma in opt_real(), m_const in opt_real(),
        a in opt_real(), eps in real(), beta2 in opt_real(), alpha in alpha(),
        radius in real(), r0 in real(), safety in real(),
    ) -> (Option<f64>, Option<f64>, Option<f64>, Option<f64>, Option<f64>, f64, Option<f64>, AlphaChoice, f64, f64, f64) {
        (delta, mu, sigma, m_const, a, eps, beta2, alpha, radius, r0, safety)
    }
}

prop_compose! {
    fn config()(
        objective in word(), dim in 1usize..1000, norm in norm(), profile in word(),
        w0 in start(), w_star in prop::option::of(prop::collection::vec(real(), 0..6)),
        plan in plan_part(),
        basin_beta1 in opt_real(), basin_eps in opt_real(), basin_beta2 in real(),
        alpha_scale in real(), m_scale in real(),
        samples in 0usize..1_000_000, seed in any::<u64>(), tol in real(),
        local_cap in any::<u64>(), basin_cap in prop::option::of(any::<u64>()), tail in real(),
        out in prop::option::of("[a-z0-9_/.]{1,16}".prop_filter("sentinel", |s| s != "none")),
    ) -> RunConfig {
        let (delta, mu, sigma, m_const, a, eps, beta2, alpha, radius, r0, safety) = plan;
        RunConfig {
            objective, dim, norm, profile, w0, w_star, delta, mu, sigma, m_const, a, eps, beta2,
            alpha, radius, r0, safety, basin_beta1, basin_eps, basin_beta2, alpha_scale, m_scale,
            samples, seed, tol, local_cap, basin_cap, tail, out: out.map(PathBuf::from),
        }
    }
}

fn row() -> impl Strategy<Value = TraceRow> {
    (
        any::<u64>(),
        real(),
        real(),
        real(),
        real(),
        opt_real(),
        opt_real(),
        real(),
    )
        .prop_map(
            |(n, c, zeta_norm, m_norm, v_norm, err_w, triple_err, alpha_n)| TraceRow {
                n,
                c,
                zeta_norm,
                m_norm,
                v_norm,
                err_w,
                triple_err,
                alpha_n,
            },
        )
}

fn same_bits(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits()
}

proptest! {
    #[test]
    fn config_round_trips(cfg in config()) {
        let text = cfg.to_string();
        let back = RunConfig::parse(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_string(), text);
    }

    #[test]
    fn csv_round_trips_bit_for_bit(rows in prop::collection::vec(row(), 0..40)) {
        let mut buf = Vec::new();
        write_rows(&mut buf, &rows).unwrap();
        let back = read_rows(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), rows.len());
        for (a, b) in rows.iter().zip(&back) {
            prop_assert_eq!(a.n, b.n);
            for (x, y) in [(a.c, b.c), (a.zeta_norm, b.zeta_norm), (a.m_norm, b.m_norm), (a.v_norm, b.v_norm), (a.alpha_n, b.alpha_n)] {
                prop_assert!(same_bits(x, y), "{} vs {}", x, y);
            }
            for (x, y) in [(a.err_w, b.err_w), (a.triple_err, b.triple_err)] {
                match (x, y) {
                    (None, None) => {}
                    (Some(x), Some(y)) => prop_assert!(same_bits(x, y), "{} vs {}", x, y),
                    _ => prop_assert!(false, "presence changed: {:?} vs {:?}", x, y),
                }
            }
        }
    }
}
