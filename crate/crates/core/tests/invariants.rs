use bessel_fpt::fpt::{closed_form_cdf_d3, closed_form_d3};
use bessel_fpt::harness::{run_sweep, Grid, SweepSpec};
use bessel_fpt::{density, distribution, distribution_estimate, EvalOptions, FptQuery, Method};
use proptest::prelude::*;

fn q(nu: f64, x: f64, a: f64, t: f64) -> FptQuery {
    FptQuery::new(nu, x, a, t).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn inversion_scales_with_barrier(nu in 0.0f64..2.0, xs in 1.2f64..6.0, ts in 0.2f64..50.0, a in 0.2f64..5.0) {
        let opts = EvalOptions::with_method(Method::InversionBromwich);
        let full = density(&q(nu, xs * a, a, ts * a * a), &opts).unwrap().value;
        let unit = density(&q(nu, xs, 1.0, ts), &opts).unwrap().value;
        prop_assert!(rel(full, unit / (a * a)) < 1e-10, "{full} vs {}", unit / (a * a));
    }

    #[test]
    fn inversion_matches_half_order_closed_form(x in 1.1f64..8.0, t in 0.1f64..100.0) {
        let qq = q(0.5, x, 1.0, t);
        let v = density(&qq, &EvalOptions::with_method(Method::InversionBromwich)).unwrap().value;
        let want = closed_form_d3(&qq);
        prop_assert!(rel(v, want) < 1e-8 || (v - want).abs() < 1e-300, "{v} vs {want}");
    }

    #[test]
    fn distribution_is_a_cdf(nu in 0.0f64..2.0, x in 1.1f64..6.0, t in 0.1f64..100.0) {
        let p1 = distribution(&q(nu, x, 1.0, t)).unwrap();
        let p2 = distribution(&q(nu, x, 1.0, 2.0 * t)).unwrap();
        prop_assert!((0.0..=1.0).contains(&p1));
        prop_assert!(p2 >= p1 - 1e-12, "{p1} then {p2}");
        prop_assert!(p2 <= x.powf(-2.0 * nu) + 1e-9);
    }

    #[test]
    fn half_order_distribution_matches_closed_form(x in 1.1f64..8.0, t in 0.1f64..100.0) {
        let qq = q(0.5, x, 1.0, t);
        let opts = EvalOptions::with_method(Method::InversionBromwich);
        let v = distribution_estimate(&qq, &opts).unwrap().value;
        prop_assert!((v - closed_form_cdf_d3(&qq)).abs() < 1e-8);
    }
}

#[test]
fn auto_method_reports_provenance() {
    for (nu, x, t) in [
        (0.5, 2.0, 1.0),
        (0.0, 2.0, 1e6),
        (1.0, 15.0, 1.0),
        (0.3, 3.0, 2.0),
    ] {
        let e = density(&q(nu, x, 1.0, t), &EvalOptions::default()).unwrap();
        assert!(e.value > 0.0 && e.value.is_finite(), "{nu} {x} {t}: {e:?}");
        assert_ne!(e.method, Method::Auto);
    }
}

#[test]
fn sweep_preserves_grid_order() {
    let spec = SweepSpec {
        orders: vec![0.0, 1.0],
        x_grid: Grid::Explicit(vec![1.5, 3.0]),
        t_grid: Grid::Log {
            lo: 1.0,
            hi: 100.0,
            n: 3,
        },
        methods: vec![Method::Thm3],
        ..Default::default()
    };
    let rows = run_sweep(&spec).unwrap().rows;
    let got: Vec<(f64, f64, f64)> = rows.iter().map(|r| (r.nu, r.x, r.t)).collect();
    assert_eq!(got, spec.points().unwrap());
}
