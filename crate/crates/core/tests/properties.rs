use proptest::prelude::*;
use rug::{Complex, Float, Rational};

use nahm::model::{is_positive_definite, q, LatticeFilter, NahmData};
use nahm::qseries::{nahm_series, product_series, verify_identity, Factor};
use nahm::scanner::{quadratic_fit, third_difference_test, PhiSample};
use nahm::solver::{detect_rational, solve_nahm};
use nahm::specialfn::cyclic::shift_identity_error;
use nahm::specialfn::num::{cabs, ten_pow};
use nahm::specialfn::{bernoulli_poly, chi_factor, dedekind_sum, saw, Prec, RootOfUnity};

fn rat(n: i64, d: i64) -> Rational {
    Rational::from((n, d))
}

/// Rank-2 data with `A·D` symmetric positive definite, entries on a half-integer grid.
fn data2() -> impl Strategy<Value = NahmData> {
    (1i64..=8, -6i64..=6, 1i64..=8, 1u32..=3, -4i64..=4, -4i64..=4).prop_filter_map(
        "positive definite",
        |(a11, a12, a22, d2, b1, b2)| {
            // A·D = [[a11/2, a12/2], [a12/2, a22·d2/2]]
            let a = vec![vec![rat(a11, 2), rat(a12, 2 * d2 as i64)], vec![rat(a12, 2), rat(a22, 2)]];
            NahmData::new(a, vec![rat(b1, 2), rat(b2, 2)], Rational::new(), vec![1, d2]).ok()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quadratic_form_denominators(data in data2(), n1 in 0i64..30, n2 in 0i64..30) {
        let delta = data.strong_denominator() as i64;
        let diff = data.quadratic_form(&[n1, n2]).unwrap() - data.quadratic_form(&[0, 0]).unwrap();
        prop_assert_eq!((diff * (2 * delta * delta)).denom().to_u32(), Some(1));
        for i in 0..2 {
            let mut m = [n1, n2];
            m[i] += delta;
            let step = data.quadratic_form(&m).unwrap() - data.quadratic_form(&[n1, n2]).unwrap();
            prop_assert_eq!(step.denom().to_u32(), Some(1));
        }
    }

    #[test]
    fn dual_is_an_involution(data in data2(), c in -5i64..5) {
        let data = data.with_c(rat(c, 7));
        let du = data.dual_data().unwrap();
        prop_assert!(is_positive_definite(du.ad()));
        prop_assert_eq!(du.ad()[0][1].clone(), du.ad()[1][0].clone());
        prop_assert_eq!(du.dual_data().unwrap(), data);
    }

    #[test]
    fn bernoulli_reflection(r in 0u32..=12, n in -60i64..60, d in 1i64..40) {
        let x = rat(n, d);
        let lhs = bernoulli_poly(r, &(Rational::from(1) - &x));
        let rhs = bernoulli_poly(r, &x) * if r % 2 == 0 { 1 } else { -1 };
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn saw_is_odd_and_periodic(n in -200i64..200, d in 1i64..50, k in -5i64..5) {
        let x = rat(n, d);
        prop_assert_eq!(saw(&Rational::from(-&x)), -saw(&x));
        prop_assert_eq!(saw(&Rational::from(&x + k)), saw(&x));
    }

    #[test]
    fn dedekind_reciprocity(p in 1i64..300, qq in 1i64..300) {
        prop_assume!(nahm::model::gcd_i64(p, qq) == 1);
        let lhs = dedekind_sum(p, qq).unwrap() + dedekind_sum(qq, p).unwrap();
        let rhs = q("-1/4") + (rat(p, qq) + rat(qq, p) + rat(1, p * qq)) / 12;
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn chi_has_unit_modulus(d1 in 1u32..6, d2 in 1u32..6, a in 0i64..40, m in 1i64..40) {
        let c = chi_factor(&[d1, d2], &rat(a, m), 200);
        prop_assert!((cabs(&c) - 1u32).abs() < 1e-50);
    }

    #[test]
    fn cyclic_dilog_shift(m in 1i64..=13, re in -0.6f64..0.6, im in -0.6f64..0.6) {
        let x = Complex::with_val(200, (re, im));
        let ctx = RootOfUnity::new(&rat(1, m));
        prop_assert!(shift_identity_error(&ctx, &x) < 1e-50);
    }

    #[test]
    fn detect_rational_round_trip(n in -500i64..500, d in 1i64..500) {
        let x = rat(n, d);
        let f = Float::with_val(200, &x);
        prop_assert_eq!(detect_rational(&f, 1000, &ten_pow(-40, 200)), Some(x));
    }

    #[test]
    fn fit_of_any_quadratic(l in -3.0f64..3.0, c in -5.0f64..5.0, lam in 0.01f64..2.0) {
        let s: Vec<PhiSample> = (20..23u32)
            .map(|n| PhiSample { n, phi: Float::with_val(200, lam * (n * n) as f64) + Float::with_val(200, l) * n + c })
            .collect();
        let fit = quadratic_fit(&s, &Float::with_val(200, lam));
        prop_assert!(fit.residual < 1e-10);
        prop_assert!((fit.linear.to_f64() - l).abs() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn series_splits_over_residues(data in data2(), s in 2u64..=3) {
        let order = q("25");
        let full = nahm_series(&data, &LatticeFilter::none(), &order);
        let mut sum = nahm_series(&data, &LatticeFilter::congruence(1, 0, s), &order);
        for r in 1..s {
            sum = sum.add(&nahm_series(&data, &LatticeFilter::congruence(1, r, s), &order));
        }
        prop_assert!(verify_identity(&full, &sum).is_equal());
    }

    #[test]
    fn c_shifts_the_series(data in data2(), g in -9i64..9) {
        let g = rat(g, 5);
        let order = q("20");
        let a = nahm_series(&data.with_c(g.clone()), &LatticeFilter::none(), &order);
        let b = nahm_series(&data, &LatticeFilter::none(), &Rational::from(&order - &g)).shift(&g);
        prop_assert!(verify_identity(&a, &b).is_equal());
    }

    #[test]
    fn euler_product_inverts(m in 1u64..5, a in 1i64..5) {
        let order = q("40");
        let p = product_series(&[Factor::new(1, rat(a, 1), m, 1), Factor::new(1, rat(a, 1), m, -1)], &order).unwrap();
        prop_assert!(verify_identity(&p, &product_series(&[], &order).unwrap()).is_equal());
    }

    #[test]
    fn solutions_lie_in_the_cube(data in data2()) {
        let sol = solve_nahm(&data, Prec { digits: 30 }).unwrap();
        for z in &sol.z {
            prop_assert!(*z > 0u32 && *z < 1u32);
        }
        prop_assert!(sol.residual < 1e-25);
        prop_assert!(sol.big_lambda > 0u32);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn third_difference_ignores_c(data in data2(), g in -9i64..9) {
        let p = Prec { digits: 30 };
        let base = third_difference_test(&data, &LatticeFilter::none(), 20, p, 1.0).unwrap();
        let t = third_difference_test(&data.with_c(rat(g, 4)), &LatticeFilter::none(), 20, p, 1.0).unwrap();
        prop_assert!(Float::with_val(128, &t.third_diff - &base.third_diff).abs() < 1e-25);
    }
}
