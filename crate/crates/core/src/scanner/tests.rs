use super::*;
use crate::model::q;
use crate::solver::{compute_lambda, solve_nahm};

const P: Prec = Prec { digits: 60 };

fn rr() -> NahmData {
    NahmData::from_strs(&[&["2"]], &["0"], "0", &[1]).unwrap()
}

fn kr(b: [&str; 2]) -> NahmData {
    NahmData::from_strs(&[&["2", "1"], &["3", "2"]], &b, "0", &[1, 3]).unwrap()
}

fn none() -> LatticeFilter {
    LatticeFilter::none()
}

/// `Δ³(1/N)` and the three-point minimax deviation of `1/N` at `N = 20, 21, 22`.
fn inv_n_differences() -> (f64, f64) {
    let g = |n: f64| 1.0 / n;
    (g(23.0) - 3.0 * g(22.0) + 3.0 * g(21.0) - g(20.0), (g(20.0) - 2.0 * g(21.0) + g(22.0)) / 4.0)
}

/// `ε²` coefficient of `log S` after the `c`-shift.
fn t2(data: &NahmData) -> f64 {
    let est = determine_c(&data.with_c(Rational::new()), 3, Prec { digits: 30 }).unwrap();
    est.shifted[2].real().to_f64() / est.shifted[0].real().to_f64()
}

#[test]
fn rogers_ramanujan_is_quadratic() {
    let t = third_difference_test(&rr(), &none(), 20, P, DEFAULT_THRESHOLD).unwrap();
    assert!(t.candidate);
    assert!(t.third_diff.clone().abs() < 1e-40, "{}", t.third_diff);
}

#[test]
fn kanade_russell_rows_are_candidates() {
    for b in [["0", "0"], ["1", "3"], ["2", "3"]] {
        let t = third_difference_test(&kr(b), &none(), 20, P, DEFAULT_THRESHOLD).unwrap();
        assert!(t.candidate && t.third_diff.clone().abs() < 1e-30, "{b:?}: {}", t.third_diff);
    }
}

/// Away from modularity `Δ³φ ≈ t₂·Δ³(1/N)` with `t₂` from the expansion at `q → 1`.
#[test]
fn off_grid_difference_follows_expansion() {
    let data = kr(["1", "2"]);
    let t = third_difference_test(&data, &none(), 20, P, DEFAULT_THRESHOLD).unwrap();
    let want = t2(&data) * inv_n_differences().0;
    let got = t.third_diff.to_f64();
    assert!((got / want - 1.0).abs() < 0.1, "{got:e} vs {want:e}");
    assert!(!third_difference_test(&data, &none(), 20, P, 1e-12).unwrap().candidate);
}

#[test]
fn double_precision_agrees() {
    for data in [rr(), kr(["1", "2"]), kr(["0", "0"])] {
        let full = third_difference_test(&data, &none(), 20, Prec { digits: 30 }, 1.0).unwrap();
        let f = third_difference_f64(&data, &none(), 20).unwrap();
        assert!((f - full.third_diff.to_f64()).abs() < 1e-9, "{data}: {f:e}");
    }
}

#[test]
fn c_only_shifts_phi() {
    let data = kr(["1", "2"]);
    let base = third_difference_test(&data, &none(), 20, P, 1.0).unwrap();
    for g in ["7/3", "-5/18"] {
        let t = third_difference_test(&data.with_c(q(g)), &none(), 20, P, 1.0).unwrap();
        assert!(Float::with_val(200, &t.third_diff - &base.third_diff).abs() < 1e-50);
        let shift = Float::with_val(200, &base.samples[0].phi - &t.samples[0].phi);
        assert!((shift - q(g)).abs() < 1e-50);
    }
}

/// Even and odd parts of a sum add up to the full sum at every sample.
#[test]
fn filtered_parts_add_up() {
    let data = NahmData::from_strs(&[&["1", "1/2"], &["1", "1"]], &["0", "0"], "0", &[1, 2]).unwrap();
    for n in [20u32, 23] {
        let val = |f: &LatticeFilter| {
            let s = phi_sample(&data, f, n, P).unwrap();
            (s.phi / n).exp()
        };
        let parts = val(&LatticeFilter::congruence(0, 0, 2)) + val(&LatticeFilter::congruence(0, 1, 2));
        let full = val(&none());
        assert!(((parts - &full) / full).abs() < 1e-55);
    }
}

fn samples(f: impl Fn(f64) -> f64) -> Vec<PhiSample> {
    (20..23u32).map(|n| PhiSample { n, phi: Float::with_val(200, f(n as f64)) }).collect()
}

#[test]
fn fit_of_exact_quadratic() {
    let lam = Float::with_val(200, 0.3);
    let s = samples(|n| 0.3 * n * n - 1.5 * n + 0.25);
    let fit = quadratic_fit(&s, &lam);
    assert!(fit.residual < 1e-12);
    assert!((fit.linear.to_f64() + 1.5).abs() < 1e-10);
    assert!((fit.constant.to_f64() - 0.25).abs() < 1e-9);
}

/// The constant of the fit is `c_true − c`, so it vanishes on a correct row.
#[test]
fn fit_recovers_c() {
    for (data, c) in [(rr(), "-1/60"), (kr(["1", "3"]), "5/18")] {
        let t = third_difference_test(&data, &none(), 20, P, 1.0).unwrap();
        let sol = solve_nahm(&data, P).unwrap();
        let (big, _) = compute_lambda(&sol, &data).unwrap();
        let fit = quadratic_fit(&t.samples[..3], &big);
        assert!(fit.residual < 1e-30, "{}", fit.residual);
        assert!((fit.constant - q(c)).abs() < 1e-30);
    }
}

#[test]
fn fit_residual_of_non_modular_data() {
    let data = kr(["1", "2"]);
    let t = third_difference_test(&data, &none(), 20, P, 1.0).unwrap();
    let sol = solve_nahm(&data, P).unwrap();
    let (big, _) = compute_lambda(&sol, &data).unwrap();
    let fit = quadratic_fit(&t.samples[..3], &big);
    let want = (t2(&data) * inv_n_differences().1).abs();
    assert!((fit.residual.to_f64() / want - 1.0).abs() < 0.1, "{} vs {want:e}", fit.residual);
}

#[test]
fn grid_values_small() {
    let v: Vec<String> = grid_values(2).iter().map(fmt_rational).collect();
    assert_eq!(v, ["-2", "-1", "-1/2", "0", "1/2", "1", "2"]);
}

/// Symmetric case against brute force over the grid, up to swapping the coordinates.
#[test]
fn enumeration_matches_brute_force() {
    let g = grid_values(2);
    let mut want = BTreeSet::new();
    for a in g.iter().filter(|x| **x > 0) {
        for b in &g {
            for d in g.iter().filter(|x| **x > 0) {
                let det = Rational::from(a * d) - Rational::from(b * b);
                if det > 0 {
                    let key = if a <= d { (a.clone(), b.clone(), d.clone()) } else { (d.clone(), b.clone(), a.clone()) };
                    want.insert(key);
                }
            }
        }
    }
    let got: BTreeSet<_> = enumerate_candidates(2, &[1, 1], 2)
        .unwrap()
        .iter()
        .map(|x| {
            let m = x.a();
            let (a, d) = (m[0][0].clone(), m[1][1].clone());
            if a <= d { (a, m[0][1].clone(), d) } else { (d, m[0][1].clone(), a) }
        })
        .collect();
    assert_eq!(got, want);
    assert!(enumerate_candidates(2, &[1, 1], 0).unwrap().is_empty());
}

fn contains(list: &[NahmData], a: &[&[&str]]) -> bool {
    let want: Matrix = a.iter().map(|r| r.iter().map(|x| q(x)).collect()).collect();
    list.iter().any(|x| *x.a() == want)
}

#[test]
fn enumeration_contains_known_matrices() {
    let l = enumerate_candidates(2, &[1, 2], 4).unwrap();
    assert!(contains(&l, &[&["2", "1"], &["2", "2"]]));
    assert!(contains(&l, &[&["1", "1/2"], &["1", "1"]]));
    for x in &l {
        assert!(is_positive_definite(x.ad()));
    }
    let l = enumerate_candidates(2, &[1, 3], 6).unwrap();
    assert!(contains(&l, &[&["2", "1"], &["3", "2"]]));
    assert!(contains(&l, &[&["4", "2"], &["6", "4"]]));
}

#[test]
fn permutations_deduplicated_only_for_equal_d() {
    let l = enumerate_candidates(2, &[1, 1], 2).unwrap();
    assert!(contains(&l, &[&["1", "1/2"], &["1/2", "2"]]) ^ contains(&l, &[&["2", "1/2"], &["1/2", "1"]]));
    let l = enumerate_candidates(2, &[1, 2], 2).unwrap();
    assert!(contains(&l, &[&["1", "1/2"], &["1", "2"]]) && contains(&l, &[&["2", "1/2"], &["1", "1"]]));
    let l = enumerate_candidates(3, &[2, 2, 1], 1).unwrap();
    let keys: BTreeSet<Vec<Rational>> = l.iter().map(|x| flat(x.a(), &[0, 1, 2])).collect();
    assert_eq!(keys.len(), l.len());
    for x in &l {
        assert!(!keys.contains(&flat(x.a(), &[1, 0, 2])) || flat(x.a(), &[1, 0, 2]) == flat(x.a(), &[0, 1, 2]));
    }
}

#[test]
fn b_grid_denominators() {
    let g = b_grid(&[1, 2], 1);
    assert_eq!(g.len(), 25);
    let g = b_grid(&[1, 3], 1);
    // 0, ±1, ±1/2, ±1/3, ±1/6
    assert_eq!(g.len(), 81);
    assert!(g.iter().flatten().all(|x| 6 % x.denom().to_u32().unwrap() == 0));
}

#[test]
fn small_scan_finds_known_blocks() {
    let mut cfg = ScanConfig::new(&[1, 2], 2, 2);
    cfg.prec = Prec { digits: 40 };
    let out = scan(&cfg).unwrap();
    assert!(out.failures.is_empty(), "{:?}", out.failures);
    let table = reference_table("rank2").unwrap();
    for bi in [0usize, 1] {
        let blk = &table.blocks[bi];
        let found: BTreeSet<(String, String)> = out
            .table()
            .filter(|r| *r.data.a() == blk.matrix())
            .map(|r| (fmt_vec(r.data.b()), fmt_rational(r.c_est.as_ref().unwrap())))
            .collect();
        let want: BTreeSet<(String, String)> = blk
            .rows
            .iter()
            .map(|r| (fmt_vec(&r.b.iter().map(|x| x.0.clone()).collect::<Vec<_>>()), fmt_rational(r.effective_c())))
            .collect();
        assert_eq!(found, want);
    }
    for r in out.candidates() {
        assert!(r.third_diff.abs() < cfg.threshold && r.lambda_rational.is_some());
    }
    let mut buf = Vec::new();
    write_csv(&out, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("A,b,c_est,d,third_diff,lambda,constraint\n"));
    assert!(text.contains("2 1; 2 2,1 2,7/24,1 2,"));
    assert_eq!(text.lines().count(), out.stats.confirmed + 1);
}

#[test]
fn empty_scan() {
    let out = scan(&ScanConfig::new(&[1, 2], 0, 1)).unwrap();
    assert!(out.records.is_empty() && out.stats.matrices == 0);
}

#[test]
fn controls_are_deterministic_and_off_grid() {
    let a = perturbed_controls(20, 3);
    let b = perturbed_controls(20, 3);
    assert_eq!(a, b);
    for x in &a {
        assert!(x.b().iter().any(|v| v.denom().is_divisible_u(5)));
    }
}

#[test]
fn reference_tables_parse() {
    let mut rows = 0;
    for name in REFERENCE_TABLES {
        let t = reference_table(name).unwrap();
        for blk in &t.blocks {
            for i in 0..blk.rows.len() {
                blk.data(i).unwrap();
                rows += 1;
            }
        }
    }
    assert_eq!(rows, 174);
}
