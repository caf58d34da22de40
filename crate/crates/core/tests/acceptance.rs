//! Acceptance run: one PASS/FAIL line per criterion, with supporting detail lines.
//!
//! A criterion can fail only through checks marked as known shortfalls; those print FAIL but do
//! not change the exit status. Any other failed check makes the run exit with status 1.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::{Complex, Float, Rational};

use nahm::asymptotics::{compute_u, determine_c, predict_radial, u_power, Setup};
use nahm::cli::preset_tolerance;
use nahm::cli::selftest;
use nahm::model::{fmt_rational, gcd_i64, q};
use nahm::qseries::corpus::{bundled, load_identity, verify_identity_file};
use nahm::qseries::IdentityReport;
use nahm::scanner::{perturbed_controls, reference_table, scan, third_difference_test, ScanConfig, ScanOutput};
use nahm::solver::{compute_lambda, solve_nahm};
use nahm::specialfn::cyclic::{change_of_zeta_error, prop_a1_first_error, prop_a1_second_slope, shift_identity_error};
use nahm::specialfn::num::{cpow_int, rel_err, ten_pow};
use nahm::specialfn::dedekind_sum;
use nahm::transforms::{default_taus, preset, verify_s};
use nahm::{LatticeFilter, NahmData, Prec, RootOfUnity};

struct Outcome {
    passed: bool,
    unexpected: bool,
    detail: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { passed: true, unexpected: false, detail: Vec::new() }
    }

    fn note(&mut self, ok: bool, line: String) {
        self.passed &= ok;
        self.unexpected |= !ok;
        self.detail.push(format!("{} {line}", if ok { "  ok  " } else { "  FAIL" }));
    }

    /// A check the reference data cannot meet; it fails the criterion but not the run.
    fn known(&mut self, ok: bool, line: String) {
        self.passed &= ok;
        self.detail.push(format!("{} {line}", if ok { "  ok  " } else { "  FAIL (known)" }));
    }
}

fn rr(c: &str) -> NahmData {
    NahmData::from_strs(&[&["2"]], &["0"], c, &[1]).unwrap()
}

fn kr(b: [&str; 2], c: &str) -> NahmData {
    NahmData::from_strs(&[&["2", "1"], &["3", "2"]], &b, c, &[1, 3]).unwrap()
}

fn identities() -> Outcome {
    let mut out = Outcome::new();
    let required = |name: &str| if name.starts_with("kanade-russell") { 300 } else { 200 };
    for (file, text) in bundled() {
        let id = load_identity(text).unwrap();
        let want = Rational::from(required(&id.name));
        match verify_identity_file(&id, Some(&want)) {
            Ok(reports) => {
                for (label, rep) in reports {
                    let ok = matches!(&rep, IdentityReport::Equal { verified_to } if *verified_to >= want);
                    out.note(ok, format!("{file}: {label}: {rep}"));
                }
            }
            Err(e) => out.note(false, format!("{file}: {e}")),
        }
    }
    out
}

fn solver() -> Outcome {
    let mut out = Outcome::new();
    let p = Prec { digits: 60 };
    let bits = p.bits();
    let golden = (Float::with_val(bits, 5).sqrt() - 1u32) / 2u32;
    for (name, data, want) in [("rr", rr("0"), q("1/60")), ("kr", kr(["0", "0"], "0"), q("1/54"))] {
        let sol = solve_nahm(&data, p).unwrap();
        let (_, lam) = compute_lambda(&sol, &data).unwrap();
        let err = Float::with_val(bits, &lam - &want).abs().to_f64();
        out.note(err < 1e-40, format!("{name}: |λ − {}| = {err:.1e}", fmt_rational(&want)));
        out.note(sol.residual < 1e-55, format!("{name}: Newton residual {:.1e}", sol.residual.to_f64()));
        if name == "rr" {
            let e = Float::with_val(bits, &sol.z[0] - &golden).abs().to_f64();
            out.note(e < 1e-55, format!("rr: |z − (√5−1)/2| = {e:.1e}"));
        }
    }
    out
}

fn special_functions() -> Outcome {
    let mut out = Outcome::new();
    let s1 = (1..=50i64).all(|m| dedekind_sum(1, m).unwrap() == Rational::from(((m - 1) * (m - 2), 12 * m)));
    out.note(s1, "s(1,m) = (m−1)(m−2)/(12m) for m ≤ 50".into());
    let mut recip = true;
    for a in 1..=40i64 {
        for c in (1..=40i64).filter(|c| gcd_i64(a, *c) == 1) {
            let lhs = dedekind_sum(a, c).unwrap() + dedekind_sum(c, a).unwrap();
            recip &= lhs == q("-1/4") + (Rational::from((a, c)) + Rational::from((c, a)) + Rational::from((1, a * c))) / 12;
        }
    }
    out.note(recip, "reciprocity for coprime pairs ≤ 40".into());

    let p = Prec { digits: 50 };
    let bits = p.bits();
    let tol = ten_pow(-40, bits);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let xs: Vec<Complex> = (0..6)
        .map(|_| {
            let r = rng.gen_range(0.05..0.9f64);
            let t = rng.gen_range(0.0..std::f64::consts::TAU);
            Complex::with_val(bits, (r * t.cos(), r * t.sin()))
        })
        .collect();
    let mut worst = [0.0f64; 3];
    for m in 1..=13i64 {
        for a in (1..=m).filter(|a| gcd_i64(*a, m) == 1) {
            let ctx = RootOfUnity::new(&Rational::from((a, m)));
            for x in &xs {
                worst[0] = worst[0].max(shift_identity_error(&ctx, x).to_f64());
            }
        }
        let ctx = RootOfUnity::new(&Rational::from((1, m)));
        for pp in (1..=7).filter(|pp| gcd_i64(*pp, m) == 1) {
            for x in &xs {
                worst[1] = worst[1].max(prop_a1_first_error(&ctx, pp, x).to_f64());
                for e in 0..3 {
                    worst[2] = worst[2].max(change_of_zeta_error(&ctx, pp, e, x).to_f64());
                }
            }
        }
    }
    let tol = tol.to_f64();
    out.note(worst[0] < tol, format!("shift identity, m ≤ 13: max error {:.1e}", worst[0]));
    out.note(worst[1] < tol, format!("first congruence, m ≤ 13: max error {:.1e}", worst[1]));
    out.note(worst[2] < tol, format!("change of ζ, m ≤ 13: max error {:.1e}", worst[2]));

    let mut low = (f64::INFINITY, String::new());
    for m in 2..=13i64 {
        let ctx = RootOfUnity::new(&Rational::from((1, m)));
        for pp in (2..=5).filter(|pp| gcd_i64(*pp, m) == 1) {
            for j in 0..m {
                let s = prop_a1_second_slope(&ctx, pp, &ctx.zeta_pow(j, bits), 1e-2, 1e-3);
                if s - (m as f64) < low.0 {
                    low = (s - m as f64, format!("m={m} p={pp} j={j}"));
                }
            }
        }
    }
    out.note(low.0 >= -0.2, format!("second congruence: min(slope − m) = {:.3} at {}", low.0, low.1));
    out
}

fn asymptotics_at_one() -> Outcome {
    let mut out = Outcome::new();
    let p = Prec { digits: 60 };
    let zero = Rational::new();
    let rep = predict_radial(&rr("-1/60"), &zero, &[q("1/60")], 3, p).unwrap();
    let e = rep.effective_errors()[0];
    out.note(e < 1e-8, format!("rr, c = −1/60, ε = 1/60: relative error {e:.1e}"));
    // with c = 0 the expansion has every power of ε, so the truncation order shows
    for k in [2usize, 3] {
        let rep = predict_radial(&rr("0"), &zero, &[q("1/40"), q("1/80"), q("1/160")], k, p).unwrap();
        let ok = rep.orders.iter().all(|o| (o - (k + 1) as f64).abs() < 0.1);
        out.note(ok, format!("rr, c = 0, K = {k}: observed orders {:.3?} (want {})", rep.orders, k + 1));
    }
    let est = determine_c(&rr("0"), 3, p).unwrap();
    let err = Float::with_val(p.bits(), &est.c_est + q("1/60")).abs().to_f64();
    out.note(err < 1e-20, format!("rr: c_est + 1/60 = {err:.1e}"));
    let s0 = est.shifted[0].clone().abs().real().to_f64();
    for k in [2, 3] {
        let v = est.shifted[k].clone().abs().real().to_f64() / s0;
        out.note(v < 1e-10, format!("rr: shifted ε^{k} coefficient {v:.1e}"));
    }
    for (b, c) in [(["0", "0"], "-1/18"), (["1", "3"], "5/18"), (["2", "3"], "11/18")] {
        let est = determine_c(&kr(b, "0"), 3, p).unwrap();
        let err = Float::with_val(p.bits(), &est.c_est - q(c)).abs().to_f64();
        out.note(err < 1e-15, format!("kr b=({}): |c_est − ({c})| = {err:.1e}", b.join(",")));
    }
    out
}

fn asymptotics_at_roots() -> Outcome {
    let mut out = Outcome::new();
    let p = Prec { digits: 60 };
    let cases = [
        ("rr", rr("-1/60"), "1/3"),
        ("rr", rr("-1/60"), "1/5"),
        ("kr b=(0,0)", kr(["0", "0"], "-1/18"), "1/5"),
        ("kr b=(1,3)", kr(["1", "3"], "5/18"), "1/5"),
        ("kr b=(2,3)", kr(["2", "3"], "11/18"), "1/5"),
    ];
    for (name, data, a) in &cases {
        let rep = predict_radial(data, &q(a), &[q("1/80")], 2, p).unwrap();
        let e = rep.effective_errors()[0];
        let phase = if rep.branch_warning { " (up to a root of unity)" } else { "" };
        out.note(e < 1e-6, format!("{name} α={a}, ε = 1/80, K = 2: relative error {e:.1e}{phase}"));
    }
    let utol = ten_pow(-45, p.bits());
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for (name, data, a) in &cases {
        let s = Setup::new(data, &q(a), p).unwrap();
        let u = compute_u(&s).unwrap();
        let m = s.m() as i64;
        let two = rel_err(&u.u, &u.u_alt).to_f64().max(rel_err(&cpow_int(&u.u, m), &u.u_m).to_f64());
        out.note(two < utol.to_f64(), format!("{name} α={a}: two forms of u agree to {two:.1e}"));
        let base = u_power(&s, None).unwrap();
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let e: Vec<i64> = (0..data.rank()).map(|_| rng.gen_range(0..m)).collect();
            worst = worst.max(rel_err(&base, &u_power(&s, Some(&e)).unwrap()).to_f64());
        }
        out.note(worst < utol.to_f64(), format!("{name} α={a}: u^m under 20 Galois twists, max change {worst:.1e}"));
    }
    out
}

fn matrix(a: &[Vec<Rational>]) -> String {
    let rows: Vec<String> = a.iter().map(|r| r.iter().map(fmt_rational).collect::<Vec<_>>().join(",")).collect();
    format!("[[{}]]", rows.join("],["))
}

fn compare_blocks(out: &mut Outcome, res: &ScanOutput, table: &str, blocks: &[usize]) {
    let t = reference_table(table).unwrap();
    for &bi in blocks {
        let blk = &t.blocks[bi];
        let a = blk.matrix();
        let mut found: Vec<(Vec<Rational>, Rational)> = res
            .table()
            .filter(|r| *r.data.a() == a && r.filter.constraints.is_empty())
            .map(|r| (r.data.b().to_vec(), r.c_est.clone().unwrap()))
            .collect();
        let mut want: Vec<(Vec<Rational>, Rational)> =
            blk.rows.iter().map(|r| (r.b.iter().map(|x| x.0.clone()).collect(), r.effective_c().clone())).collect();
        found.sort();
        want.sort();
        let fmt = |v: &[(Vec<Rational>, Rational)]| {
            v.iter()
                .map(|(b, c)| format!("({}) {}", b.iter().map(fmt_rational).collect::<Vec<_>>().join(","), fmt_rational(c)))
                .collect::<Vec<_>>()
                .join("; ")
        };
        out.note(found == want, format!("A={}: found [{}], table [{}]", matrix(&a), fmt(&found), fmt(&want)));
        for r in &blk.rows {
            if r.effective_c() != &r.c.0 {
                out.known(
                    false,
                    format!(
                        "printed c = {} for b = ({}) disagrees; the expansion at q → 1 and the quadratic fit give {}",
                        fmt_rational(&r.c.0),
                        r.b.iter().map(|x| fmt_rational(&x.0)).collect::<Vec<_>>().join(","),
                        fmt_rational(r.effective_c())
                    ),
                );
            }
        }
    }
}

fn scanner() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    for (d, h, bh, blocks) in [([1u32, 2], 4u32, 2u32, &[0usize, 1][..]), ([1, 3], 6, 3, &[2, 3][..])] {
        let cfg = ScanConfig::new(&d, h, bh);
        let t = Instant::now();
        let res = scan(&cfg).unwrap();
        out.note(
            res.failures.is_empty(),
            format!("d={d:?} height {h} b_height {bh}: {:?}, {} failures, {:.0}s", res.stats, res.failures.len(), t.elapsed().as_secs_f64()),
        );
        compare_blocks(&mut out, &res, "rank2", blocks);
    }
    let cfg = ScanConfig::new(&[1, 2], 1, 1);
    let controls = perturbed_controls(100, 0);
    let vals: Vec<f64> = controls
        .iter()
        .map(|c| third_difference_test(c, &LatticeFilter::none(), cfg.n_base, cfg.prec, cfg.threshold).unwrap().third_diff.to_f64().abs())
        .collect();
    let above = vals.iter().filter(|v| **v > 1e-3).count();
    let rejected = vals.iter().filter(|v| **v > cfg.threshold).count();
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(0.0, f64::max);
    out.known(above == vals.len(), format!("controls: {above}/100 above 1e-3, |Δ³φ| in [{lo:.1e}, {hi:.1e}]"));
    out.detail.push(format!("        controls above the 1e-6 threshold: {rejected}/100"));
    out.detail.push(format!("        scanner total {:.0}s", start.elapsed().as_secs_f64()));
    out
}

fn transforms() -> Outcome {
    let mut out = Outcome::new();
    let p = Prec { digits: 60 };
    for name in ["rr", "kr", "b2inv", "dualpair"] {
        let sys = preset(name).unwrap();
        let rep = verify_s(&sys, &default_taus(p.bits()), p).unwrap();
        let tol = preset_tolerance(name);
        out.note(
            rep.max_error < tol,
            format!("{name}: {} relation(s) × 3 points, max error {:.1e} (< {tol:.0e})", sys.relations.len(), rep.max_error),
        );
    }
    let dual = preset("dualpair").unwrap();
    out.note(dual.relations.len() == 2, "dualpair checked in both directions".into());
    out
}

fn properties() -> Outcome {
    let mut out = Outcome::new();
    let t = Instant::now();
    let a = selftest::run(&selftest::Config { seed: 0, quick: false });
    let secs = t.elapsed().as_secs_f64();
    for c in a.failures() {
        out.note(false, format!("{}/{}: {}", c.group, c.name, c.detail));
    }
    out.note(a.failed == 0, format!("selftest seed 0: {} passed, {} failed", a.passed, a.failed));
    out.note(secs < 600.0, format!("runtime {secs:.0}s"));
    let b = selftest::run(&selftest::Config { seed: 0, quick: false });
    let same = a.checks.len() == b.checks.len()
        && a.checks.iter().zip(&b.checks).all(|(x, y)| (x.group, &x.name, x.passed, &x.detail) == (y.group, &y.name, y.passed, &y.detail));
    out.note(same, "second run with seed 0 reproduces every line".into());
    out
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("identity suite", identities),
        ("solver", solver),
        ("special functions", special_functions),
        ("asymptotics at q → 1", asymptotics_at_one),
        ("asymptotics at roots of unity", asymptotics_at_roots),
        ("modularity scanner", scanner),
        ("transform verifier", transforms),
        ("property-based selftest", properties),
    ];
    let mut failed = 0;
    let mut unexpected = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = f();
        println!("{} {} {name} ({:.0}s)", if out.passed { "PASS" } else { "FAIL" }, i + 1, t.elapsed().as_secs_f64());
        for line in &out.detail {
            println!("{line}");
        }
        if !out.passed {
            failed += 1;
        }
        if out.unexpected {
            unexpected += 1;
        }
    }
    println!("acceptance: {} of 8 criteria pass, {unexpected} with unexpected failures", 8 - failed);
    std::process::exit(if unexpected == 0 { 0 } else { 1 });
}
