//! The worked examples of every module and its invariants, as one seeded suite.

use std::error::Error;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::{Complex, Float, Rational};
use serde::Serialize;

use crate::asymptotics::{
    c_of_q, compute_u, gaussian_moment, i_series, prefactor, psi_series, s_series, summand, u_power, GaussianMoments,
    Setup,
};
use crate::model::{fmt_rational, gcd_i64, is_positive_definite, q, LatticeFilter, ModelError, NahmData};
use crate::qseries::corpus::bundled;
use crate::qseries::{
    eval_numeric, load_identity, nahm_series, product_series, verify_identity, verify_identity_file, Factor, QPoint,
    QSeries,
};
use crate::scanner::{
    enumerate_candidates, quadratic_fit, reference_table, third_difference_test, PhiSample, DEFAULT_N_BASE,
    DEFAULT_THRESHOLD, REFERENCE_TABLES,
};
use crate::solver::{compute_lambda, detect_rational, solve_nahm, uniqueness_probe};
use crate::specialfn::cyclic::{
    change_of_zeta_error, prop_a1_first_error, prop_a1_second_slope, shift_identity_error,
};
use crate::specialfn::num::{cabs, cone, cpow_int, digits_to_bits, float, fpow_rat, pi, rel_err, ten_pow};
use crate::specialfn::{
    bernoulli_poly, chi_factor, cyclic_dilog, dedekind_sum, dilog, gauss_sum, gauss_sum_with_delta,
    polylog_nonpositive, qpochhammer, rogers_l, saw, PochLen, Prec, RootOfUnity,
};
use crate::transforms::{preset, verify_s, verify_t, PRESETS};

#[derive(Debug, Clone)]
pub struct Config {
    pub seed: u64,
    /// Worked examples only.
    pub quick: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub group: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    /// Wall time, kept out of the printed report.
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: u32,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub passed: usize,
    pub failed: usize,
}

impl Report {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

type Res = Result<(bool, String), Box<dyn Error>>;

fn ok(passed: bool, detail: impl Into<String>) -> Res {
    Ok((passed, detail.into()))
}

struct Log {
    group: &'static str,
    checks: Vec<Check>,
}

impl Log {
    fn check(&mut self, name: &str, f: impl FnOnce() -> Res) {
        let start = Instant::now();
        let (passed, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        let seconds = start.elapsed().as_secs_f64();
        self.checks.push(Check { group: self.group, name: name.to_string(), passed, detail, seconds });
    }
}

pub fn run(cfg: &Config) -> Report {
    let mut log = Log { group: "examples", checks: Vec::new() };
    examples(&mut log);
    if !cfg.quick {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        log.group = "model";
        model_invariants(&mut log, &mut rng);
        log.group = "specialfn";
        specialfn_invariants(&mut log, &mut rng);
        log.group = "qseries";
        qseries_invariants(&mut log);
        log.group = "solver";
        solver_invariants(&mut log, cfg.seed);
        log.group = "asymptotics";
        asymptotics_invariants(&mut log, &mut rng);
        log.group = "scanner";
        scanner_invariants(&mut log);
        log.group = "transforms";
        transforms_invariants(&mut log);
        log.group = "cli";
        cli_invariants(&mut log);
    }
    let passed = log.checks.iter().filter(|c| c.passed).count();
    let failed = log.checks.len() - passed;
    Report { schema: 1, seed: cfg.seed, checks: log.checks, passed, failed }
}

fn rr() -> NahmData {
    NahmData::from_strs(&[&["2"]], &["0"], "0", &[1]).expect("valid")
}

fn kr(b: [&str; 2]) -> NahmData {
    NahmData::from_strs(&[&["2", "1"], &["3", "2"]], &b, "0", &[1, 3]).expect("valid")
}

fn cx(bits: u32, re: f64, im: f64) -> Complex {
    Complex::with_val(bits, (re, im))
}

/// Uniform in the disk `|x| ≤ r`.
fn random_point(rng: &mut ChaCha8Rng, r: f64, bits: u32) -> Complex {
    let rad = r * rng.gen::<f64>().sqrt();
    let th = rng.gen_range(0.0..std::f64::consts::TAU);
    cx(bits, rad * th.cos(), rad * th.sin())
}

fn table_rows() -> Result<Vec<(String, NahmData)>, ModelError> {
    let mut out = Vec::new();
    for name in REFERENCE_TABLES {
        let t = reference_table(name)?;
        for blk in &t.blocks {
            for i in 0..blk.rows.len() {
                out.push((name.to_string(), blk.data(i)?));
            }
        }
    }
    Ok(out)
}

/// `Σ c_e q^e` at a real point in working precision.
fn series_at(s: &QSeries, x: &Float) -> Float {
    let bits = x.prec();
    let mut acc = Float::with_val(bits, 0);
    for (e, c) in s.terms() {
        acc += float(bits, c) * fpow_rat(x, &e);
    }
    acc
}

fn examples(log: &mut Log) {
    let b = digits_to_bits(40);
    log.check("validate", || {
        let good = NahmData::from_strs(&[&["1"]], &["0"], "0", &[1]).is_ok();
        let bad = NahmData::from_strs(&[&["0"]], &["0"], "0", &[1]);
        ok(good && matches!(bad, Err(ModelError::NotPositiveDefinite(..))), "[[1]] valid, [[0]] not positive definite")
    });
    log.check("quadratic_form", || {
        let v = rr().quadratic_form(&[3])?;
        let g = rr().with_c(q("7/5"));
        ok(v == 9 && g.quadratic_form(&[0])? == q("7/5"), format!("Q(3) = {}", fmt_rational(&v)))
    });
    log.check("strong_denominator", || ok(rr().strong_denominator() == 1, "[[2]] gives 1"));
    log.check("dual_data", || {
        let g = rr().with_c(q("2/7"));
        let du = g.dual_data()?;
        let want_c = q("-1/24") - q("2/7");
        ok(du.a()[0][0] == q("1/2") && *du.c() == want_c && du.dual_data()? == g, "A* = [[1/2]], c* = -1/24 - c")
    });
    log.check("bernoulli", || ok(bernoulli_poly(0, &q("3/7")) == 1 && bernoulli_poly(1, &q("1/2")) == 0, "B0 = 1, B1(1/2) = 0"));
    log.check("polylog", || {
        let l0 = polylog_nonpositive(0, &cx(b, 0.5, 0.0))?;
        let l2 = polylog_nonpositive(-2, &cx(b, -1.0, 0.0))?;
        let d0 = dilog(&cx(b, 0.0, 0.0))?;
        ok(cabs(&(l0 - 1u32)) < 1e-35 && cabs(&l2) < 1e-35 && cabs(&d0) < 1e-35, "Li0(1/2) = 1, Li-2(-1) = 0, Li2(0) = 0")
    });
    log.check("rogers_l", || {
        let z = Float::with_val(b, 1e-30);
        let p = pi(b);
        let err = (rogers_l(&z)? + Float::with_val(b, &p * &p) / 6u32).abs();
        ok(err < 1e-25, format!("|L(1e-30) + π²/6| = {:.1e}", err.to_f64()))
    });
    log.check("saw", || ok(saw(&q("3/2")) == 0 && saw(&q("2")) == 0, "((3/2)) = ((2)) = 0"));
    log.check("dedekind_sum", || ok((1..10).all(|p| dedekind_sum(p, 1).map(|s| s == 0).unwrap_or(false)), "s(p,1) = 0"));
    log.check("chi_factor", || {
        let one = chi_factor(&[1, 3], &Rational::new(), b);
        let unit = chi_factor(&[2, 5], &q("3/7"), b);
        ok(cabs(&(one - 1u32)) < 1e-35 && (cabs(&unit) - 1u32).abs() < 1e-35, "χ(d,0) = 1, |χ| = 1")
    });
    log.check("gauss_sum", || {
        let mut ok_all = true;
        for a in ["1/3", "2/5", "1/7"] {
            ok_all &= cabs(&(gauss_sum(&rr(), &q(a), b)? - 1u32)) < 1e-35;
        }
        let k = kr(["1", "3"]);
        let delta = k.strong_denominator();
        let g1 = gauss_sum_with_delta(&k, &q("1/5"), delta, b)?;
        let g2 = gauss_sum_with_delta(&k, &q("1/5"), 2 * delta, b)?;
        ok(ok_all && rel_err(&g1, &g2) < 1e-35, "G = 1 for integral Q; δ and 2δ agree")
    });
    log.check("cyclic_dilog", || {
        let x = cx(b, 0.4, -0.3);
        let d1 = cyclic_dilog(&RootOfUnity::trivial(), &x);
        let d2 = cyclic_dilog(&RootOfUnity::new(&q("1/2")), &x);
        let d0 = cyclic_dilog(&RootOfUnity::new(&q("2/7")), &cx(b, 0.0, 0.0));
        ok(d1 == cone(b) && rel_err(&d2, &(cone(b) + &x)) < 1e-35 && rel_err(&d0, &cone(b)) < 1e-35, "m=1: 1, m=2: 1+x, D(0) = 1")
    });
    log.check("qpochhammer", || {
        let x = cx(b, 0.3, 0.1);
        let qq = cx(b, -0.2, 0.5);
        let p0 = qpochhammer(&x, &qq, PochLen::Finite(0))?;
        let p2 = qpochhammer(&x, &qq, PochLen::Finite(2))?;
        let want = (cone(b) - x.clone()) * (cone(b) - Complex::with_val(b, &qq * &x));
        ok(p0 == cone(b) && rel_err(&p2, &want) < 1e-35, "(x;q)_0 = 1, (x;q)_2 = (1-x)(1-qx)")
    });
    log.check("nahm_series c shift", || {
        let order = q("30");
        let g = q("5/7");
        let a = nahm_series(&kr(["1", "3"]).with_c(g.clone()), &LatticeFilter::none(), &order);
        let z = nahm_series(&kr(["1", "3"]), &LatticeFilter::none(), &(order.clone() - &g)).shift(&g);
        ok(verify_identity(&a, &z).is_equal(), "f with c = γ is q^γ f with c = 0")
    });
    log.check("empty product", || {
        let s = product_series(&[], &q("20"))?;
        ok(s.terms().count() == 1 && s.coeff(&Rational::new()) == Some(Rational::from(1)), "constant 1")
    });
    log.check("wrong product", || {
        let lhs = nahm_series(&rr(), &LatticeFilter::none(), &q("20"));
        let rhs = product_series(&[Factor::inv(2, 5), Factor::inv(3, 5)], &q("20"))?;
        let rep = verify_identity(&lhs, &rhs);
        let at_one = matches!(&rep, crate::qseries::IdentityReport::Mismatch { exponent, .. } if *exponent == 1);
        ok(at_one, rep.to_string())
    });
    log.check("eval at q = 0", || {
        let v = eval_numeric(&kr(["1", "3"]), &LatticeFilter::none(), &QPoint::zero(), Prec { digits: 30 })?;
        ok(cabs(&(v.value - 1u32)) < 1e-30, "value 1 for c = 0")
    });
    log.check("eval real q", || {
        let p = Prec { digits: 30 };
        let v = eval_numeric(&kr(["1", "3"]), &LatticeFilter::none(), &QPoint::real(&Float::with_val(p.bits(), 0.6)), p)?;
        ok(v.value.imag().is_zero() && *v.value.real() >= 1u32, format!("f(0.6) = {:.6}", v.value.real().to_f64()))
    });
    log.check("solve [[1]]", || {
        let one = NahmData::from_strs(&[&["1"]], &["0"], "0", &[1])?;
        let sol = solve_nahm(&one, Prec { digits: 40 })?;
        ok((sol.z[0].clone() - 0.5f64).abs() < 1e-38, "z = 1/2")
    });
    log.check("detect_rational", || {
        let tol = ten_pow(-20, b);
        let none = detect_rational(&pi(b), 1000, &tol).is_none();
        let half = detect_rational(&Float::with_val(b, 0.5), 1000, &tol) == Some(q("1/2"));
        ok(none && half, "π → none, 0.5 → 1/2")
    });
    log.check("psi lowest order", || {
        let ctx = RootOfUnity::new(&q("1/3"));
        let w = cx(b, 0.4, 0.1);
        let psi = psi_series(&w, &ctx, 1, 2)?;
        let mut want = Complex::with_val(b, 0);
        for t in 1..=3i64 {
            let x = Complex::with_val(b, &ctx.zeta_pow(t, b) * &w);
            let b2 = bernoulli_poly(2, &(Rational::from(1) - Rational::from((t, 3))));
            want -= polylog_nonpositive(0, &x)? * float(b, &b2) / 2u32;
        }
        let got = psi.grading(2).get(&vec![0]).cloned().unwrap_or_else(|| Complex::new(b));
        ok(psi.grading(0).is_empty() && rel_err(&got, &want) < 1e-35, "no ν²ε⁰ term; ε¹ term matches")
    });
    log.check("gaussian moments", || {
        let a = float(b, &q("5/2"));
        let cov = vec![vec![Float::with_val(b, a.recip_ref())]];
        let m0 = gaussian_moment(&cov, &[0])?;
        let m2 = gaussian_moment(&cov, &[2])?;
        let m4 = gaussian_moment(&cov, &[4])?;
        let c2 = vec![vec![Float::with_val(b, 2), Float::with_val(b, 0.5)], vec![Float::with_val(b, 0.5), Float::with_val(b, 1)]];
        let m11 = gaussian_moment(&c2, &[1, 1])?;
        let good = m0 == 1
            && (m2 - float(b, &q("2/5"))).abs() < 1e-35
            && (m4 - float(b, &q("12/25"))).abs() < 1e-35
            && (m11 - Float::with_val(b, 0.5)).abs() < 1e-35;
        ok(good, "I[1] = 1, I[x²] = 1/a, I[x⁴] = 3/a², I[x₁x₂] = C₁₂")
    });
    log.check("I_series constant and parity", || {
        let s = Setup::new(&rr(), &q("1/3"), Prec { digits: 40 })?;
        let mut mom = GaussianMoments::new(s.covariance()?)?;
        let mut good = true;
        for k in s.residues() {
            let i = i_series(&s, &k, 2, &mut mom)?;
            good &= cabs(&(i.coeff(0).clone() - 1u32)) < 1e-35 && cabs(i.half(1)) < 1e-30;
        }
        ok(good, "I(ε⁰) = 1, ε^{1/2} coefficient 0")
    });
    log.check("c(Q) at m = 1", || {
        let s = Setup::new(&rr(), &Rational::new(), Prec { digits: 40 })?;
        let bb = s.bits;
        let z = (Float::with_val(bb, 5).sqrt() - 1u32) / 2u32;
        let want = (Float::with_val(bb, 2) - z).sqrt().recip();
        let c = c_of_q(&s)?;
        ok((c.clone() - want).abs() < 1e-35 && c > 0u32, "(det Ã)^{-1/2} ∏(1-z)^{-1/2}, positive")
    });
    log.check("S at m = 1", || {
        let s = Setup::new(&kr(["1", "3"]), &Rational::new(), Prec { digits: 40 })?;
        let ss = s_series(&s, 2)?;
        let mut mom = GaussianMoments::new(s.covariance()?)?;
        let i0 = i_series(&s, &[0, 0], 2, &mut mom)?;
        let same = (0..=2).all(|k| cabs(&(ss.series.coeff(k).clone() - i0.coeff(k))) < 1e-35);
        let pre = prefactor(&s)?;
        let c = c_of_q(&s)?;
        ok(same && cabs(&(ss.series.coeff(0).clone() - 1u32)) < 1e-35 && cabs(&(pre - &c)) < 1e-35, "S = I(0), S(0) = 1, prefactor = c(Q)")
    });
    log.check("u at m = 1", || {
        let data = kr(["1", "3"]);
        let s = Setup::new(&data, &Rational::new(), Prec { digits: 40 })?;
        let u = compute_u(&s)?;
        let mut want = Float::with_val(s.bits, 1);
        for (i, z) in s.sol.z.iter().enumerate() {
            want *= fpow_rat(z, &Rational::from(&data.b()[i] / data.d()[i])) / Float::with_val(s.bits, 1 - z);
        }
        ok(rel_err(&u.u, &Complex::with_val(s.bits, (&want, 0))) < 1e-35, "∏ z^{b/d}/(1-z)")
    });
    log.check("quadratic_fit exact", || {
        let s: Vec<PhiSample> = (20..23u32)
            .map(|n| PhiSample { n, phi: Float::with_val(b, 0.3 * (n * n) as f64 - 1.5 * n as f64 + 0.25) })
            .collect();
        let fit = quadratic_fit(&s, &Float::with_val(b, 0.3));
        ok(fit.residual < 1e-12, format!("residual {:.1e}", fit.residual.to_f64()))
    });
    log.check("enumerate height 1", || {
        let l = enumerate_candidates(2, &[1, 1], 1)?;
        let small = l.iter().all(|x| x.a().iter().flatten().all(|v| *v.denom() == 1 && v.clone().abs() <= 1));
        let empty = enumerate_candidates(2, &[1, 1], 0)?.is_empty();
        ok(!l.is_empty() && small && empty, format!("{} matrices, entries in {{-1,0,1}}; height 0 empty", l.len()))
    });
}

fn model_invariants(log: &mut Log, rng: &mut ChaCha8Rng) {
    let rows = match table_rows() {
        Ok(r) => r,
        Err(e) => {
            log.check("tables", || Err(e.into()));
            return;
        }
    };
    let sample: Vec<NahmData> = (0..24).map(|_| rows[rng.gen_range(0..rows.len())].1.clone()).collect();
    log.check("Q increments and periodicity", || {
        let mut worst = String::new();
        for data in &sample {
            let n = data.rank();
            let delta = data.strong_denominator() as i64;
            let bound = Rational::from(2 * delta * delta);
            let q0 = data.quadratic_form(&vec![0; n])?;
            for _ in 0..50 {
                let v: Vec<i64> = (0..n).map(|_| rng.gen_range(0..40)).collect();
                let d = (data.quadratic_form(&v)? - &q0) * &bound;
                if *d.denom() != 1 {
                    worst = format!("{data}: n = {v:?}");
                }
            }
            if (2 * delta).pow(n as u32) > 30_000 {
                continue;
            }
            let mut k = vec![0i64; n];
            'outer: loop {
                let base = data.quadratic_form(&k)?;
                for i in 0..n {
                    let mut k2 = k.clone();
                    k2[i] += delta;
                    if *(data.quadratic_form(&k2)? - &base).denom() != 1 {
                        worst = format!("{data}: k = {k:?}");
                    }
                }
                for x in k.iter_mut() {
                    *x += 1;
                    if *x < 2 * delta {
                        continue 'outer;
                    }
                    *x = 0;
                }
                break;
            }
        }
        ok(worst.is_empty(), if worst.is_empty() { format!("{} data sets", sample.len()) } else { worst })
    });
    log.check("dual involution and definiteness", || {
        for data in &sample {
            let du = data.dual_data()?;
            if du.dual_data()? != *data || !is_positive_definite(du.ad()) {
                return ok(false, data.to_string());
            }
            for i in 0..du.rank() {
                for j in 0..du.rank() {
                    if du.ad()[i][j] != du.ad()[j][i] {
                        return ok(false, format!("{data}: A*D not symmetric"));
                    }
                }
            }
        }
        ok(true, format!("{} data sets", sample.len()))
    });
}

fn specialfn_invariants(log: &mut Log, rng: &mut ChaCha8Rng) {
    let p = Prec { digits: 50 };
    let bits = p.bits();
    let tol = ten_pow(-40, bits);
    let xs: Vec<Complex> = (0..4).map(|_| random_point(rng, 0.9, bits)).collect();
    log.check("shift identity", || {
        let mut worst = Float::with_val(bits, 0);
        for m in 1..=13i64 {
            for a in (1..=m).filter(|a| gcd_i64(*a, m) == 1) {
                let c = RootOfUnity::new(&Rational::from((a, m)));
                for x in &xs {
                    worst.max_mut(&shift_identity_error(&c, x));
                }
            }
        }
        ok(worst < tol, format!("max error {:.1e}", worst.to_f64()))
    });
    log.check("first congruence", || {
        let mut worst = Float::with_val(bits, 0);
        for m in 1..=13i64 {
            let c = RootOfUnity::new(&Rational::from((1, m)));
            for pp in (1..=7).filter(|pp| gcd_i64(*pp, m) == 1) {
                for x in &xs {
                    worst.max_mut(&prop_a1_first_error(&c, pp, x));
                }
            }
        }
        ok(worst < tol, format!("max error {:.1e}", worst.to_f64()))
    });
    log.check("second congruence order", || {
        let mut low = f64::INFINITY;
        let mut worst = String::new();
        for m in 2..=7i64 {
            let c = RootOfUnity::new(&Rational::from((1, m)));
            for pp in (2..=5).filter(|pp| gcd_i64(*pp, m) == 1) {
                for j in 0..m {
                    let s = prop_a1_second_slope(&c, pp, &c.zeta_pow(j, bits), 1e-2, 1e-3);
                    if s - (m as f64) < low {
                        low = s - (m as f64);
                        worst = format!("m={m} p={pp} slope {s:.3}");
                    }
                }
            }
        }
        ok(low >= -0.2, format!("lowest slope − m: {low:.3} ({worst})"))
    });
    log.check("change of zeta", || {
        let mut worst = Float::with_val(bits, 0);
        for m in 2..=9i64 {
            let c = RootOfUnity::new(&Rational::from((1, m)));
            for pp in (1..=5).filter(|pp| gcd_i64(*pp, m) == 1) {
                for e in 0..3 {
                    worst.max_mut(&change_of_zeta_error(&c, pp, e, &xs[0]));
                }
            }
        }
        ok(worst < tol, format!("max error {:.1e}", worst.to_f64()))
    });
    log.check("dedekind reciprocity and s(1,m)", || {
        for pp in 1..=40i64 {
            for qq in 1..=40i64 {
                if gcd_i64(pp, qq) != 1 {
                    continue;
                }
                let lhs = dedekind_sum(pp, qq)? + dedekind_sum(qq, pp)?;
                let rhs = q("-1/4")
                    + (Rational::from((pp, qq)) + Rational::from((qq, pp)) + Rational::from((1, pp * qq))) / 12;
                if lhs != rhs {
                    return ok(false, format!("p={pp} q={qq}"));
                }
            }
        }
        for m in 1..=50i64 {
            if dedekind_sum(1, m)? != Rational::from(((m - 1) * (m - 2), 12 * m)) {
                return ok(false, format!("s(1,{m})"));
            }
        }
        ok(true, "exact for p, q ≤ 40 and m ≤ 50")
    });
    log.check("bernoulli symmetry", || {
        for r in 0..=12u32 {
            for _ in 0..5 {
                let x = Rational::from((rng.gen_range(-50i64..50), rng.gen_range(1i64..30)));
                let lhs = bernoulli_poly(r, &(Rational::from(1) - &x));
                let rhs = bernoulli_poly(r, &x) * if r % 2 == 0 { 1 } else { -1 };
                if lhs != rhs {
                    return ok(false, format!("r={r} x={}", fmt_rational(&x)));
                }
            }
        }
        ok(true, "exact for r ≤ 12")
    });
    log.check("gauss sum period independence", || {
        for data in [kr(["1", "3"]), kr(["0", "0"]), rr().with_b(vec![q("1/2")])?] {
            let delta = data.strong_denominator();
            for a in ["1/5", "2/7", "3/11"] {
                let g1 = gauss_sum_with_delta(&data, &q(a), delta, bits)?;
                let g2 = gauss_sum_with_delta(&data, &q(a), 2 * delta, bits)?;
                if rel_err(&g1, &g2) > tol {
                    return ok(false, format!("{data} α={a}"));
                }
            }
        }
        ok(true, "δ and 2δ agree")
    });
}

fn qseries_invariants(log: &mut Log) {
    let p = Prec { digits: 50 };
    let b2 = NahmData::from_strs(&[&["1", "1/2"], &["1", "1"]], &["0", "0"], "0", &[1, 2]).expect("valid");
    let d3 = NahmData::from_strs(&[&["1", "1", "0"], &["1", "2", "1"], &["0", "2", "4"]], &["0", "0", "0"], "0", &[1, 1, 2])
        .expect("valid");
    let cases = [rr(), kr(["1", "3"]), b2, d3];
    log.check("series against numeric", || {
        let mut worst: f64 = 0.0;
        for data in &cases {
            let s = nahm_series(data, &LatticeFilter::none(), &q("160"));
            for x in [0.1, 0.3] {
                let xf = Float::with_val(p.bits(), x);
                let num = eval_numeric(data, &LatticeFilter::none(), &QPoint::real(&xf), p)?;
                let ser = series_at(&s, &xf);
                let e = Float::with_val(p.bits(), num.value.real() - &ser).abs() / &ser;
                worst = worst.max(e.to_f64());
            }
        }
        ok(worst < 1e-45, format!("max relative difference {worst:.1e}"))
    });
    log.check("congruence splitting", || {
        let order = q("60");
        for data in &cases {
            let full = nahm_series(data, &LatticeFilter::none(), &order);
            for s in [2u64, 3] {
                let mut sum = nahm_series(data, &LatticeFilter::congruence(0, 0, s), &order);
                for r in 1..s {
                    sum = sum.add(&nahm_series(data, &LatticeFilter::congruence(0, r, s), &order));
                }
                if !verify_identity(&full, &sum).is_equal() {
                    return ok(false, format!("{data} s={s}"));
                }
            }
        }
        ok(true, "s = 2, 3 on four data sets")
    });
    log.check("identity corpus", || {
        let mut n = 0;
        for (file, text) in bundled() {
            let id = load_identity(text)?;
            for (label, rep) in verify_identity_file(&id, None)? {
                if !rep.is_equal() {
                    return ok(false, format!("{file}: {label}: {rep}"));
                }
                n += 1;
            }
        }
        ok(true, format!("{n} equalities at their stated orders"))
    });
}

fn solver_invariants(log: &mut Log, seed: u64) {
    let p = Prec { digits: 60 };
    let rows = match table_rows() {
        Ok(r) => r,
        Err(e) => {
            log.check("tables", || Err(e.into()));
            return;
        }
    };
    log.check("uniqueness probe", || {
        let mut worst = Float::with_val(p.bits(), 0);
        for (_, data) in &rows {
            worst.max_mut(&uniqueness_probe(data, p, 20, seed)?);
        }
        ok(worst < ten_pow(-50, p.bits()), format!("{} rows, max distance {:.1e}", rows.len(), worst.to_f64()))
    });
    log.check("Lambda positive", || {
        for (_, data) in &rows {
            let sol = solve_nahm(data, p)?;
            if sol.big_lambda <= 0u32 {
                return ok(false, data.to_string());
            }
        }
        ok(true, format!("{} rows", rows.len()))
    });
    log.check("duality spot check", || {
        let t = reference_table("rank2")?;
        let mut seen = Vec::new();
        for blk in &t.blocks {
            let data = blk.data(0)?;
            let du = data.dual_data()?;
            let (_, l1) = compute_lambda(&solve_nahm(&data, p)?, &data)?;
            let (_, l2) = compute_lambda(&solve_nahm(&du, p)?, &du)?;
            let sum = Float::with_val(p.bits(), &l1 + &l2);
            // L(z) + L(1 − z) = L(1) fixes the sum at Σ 1/(24 d_i).
            let want: Rational = data.d().iter().map(|d| Rational::from((1, 24 * *d as i64))).sum();
            match detect_rational(&sum, 1000, &ten_pow(-40, p.bits())) {
                Some(r) if r == want => seen.push(fmt_rational(&r)),
                _ => return ok(false, format!("{data}: λ + λ* = {}", sum.to_f64())),
            }
        }
        seen.sort();
        seen.dedup();
        ok(true, format!("λ + λ* ∈ {{{}}}", seen.join(", ")))
    });
}

fn asymptotics_invariants(log: &mut Log, rng: &mut ChaCha8Rng) {
    let p = Prec { digits: 60 };
    let tol = ten_pow(-50, p.bits());
    log.check("Ã·D positive definite", || {
        let rows = table_rows()?;
        for (_, data) in rows.iter().step_by(3) {
            let s = Setup::new(data, &Rational::new(), p)?;
            GaussianMoments::new(s.covariance()?)?;
            let atd = s.a_tilde_d();
            for i in 0..atd.len() {
                for j in 0..i {
                    if Float::with_val(s.bits, &atd[i][j] - &atd[j][i]).abs() > tol {
                        return ok(false, data.to_string());
                    }
                }
            }
        }
        ok(true, "every third table row")
    });
    let cases = [(rr(), "1/3"), (rr(), "1/5"), (kr(["0", "0"]), "1/5"), (kr(["1", "3"]), "2/5"), (rr(), "0")];
    log.check("I_series parity", || {
        let mut worst = Float::with_val(p.bits(), 0);
        for (data, a) in &cases {
            let s = Setup::new(data, &q(a), p)?;
            let mut mom = GaussianMoments::new(s.covariance()?)?;
            for k in s.residues() {
                worst.max_mut(&i_series(&s, &k, 3, &mut mom)?.max_odd());
            }
        }
        ok(worst < tol, format!("max half-integer coefficient {:.1e}", worst.to_f64()))
    });
    log.check("S equals I(0) at m = 1", || {
        let s = Setup::new(&kr(["2", "3"]), &Rational::new(), p)?;
        let ss = s_series(&s, 3)?;
        let mut mom = GaussianMoments::new(s.covariance()?)?;
        let i0 = i_series(&s, &[0, 0], 3, &mut mom)?;
        let same = (0..=3).all(|k| cabs(&(ss.series.coeff(k).clone() - i0.coeff(k))) < tol);
        ok(same, "coefficientwise to ε³")
    });
    log.check("u two forms", || {
        let utol = ten_pow(-45, p.bits());
        for (data, a) in [(rr(), "1/3"), (rr(), "1/7"), (rr(), "1/11"), (kr(["1", "3"]), "2/5"), (kr(["0", "0"]), "1/5")] {
            let s = Setup::new(&data, &q(a), p)?;
            let u = compute_u(&s)?;
            let m = s.m() as i64;
            if rel_err(&u.u, &u.u_alt) > utol || rel_err(&cpow_int(&u.u, m), &u.u_m) > utol {
                return ok(false, format!("{data} α={a}"));
            }
        }
        ok(true, "agree to 1e-45")
    });
    log.check("u^m Galois invariance", || {
        let utol = ten_pow(-45, p.bits());
        for (data, a) in [(rr(), "1/7"), (kr(["1", "3"]), "1/5"), (kr(["0", "0"]), "3/7")] {
            let s = Setup::new(&data, &q(a), p)?;
            let base = u_power(&s, None)?;
            let m = s.m() as i64;
            for _ in 0..30 {
                let e: Vec<i64> = (0..data.rank()).map(|_| rng.gen_range(0..m)).collect();
                if rel_err(&base, &u_power(&s, Some(&e))?) > utol {
                    return ok(false, format!("{data} α={a} e={e:?}"));
                }
            }
        }
        ok(true, "30 twists per case")
    });
    log.check("summand periodicity", || {
        for (data, a) in [(kr(["1", "3"]), "1/5"), (rr(), "2/7")] {
            let s = Setup::new(&data, &q(a), p)?;
            let m = s.m() as i64;
            for k in s.residues() {
                let v = summand(&s, &k, None)?;
                for i in 0..data.rank() {
                    let mut k2 = k.clone();
                    k2[i] += m;
                    if rel_err(&v, &summand(&s, &k2, None)?) > tol {
                        return ok(false, format!("{data} k={k:?}"));
                    }
                }
            }
        }
        ok(true, "shifts by m leave every summand fixed")
    });
    log.check("chi and gauss units", || {
        let bits = p.bits();
        let g = gauss_sum(&kr(["1", "3"]), &Rational::new(), bits)?;
        let mut good = cabs(&(g - 1u32)) < tol;
        for a in ["1/5", "2/7", "3/11", "5/13"] {
            good &= (cabs(&chi_factor(&[1, 3], &q(a), bits)) - 1u32).abs() < tol;
        }
        ok(good, "|χ| = 1, G(Q,0) = 1")
    });
}

fn scanner_invariants(log: &mut Log) {
    let p = Prec { digits: 60 };
    let rows = match table_rows() {
        Ok(r) => r,
        Err(e) => {
            log.check("tables", || Err(e.into()));
            return;
        }
    };
    log.check("c independence", || {
        for data in [rr(), kr(["1", "2"]), kr(["1", "3"])] {
            let base = third_difference_test(&data, &LatticeFilter::none(), DEFAULT_N_BASE, p, DEFAULT_THRESHOLD)?;
            for g in ["7/3", "-5/18"] {
                let t = third_difference_test(&data.with_c(q(g)), &LatticeFilter::none(), DEFAULT_N_BASE, p, DEFAULT_THRESHOLD)?;
                if Float::with_val(p.bits(), &t.third_diff - &base.third_diff).abs() > 1e-50 {
                    return ok(false, format!("{data} γ={g}"));
                }
            }
        }
        ok(true, "Δ³φ unchanged for γ = 7/3, -5/18")
    });
    let mut worst = (0.0f64, String::new());
    let mut at60 = Vec::new();
    log.check("table rows pass", || {
        for (name, data) in &rows {
            let t = third_difference_test(data, &LatticeFilter::none(), DEFAULT_N_BASE, p, DEFAULT_THRESHOLD)?;
            let v = t.third_diff.to_f64().abs();
            if v > worst.0 {
                worst = (v, format!("{name} {data}"));
            }
            at60.push(t.candidate);
        }
        let all = at60.iter().all(|c| *c);
        ok(all, format!("{} rows, largest |Δ³φ| = {:.1e} ({})", rows.len(), worst.0, worst.1))
    });
    log.check("monotone precision", || {
        let hi = Prec { digits: 80 };
        for ((_, data), c60) in rows.iter().zip(&at60) {
            let t = third_difference_test(data, &LatticeFilter::none(), DEFAULT_N_BASE, hi, DEFAULT_THRESHOLD)?;
            if *c60 && !t.candidate {
                return ok(false, data.to_string());
            }
        }
        ok(at60.len() == rows.len(), "no row flips between P = 60 and P = 80")
    });
}

fn transforms_invariants(log: &mut Log) {
    log.check("S matrices", || {
        let mut worst: f64 = 0.0;
        for name in PRESETS {
            worst = worst.max(preset(name)?.matrix_check(256).to_f64());
        }
        ok(worst < 1e-30, format!("max deviation {worst:.1e}"))
    });
    log.check("T multipliers exact", || {
        let mut n = 0;
        for name in PRESETS {
            n += verify_t(&preset(name)?, 6)?.len();
        }
        ok(true, format!("{n} components"))
    });
    log.check("S error shrinks with precision", || {
        let sys = preset("kr")?;
        let taus = vec![Float::with_val(256, 1)];
        let lo = verify_s(&sys, &taus, Prec { digits: 20 })?.max_error;
        let hi = verify_s(&sys, &taus, Prec { digits: 50 })?.max_error;
        ok(hi < lo * 1e-20, format!("{lo:.1e} at P = 20, {hi:.1e} at P = 50"))
    });
}

fn cli_invariants(log: &mut Log) {
    log.check("byte-deterministic output", || {
        for args in [
            &["nahm", "solve", "--spec", "kr", "--prec", "40"][..],
            &["nahm", "coeffs", "--spec", "b2inv", "--order", "30"][..],
            &["nahm", "eval", "--spec", "rr", "--q", "0.3", "--prec", "30"][..],
        ] {
            let a = super::run_captured(args)?;
            let b = super::run_captured(args)?;
            if a != b || a.code != 0 {
                return ok(false, args.join(" "));
            }
        }
        ok(true, "solve, coeffs, eval")
    });
}
