//! Cyclic quantum dilogarithm, q-Pochhammer symbols, and the product identities
//! relating them.

use rug::{Complex, Float};

use super::num::{cabs, cone, cpow_int, rel_err};
use super::{RootOfUnity, SpecialError};
use crate::model::mod_inverse;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PochLen {
    Finite(i64),
    Infinite,
}

/// `(x; q)_n = (1−x)(1−qx)⋯(1−q^{n−1}x)`; negative `n` uses `(x;q)_{−n} = 1/(q^{−n}x; q)_n`.
pub fn qpochhammer(x: &Complex, q: &Complex, n: PochLen) -> Result<Complex, SpecialError> {
    let bits = x.prec().0;
    let one = cone(bits);
    match n {
        PochLen::Finite(n) if n >= 0 => {
            let mut out = one.clone();
            let mut t = x.clone();
            for _ in 0..n {
                out *= Complex::with_val(bits, &one - &t);
                t *= q;
            }
            Ok(out)
        }
        PochLen::Finite(n) => {
            let qi = q.clone().recip();
            let mut out = one.clone();
            let mut t = x.clone() * &qi;
            for _ in 0..(-n) {
                out *= Complex::with_val(bits, &one - &t);
                t *= &qi;
            }
            Ok(out.recip())
        }
        PochLen::Infinite => {
            let aq = cabs(q);
            if aq >= 1u32 {
                return Err(SpecialError::Divergent);
            }
            let gap = Float::with_val(bits, 1) - &aq;
            let eps = Float::with_val(bits, Float::u_exp(1, -(bits as i32) - 8)) * &gap;
            let mut out = one.clone();
            let mut t = x.clone();
            loop {
                if cabs(&t) < eps {
                    return Ok(out);
                }
                out *= Complex::with_val(bits, &one - &t);
                t *= q;
            }
        }
    }
}

pub fn poch(x: &Complex, q: &Complex, n: i64) -> Complex {
    qpochhammer(x, q, PochLen::Finite(n)).expect("finite")
}

/// `D_ζ(x) = ∏_{t=1}^{m−1} (1 − ζ^t x)^t`.
pub fn cyclic_dilog(ctx: &RootOfUnity, x: &Complex) -> Complex {
    let bits = x.prec().0;
    let mut out = cone(bits);
    for t in 1..ctx.m as i64 {
        let f = cone(bits) - ctx.zeta_pow(t, bits) * x;
        out *= cpow_int(&f, t);
    }
    out
}

/// Relative error of `D_ζ(ζx)/D_ζ(x) = (1−x)^m/(1−x^m)`.
pub fn shift_identity_error(ctx: &RootOfUnity, x: &Complex) -> Float {
    let bits = x.prec().0;
    let m = ctx.m as i64;
    let zx = ctx.zeta_pow(1, bits) * x;
    let lhs = cyclic_dilog(ctx, &zx) / cyclic_dilog(ctx, x);
    let one = cone(bits);
    let rhs = cpow_int(&(one.clone() - x), m) / (one - cpow_int(x, m));
    rel_err(&lhs, &rhs)
}

fn inverse_mod(p: i64, m: i64) -> i64 {
    if m == 1 {
        return 1;
    }
    let q = mod_inverse(p, m).expect("p coprime to m");
    if q == 0 {
        m
    } else {
        q
    }
}

fn dilog_ratio(ctx: &RootOfUnity, p: i64, x: &Complex) -> Complex {
    let q = inverse_mod(p, ctx.m as i64);
    let lhs = cpow_int(&cyclic_dilog(ctx, x), p);
    lhs / cyclic_dilog(&ctx.power(q), x)
}

/// Relative error of `D_ζ(x)^p / D_{ζ^q}(x) = ((1−x^m)^{p−1} ∏_{t=1}^{p−1} 1/(x;ζ)_{⌊mt/p⌋+1})^m`.
pub fn prop_a1_first_error(ctx: &RootOfUnity, p: i64, x: &Complex) -> Float {
    let bits = x.prec().0;
    let m = ctx.m as i64;
    let zeta = ctx.zeta_pow(1, bits);
    let lhs = dilog_ratio(ctx, p, x);
    let mut inner = cpow_int(&(cone(bits) - cpow_int(x, m)), p - 1);
    for t in 1..p {
        inner /= poch(x, &zeta, (m * t).div_euclid(p) + 1);
    }
    rel_err(&lhs, &cpow_int(&inner, m))
}

/// `D_ζ(x)^p / D_{ζ^q}(x)` divided by `(∏_{t=1}^{p−1} 1/(x;ζ)_{tq})^m`; this ratio is a
/// power of `(1−x^m)^m`.
pub fn prop_a1_second_ratio(ctx: &RootOfUnity, p: i64, x: &Complex) -> Complex {
    let bits = x.prec().0;
    let m = ctx.m as i64;
    let q = inverse_mod(p, m);
    let zeta = ctx.zeta_pow(1, bits);
    let mut rhs = cone(bits);
    for t in 1..p {
        rhs /= poch(x, &zeta, t * q);
    }
    dilog_ratio(ctx, p, x) / cpow_int(&rhs, m)
}

/// Order of vanishing of [`prop_a1_second_ratio`] at `x₀` from two radial offsets.
pub fn prop_a1_second_slope(ctx: &RootOfUnity, p: i64, x0: &Complex, h1: f64, h2: f64) -> f64 {
    let bits = x0.prec().0;
    let at = |h: f64| {
        let x = x0.clone() * Complex::with_val(bits, (1.0 + h, 0));
        super::num::log10_abs(&prop_a1_second_ratio(ctx, p, &x))
    };
    (at(h1) - at(h2)) / (h1.log10() - h2.log10())
}

/// Maximum relative error among the three forms
/// `∏_{t<p} (x;ζ)_{tq}/(ζ^e x;ζ)_{tq}`, `∏_{t<p} (x;ζ)_e/(ζ^{tq}x;ζ)_e`, `(x;ζ)_e^p/(x;ζ^q)_{pe}`.
pub fn change_of_zeta_error(ctx: &RootOfUnity, p: i64, e: i64, x: &Complex) -> Float {
    let bits = x.prec().0;
    let m = ctx.m as i64;
    let q = inverse_mod(p, m);
    let zeta = ctx.zeta_pow(1, bits);
    let ze_x = ctx.zeta_pow(e, bits) * x;
    let mut first = cone(bits);
    let mut second = cone(bits);
    for t in 0..p {
        first *= poch(x, &zeta, t * q) / poch(&ze_x, &zeta, t * q);
        let ztx = ctx.zeta_pow(t * q, bits) * x;
        second *= poch(x, &zeta, e) / poch(&ztx, &zeta, e);
    }
    let zq = ctx.zeta_pow(q, bits);
    let third = cpow_int(&poch(x, &zeta, e), p) / poch(x, &zq, p * e);
    let a = rel_err(&first, &second);
    let b = rel_err(&second, &third);
    if a > b {
        a
    } else {
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::gcd_i64;
    use crate::specialfn::num::digits_to_bits;
    use rug::Rational;

    fn ctx(a: i64, m: i64) -> RootOfUnity {
        RootOfUnity::new(&Rational::from((a, m)))
    }

    fn pt(b: u32, re: f64, im: f64) -> Complex {
        Complex::with_val(b, (re, im))
    }

    #[test]
    fn pochhammer_examples() {
        let b = digits_to_bits(40);
        let x = pt(b, 0.3, 0.1);
        let qq = pt(b, -0.2, 0.5);
        assert_eq!(poch(&x, &qq, 0), cone(b));
        let two = (cone(b) - x.clone()) * (cone(b) - qq.clone() * &x);
        assert!(rel_err(&poch(&x, &qq, 2), &two) < 1e-45);
        let neg = poch(&x, &qq, -3) * poch(&(x.clone() * cpow_int(&qq, -3)), &qq, 3);
        assert!(rel_err(&neg, &cone(b)) < 1e-45);
        let half = pt(b, 0.5, 0.0);
        let v = qpochhammer(&half, &half, PochLen::Infinite).unwrap();
        assert!((v.real().to_f64() - 0.2887880950866024).abs() < 1e-13);
        assert!(matches!(qpochhammer(&half, &pt(b, 1.0, 0.0), PochLen::Infinite), Err(SpecialError::Divergent)));
    }

    #[test]
    fn pentagonal_number_check() {
        let b = digits_to_bits(50);
        let qq = pt(b, 0.5, 0.0);
        let prod = qpochhammer(&qq, &qq, PochLen::Infinite).unwrap();
        let mut s = Complex::with_val(b, 0);
        for k in -40i64..=40 {
            let e = k * (3 * k - 1) / 2;
            let t = cpow_int(&qq, e);
            if k % 2 == 0 {
                s += t;
            } else {
                s -= t;
            }
        }
        assert!(rel_err(&prod, &s) < 1e-50);
    }

    #[test]
    fn cyclic_dilog_examples() {
        let b = digits_to_bits(30);
        let x = pt(b, 0.4, -0.3);
        assert_eq!(cyclic_dilog(&ctx(0, 1), &x), cone(b));
        let d2 = cyclic_dilog(&ctx(1, 2), &x);
        assert!(rel_err(&d2, &(cone(b) + x.clone())) < 1e-35);
        for m in 1..8 {
            assert!(rel_err(&cyclic_dilog(&ctx(1, m), &pt(b, 0.0, 0.0)), &cone(b)) < 1e-35);
        }
    }

    #[test]
    fn cyclic_dilog_identities() {
        let b = digits_to_bits(50);
        let xs = [pt(b, 0.3, 0.5), pt(b, -0.7, 0.2), pt(b, 0.1, -0.85)];
        for m in 1..=13i64 {
            for a in 1..=m {
                if gcd_i64(a, m) != 1 {
                    continue;
                }
                let c = ctx(a, m);
                for x in &xs {
                    assert!(shift_identity_error(&c, x) < 1e-40, "shift m={m}");
                    for p in 1..=7 {
                        if gcd_i64(p, m) != 1 {
                            continue;
                        }
                        assert!(prop_a1_first_error(&c, p, x) < 1e-40, "eq1 m={m} a={a} p={p}");
                        for e in 0..3 {
                            assert!(change_of_zeta_error(&c, p, e, x) < 1e-40, "cz m={m} p={p} e={e}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn second_congruence_vanishing_order() {
        let b = digits_to_bits(50);
        for m in 2..=7i64 {
            let c = ctx(1, m);
            for p in 2..=5 {
                if gcd_i64(p, m) != 1 {
                    continue;
                }
                for j in 0..m {
                    let x0 = c.zeta_pow(j, b);
                    let slope = prop_a1_second_slope(&c, p, &x0, 1e-2, 1e-3);
                    assert!(slope >= m as f64 - 0.2, "m={m} p={p} j={j} slope={slope}");
                }
            }
        }
    }
}
