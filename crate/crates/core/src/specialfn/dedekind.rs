use rug::{Complex, Rational};

use super::num::{cone, e_rat};
use super::SpecialError;
use crate::model::gcd_i64;

/// Saw wave `((x))`: `x − ⌊x⌋ − 1/2` off the integers, `0` on them.
pub fn saw(x: &Rational) -> Rational {
    if *x.denom() == 1 {
        return Rational::new();
    }
    let fl = Rational::from(x.floor_ref());
    Rational::from(x - &fl) - Rational::from((1, 2))
}

/// Dedekind sum `s(p, q) = Σ_{r mod q} ((r/q))((pr/q))`.
pub fn dedekind_sum(p: i64, q: i64) -> Result<Rational, SpecialError> {
    if q <= 0 || gcd_i64(p, q) != 1 {
        return Err(SpecialError::NotCoprime(p, q));
    }
    let mut acc: i128 = 0;
    for r in 1..q {
        let s = (p as i128 * r as i128).rem_euclid(q as i128);
        if s == 0 {
            continue;
        }
        acc += (2 * r as i128 - q as i128) * (2 * s - q as i128);
    }
    let den = 4 * (q as i128) * (q as i128);
    Ok(Rational::from((rug::Integer::from(acc), rug::Integer::from(den))))
}

/// `χ(d, α) = ∏ 𝐞(s(p_i, q_i)/2)` where `p_i/q_i = α d_i` in lowest terms.
pub fn chi_factor(d: &[u32], alpha: &Rational, bits: u32) -> Complex {
    let mut out = cone(bits);
    for &di in d {
        let x = Rational::from(alpha * di);
        let p = x.numer().to_i64().expect("small numerator");
        let q = x.denom().to_i64().expect("small denominator");
        let s = dedekind_sum(p, q).expect("lowest terms");
        out *= e_rat(&(s / 2), bits);
    }
    out
}
