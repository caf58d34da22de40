use rug::ops::Pow;
use rug::{Complex, Integer, Rational};

use super::num::{czero, e_rat};
use super::{RootOfUnity, SpecialError};
use crate::model::{mod_inverse, NahmData};

/// `T ∈ [0, m)` with `T ≡ x (mod m)` for `x = t/δ′`, `gcd(δ′, m) = 1`.
pub fn reduce_mod_m(x: &Rational, m: u64) -> Option<i64> {
    let m = m as i64;
    let den = x.denom().mod_u(m as u32) as i64;
    let inv = mod_inverse(den, m)?;
    let num = Integer::from(x.numer() % m).to_i64().unwrap();
    Some((num.rem_euclid(m) * inv).rem_euclid(m))
}

/// Denominator of all values `Q(k)` including `c`.
pub fn full_value_denominator(data: &NahmData) -> Integer {
    let mut den = data.value_denominator();
    den.lcm_mut(data.c().denom());
    den
}

/// `G(Q, α) = δ^{−N} Σ_{k mod δ} 𝐞(ᾱ Q(k))` with `δ` the strong denominator.
///
/// `ᾱ` is `a·m⁻¹` modulo the common denominator of the values of `Q`, which makes the
/// sum independent of the choice of `δ`.
pub fn gauss_sum(data: &NahmData, alpha: &Rational, bits: u32) -> Result<Complex, SpecialError> {
    gauss_sum_with_delta(data, alpha, data.strong_denominator(), bits)
}

/// As [`gauss_sum`] with an explicit period `δ`, which must be a multiple of the strong denominator.
pub fn gauss_sum_with_delta(
    data: &NahmData,
    alpha: &Rational,
    delta: u64,
    bits: u32,
) -> Result<Complex, SpecialError> {
    assert!(delta.is_multiple_of(data.strong_denominator()), "delta must be a period");
    let ctx = RootOfUnity::new(alpha);
    let dq = full_value_denominator(data).to_i64().expect("small denominator");
    let m = ctx.m as i64;
    let minv = mod_inverse(m, dq).ok_or(SpecialError::NotCoprime(m, dq))?;
    let abar = (ctx.a * minv).rem_euclid(dq);
    let n = data.rank();
    let mut k = vec![0i64; n];
    let mut sum = czero(bits);
    loop {
        let v = data.quadratic_form_unchecked(&k) * abar;
        sum += e_rat(&v, bits);
        let mut i = 0;
        while i < n {
            k[i] += 1;
            if (k[i] as u64) < delta {
                break;
            }
            k[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
    }
    let count = Integer::from(delta).pow(n as u32);
    Ok(sum / count)
}
