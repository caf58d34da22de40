use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

use super::series::QSeries;
use super::SeriesError;
use crate::model::JsonRational;

/// One factor `(sign·q^a; q^M)_∞^e`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factor {
    #[serde(default = "plus_one")]
    pub sign: i32,
    pub a: JsonRational,
    #[serde(rename = "M")]
    pub modulus: u64,
    pub e: i64,
}

fn plus_one() -> i32 {
    1
}

impl Factor {
    pub fn new(sign: i32, a: Rational, modulus: u64, e: i64) -> Self {
        Self { sign, a: JsonRational(a), modulus, e }
    }

    /// `1/(q^a; q^M)_∞`.
    pub fn inv(a: i64, modulus: u64) -> Self {
        Self::new(1, Rational::from(a), modulus, -1)
    }
}

/// `∏ (sign·q^a; q^M)_∞^e`.
pub type ProductSide = Vec<Factor>;

fn units(x: &Rational, den: u64) -> Integer {
    let v = Rational::from(x * den);
    assert_eq!(*v.denom(), 1);
    v.numer().clone()
}

/// Expand a product side exactly to `q^order`.
pub fn product_series(side: &[Factor], order: &Rational) -> Result<QSeries, SeriesError> {
    let mut den = Integer::from(1);
    for f in side {
        if f.modulus == 0 || f.e == 0 || (f.sign != 1 && f.sign != -1) {
            return Err(SeriesError::InvalidFactor(format!("{f:?}")));
        }
        if f.a.0 < 0 || (f.a.0 == 0 && f.sign == 1) {
            return Err(SeriesError::InvalidFactor(format!("nonconvergent factor {f:?}")));
        }
        den.lcm_mut(f.a.0.denom());
    }
    let den = den.to_u64().unwrap();
    if *order < 0 {
        return Ok(QSeries::new(den, Rational::new(), vec![], order.clone()));
    }
    let top = units(&Rational::from(Integer::from(Rational::from(order * den).floor_ref())), 1)
        .to_usize()
        .unwrap();
    let mut v = vec![Integer::new(); top + 1];
    v[0] = Integer::from(1);
    let mut scalar = Rational::from(1);
    for f in side {
        let a = units(&f.a.0, den).to_usize().unwrap();
        let step = (f.modulus * den) as usize;
        let mut x = a;
        while x <= top {
            if x == 0 {
                // constant factor (1 + 1)^e
                if f.e > 0 {
                    scalar *= rug::ops::Pow::pow(Integer::from(2), f.e as u32);
                } else {
                    scalar /= rug::ops::Pow::pow(Integer::from(2), (-f.e) as u32);
                }
                x += step;
                continue;
            }
            for _ in 0..f.e.unsigned_abs() {
                if f.e > 0 {
                    // multiply by (1 − s q^x)
                    for i in (x..=top).rev() {
                        let t = v[i - x].clone();
                        if f.sign == 1 {
                            v[i] -= t;
                        } else {
                            v[i] += t;
                        }
                    }
                } else {
                    // divide by (1 − s q^x)
                    for i in x..=top {
                        let t = v[i - x].clone();
                        if f.sign == 1 {
                            v[i] += t;
                        } else {
                            v[i] -= t;
                        }
                    }
                }
            }
            x += step;
        }
    }
    let coeffs = v.into_iter().map(|c| Rational::from(c) * &scalar).collect();
    Ok(QSeries::new(den, Rational::new(), coeffs, order.clone()))
}

/// `Σ_{n≥0} q^{a n² + b n} / (q;q)_{μn+ν}`.
pub fn single_sum_series(
    a: &Rational,
    b: &Rational,
    mu: u64,
    nu: u64,
    order: &Rational,
) -> Result<QSeries, SeriesError> {
    if *a <= 0 {
        return Err(SeriesError::InvalidFactor("quadratic coefficient must be positive".into()));
    }
    let mut den = Integer::from(a.denom());
    den.lcm_mut(b.denom());
    let den = den.to_u64().unwrap();
    let top = Integer::from(Rational::from(order * den).floor_ref()).to_i64().unwrap();
    if top < 0 {
        return Ok(QSeries::new(den, Rational::new(), vec![], order.clone()));
    }
    let len = top as usize + 1;
    let mut total = vec![Integer::new(); len];
    // p holds 1/(q;q)_k, grown incrementally
    let mut p = vec![Integer::new(); len];
    p[0] = Integer::from(1);
    let mut k = 0u64;
    let mut n = 0u64;
    loop {
        let e = Rational::from(a * (n * n)) + Rational::from(b * n);
        let eu = Integer::from(Rational::from(&e * den).numer()).to_i64().unwrap();
        if eu > top && n > 0 && Rational::from(a * (2 * n + 1)) + b > 0 {
            break;
        }
        let target = mu * n + nu;
        while k < target {
            k += 1;
            let s = (k * den) as usize;
            for i in s..len {
                let t = p[i - s].clone();
                p[i] += t;
            }
        }
        if eu <= top {
            if eu < 0 {
                return Err(SeriesError::InvalidFactor("negative exponent in single sum".into()));
            }
            for i in eu as usize..len {
                total[i] += &p[i - eu as usize];
            }
        }
        n += 1;
    }
    Ok(QSeries::from_integers(den, Rational::new(), total, order.clone()))
}
