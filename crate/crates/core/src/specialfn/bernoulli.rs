use std::sync::{Mutex, OnceLock};

use rug::{Float, Integer, Rational};

fn cache() -> &'static Mutex<Vec<Rational>> {
    static C: OnceLock<Mutex<Vec<Rational>>> = OnceLock::new();
    C.get_or_init(|| Mutex::new(vec![Rational::from(1)]))
}

pub fn binomial(n: u32, k: u32) -> Integer {
    Integer::from(Integer::binomial_u(n, k))
}

/// Bernoulli number `B_n` with `B_1 = −1/2`.
pub fn bernoulli_number(n: usize) -> Rational {
    let mut b = cache().lock().unwrap();
    while b.len() <= n {
        let m = b.len();
        let mut s = Rational::new();
        for (k, bk) in b.iter().enumerate() {
            if k > 1 && k % 2 == 1 {
                continue;
            }
            s += Rational::from(bk * binomial(m as u32 + 1, k as u32));
        }
        let v = if m > 1 && m % 2 == 1 { Rational::new() } else { -s / (m as u32 + 1) };
        b.push(v);
    }
    b[n].clone()
}

/// `B_r(x) = Σ_k C(r,k) B_k x^{r−k}`, exactly.
pub fn bernoulli_poly(r: u32, x: &Rational) -> Rational {
    let mut s = Rational::new();
    let mut xp = Rational::from(1);
    for k in (0..=r).rev() {
        s += Rational::from(&bernoulli_number(k as usize) * &xp) * binomial(r, k);
        xp *= x;
    }
    s
}

pub fn bernoulli_poly_float(r: u32, x: &Float) -> Float {
    let bits = x.prec();
    let mut s = Float::new(bits);
    let mut xp = Float::with_val(bits, 1);
    for k in (0..=r).rev() {
        let c = Rational::from(&bernoulli_number(k as usize) * binomial(r, k));
        s += Float::with_val(bits, &c) * &xp;
        xp *= x;
    }
    s
}

/// Coefficients of `ν ↦ B_r(a + sν)` as a polynomial in `ν`, lowest degree first.
pub fn bernoulli_shift_coeffs(r: u32, a: &Rational, s: &Rational) -> Vec<Rational> {
    // B_r(a + h) = Σ_j C(r,j) B_{r−j}(a) h^j
    (0..=r)
        .map(|j| {
            let mut sj = Rational::from(1);
            for _ in 0..j {
                sj *= s;
            }
            bernoulli_poly(r - j, a) * binomial(r, j) * sj
        })
        .collect()
}
