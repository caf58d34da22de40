//! Precision handling and small arbitrary-precision helpers.

use rug::float::Constant;
use rug::{Complex, Float, Integer, Rational};

/// Working precision given in decimal digits. Internally every computation
/// carries ten guard digits on top.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prec {
    pub digits: u32,
}

const LOG2_10: f64 = std::f64::consts::LOG2_10;

impl Prec {
    pub const fn new(digits: u32) -> Self {
        Self { digits }
    }

    pub fn bits(self) -> u32 {
        ((self.digits + 10) as f64 * LOG2_10).ceil() as u32
    }

    /// Precision raised by a factor, e.g. `1.2` for the solver.
    pub fn scaled(self, f: f64) -> Self {
        Self::new((self.digits as f64 * f).ceil() as u32)
    }

    pub fn plus(self, extra: u32) -> Self {
        Self::new(self.digits + extra)
    }

    /// `10^{-digits}`.
    pub fn tolerance(self) -> Float {
        ten_pow(-(self.digits as i32), self.bits())
    }
}

pub fn ten_pow(e: i32, bits: u32) -> Float {
    let ten = Float::with_val(bits, 10);
    rug::ops::Pow::pow(ten, e)
}

pub fn digits_to_bits(d: u32) -> u32 {
    Prec::new(d).bits()
}

pub fn pi(bits: u32) -> Float {
    Float::with_val(bits, Constant::Pi)
}

pub fn two_pi(bits: u32) -> Float {
    pi(bits) * 2u32
}

pub fn float(bits: u32, r: &Rational) -> Float {
    Float::with_val(bits, r)
}

pub fn real(bits: u32, x: &Float) -> Complex {
    Complex::with_val(bits, (x, 0))
}

pub fn cone(bits: u32) -> Complex {
    Complex::with_val(bits, 1)
}

pub fn czero(bits: u32) -> Complex {
    Complex::with_val(bits, 0)
}

pub fn cabs(z: &Complex) -> Float {
    Float::with_val(z.prec().0, z.abs_ref())
}

/// Fractional part in `[0, 1)`.
pub fn frac(x: &Rational) -> Rational {
    let fl = Rational::from(x.floor_ref());
    Rational::from(x - &fl)
}

/// `𝐞(x) = exp(2πix)` for rational `x`, reduced exactly before evaluation.
pub fn e_rat(x: &Rational, bits: u32) -> Complex {
    let f = frac(x);
    if f == 0 {
        return cone(bits);
    }
    let ang = two_pi(bits + 8) * Float::with_val(bits + 8, &f);
    let (s, c) = ang.sin_cos(Float::new(bits + 8));
    Complex::with_val(bits, (c, s))
}

/// `exp(2πix)` for real `x`.
pub fn e_float(x: &Float, bits: u32) -> Complex {
    let ang = two_pi(bits) * x;
    let (s, c) = ang.sin_cos(Float::new(bits));
    Complex::with_val(bits, (c, s))
}

pub fn cpow_int(z: &Complex, n: i64) -> Complex {
    if n >= 0 {
        rug::ops::Pow::pow(z.clone(), Integer::from(n))
    } else {
        rug::ops::Pow::pow(z.clone(), Integer::from(-n)).recip()
    }
}

/// Principal branch `z^r` for rational `r`.
pub fn cpow_rat(z: &Complex, r: &Rational) -> Complex {
    let bits = z.prec().0;
    if *r.denom() == 1 {
        if let Some(n) = r.numer().to_i64() {
            return cpow_int(z, n);
        }
    }
    rug::ops::Pow::pow(z.clone(), Float::with_val(bits, r))
}

/// `x^r` for positive real `x`.
pub fn fpow_rat(x: &Float, r: &Rational) -> Float {
    let bits = x.prec();
    rug::ops::Pow::pow(x.clone(), Float::with_val(bits, r))
}

pub fn log10_abs(z: &Complex) -> f64 {
    let a = cabs(z);
    if a.is_zero() {
        return f64::NEG_INFINITY;
    }
    let (m, e) = a.to_f64_exp();
    m.abs().log10() + e as f64 * std::f64::consts::LOG10_2
}

pub fn log10_float(a: &Float) -> f64 {
    if a.is_zero() {
        return f64::NEG_INFINITY;
    }
    let (m, e) = a.to_f64_exp();
    m.abs().log10() + e as f64 * std::f64::consts::LOG10_2
}

/// Relative distance `|a − b| / max(|a|, |b|, tiny)`.
pub fn rel_err(a: &Complex, b: &Complex) -> Float {
    let bits = a.prec().0;
    let diff = cabs(&Complex::with_val(bits, a - b));
    let mut den = cabs(a);
    let bb = cabs(b);
    if bb > den {
        den = bb;
    }
    if den.is_zero() {
        return diff;
    }
    diff / den
}

pub fn fmt_float(x: &Float, digits: usize) -> String {
    format!("{:.*e}", digits.saturating_sub(1), x)
}

pub fn fmt_complex(z: &Complex, digits: usize) -> String {
    format!("{} {} {}i", fmt_float(z.real(), digits), if z.imag().is_sign_negative() { "-" } else { "+" }, fmt_float(&Float::with_val(z.prec().1, z.imag().abs_ref()), digits))
}

/// Gaussian elimination with partial pivoting; returns `None` if singular.
pub fn solve_linear_complex(a: &[Vec<Complex>], b: &[Complex]) -> Option<Vec<Complex>> {
    let n = b.len();
    let mut m: Vec<Vec<Complex>> = a.to_vec();
    let mut v: Vec<Complex> = b.to_vec();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| cabs(&m[i][k]).partial_cmp(&cabs(&m[j][k])).unwrap())?;
        if m[p][k].is_zero() {
            return None;
        }
        m.swap(p, k);
        v.swap(p, k);
        for i in k + 1..n {
            let f = m[i][k].clone() / &m[k][k];
            for j in k..n {
                let t = f.clone() * &m[k][j];
                m[i][j] -= t;
            }
            let t = f * &v[k];
            v[i] -= t;
        }
    }
    let bits = v[0].prec().0;
    let mut x = vec![czero(bits); n];
    for i in (0..n).rev() {
        let mut s = v[i].clone();
        for j in i + 1..n {
            s -= m[i][j].clone() * &x[j];
        }
        x[i] = s / &m[i][i];
    }
    Some(x)
}

pub fn solve_linear_real(a: &[Vec<Float>], b: &[Float]) -> Option<Vec<Float>> {
    let n = b.len();
    let mut m: Vec<Vec<Float>> = a.to_vec();
    let mut v: Vec<Float> = b.to_vec();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[i][k].clone().abs().partial_cmp(&m[j][k].clone().abs()).unwrap())?;
        if m[p][k].is_zero() {
            return None;
        }
        m.swap(p, k);
        v.swap(p, k);
        for i in k + 1..n {
            let f = m[i][k].clone() / &m[k][k];
            for j in k..n {
                let t = f.clone() * &m[k][j];
                m[i][j] -= t;
            }
            let t = f * &v[k];
            v[i] -= t;
        }
    }
    let bits = v[0].prec();
    let mut x = vec![Float::new(bits); n];
    for i in (0..n).rev() {
        let mut s = v[i].clone();
        for j in i + 1..n {
            s -= m[i][j].clone() * &x[j];
        }
        x[i] = s / &m[i][i];
    }
    Some(x)
}

pub fn det_real(a: &[Vec<Float>]) -> Float {
    let n = a.len();
    let bits = a[0][0].prec();
    let mut m: Vec<Vec<Float>> = a.to_vec();
    let mut det = Float::with_val(bits, 1);
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[i][k].clone().abs().partial_cmp(&m[j][k].clone().abs()).unwrap())
            .unwrap();
        if m[p][k].is_zero() {
            return Float::new(bits);
        }
        if p != k {
            m.swap(p, k);
            det = -det;
        }
        det *= &m[k][k];
        for i in k + 1..n {
            let f = m[i][k].clone() / &m[k][k];
            for j in k..n {
                let t = f.clone() * &m[k][j];
                m[i][j] -= t;
            }
        }
    }
    det
}

pub fn inverse_real(a: &[Vec<Float>]) -> Option<Vec<Vec<Float>>> {
    let n = a.len();
    let bits = a[0][0].prec();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let e: Vec<Float> = (0..n).map(|i| Float::with_val(bits, u32::from(i == j))).collect();
        cols.push(solve_linear_real(a, &e)?);
    }
    Some((0..n).map(|i| (0..n).map(|j| cols[j][i].clone()).collect()).collect())
}
