use rug::{Complex, Float, Integer};

use super::num::{cabs, cone, pi};
use super::SpecialError;

/// Eulerian numbers `A(n, k)`, `k = 0..n−1`.
fn eulerian_row(n: u32) -> Vec<Integer> {
    let mut row = vec![Integer::from(1)];
    for m in 2..=n {
        let mut next = vec![Integer::new(); m as usize];
        for k in 0..m as usize {
            let mut v = Integer::new();
            if k < row.len() {
                v += Integer::from(&row[k] * (k as u32 + 1));
            }
            if k >= 1 && k - 1 < row.len() {
                v += Integer::from(&row[k - 1] * (m - k as u32));
            }
            next[k] = v;
        }
        row = next;
    }
    row
}

/// `Li_s(w)` for `s ≤ 0` as the rational function `w A_n(w)/(1−w)^{n+1}`.
pub fn polylog_nonpositive(s: i32, w: &Complex) -> Result<Complex, SpecialError> {
    assert!(s <= 0, "order must be nonpositive");
    let bits = w.prec().0;
    let one_minus = cone(bits) - w;
    let tol = super::num::ten_pow(-((bits as f64 * 0.3) as i32) / 2, bits);
    if cabs(&one_minus) < tol {
        return Err(SpecialError::PoleAtOne);
    }
    let n = (-s) as u32;
    if n == 0 {
        return Ok(w.clone() / one_minus);
    }
    let row = eulerian_row(n);
    let mut p = Complex::with_val(bits, 0);
    for c in row.iter().rev() {
        p *= w;
        p += c;
    }
    let den = rug::ops::Pow::pow(one_minus, n + 1);
    Ok(p * w / den)
}

fn series_small(w: &Complex) -> Complex {
    let bits = w.prec().0;
    let eps = Float::with_val(bits, Float::u_exp(1, -(bits as i32) - 4));
    let mut s = Complex::with_val(bits, 0);
    let mut wk = w.clone();
    let mut k: u64 = 1;
    loop {
        let t = wk.clone() / (k * k);
        let small = cabs(&t) < eps;
        s += t;
        if small {
            break;
        }
        k += 1;
        wk *= w;
    }
    s
}

/// `Li₂(w) = Σ B_n u^{n+1}/(n+1)!` with `u = −log(1−w)`, valid for `|u| < 2π`.
fn series_bernoulli(w: &Complex) -> Complex {
    let bits = w.prec().0;
    let u = -(cone(bits) - w).ln();
    let eps = Float::with_val(bits, Float::u_exp(1, -(bits as i32) - 4));
    let two_pi = pi(bits) * 2u32;
    let u2 = Complex::with_val(bits, &u * &u);
    let mut s = u.clone() - u2.clone() / 4u32;
    // B_{2k}/(2k+1)! = (−1)^{k+1} 2ζ(2k) / ((2k+1)(2π)^{2k})
    let mut up = u.clone();
    let mut scale = Float::with_val(bits, 1);
    let tp2 = Float::with_val(bits, &two_pi * &two_pi);
    let mut k: u32 = 1;
    loop {
        up *= &u2;
        scale /= &tp2;
        let z = Float::with_val(bits, Float::zeta_u(2 * k));
        let coef = z * &scale * 2u32 / (2 * k + 1);
        let t = up.clone() * &coef;
        let small = cabs(&t) < eps;
        if k % 2 == 1 {
            s += t;
        } else {
            s -= t;
        }
        if small {
            break;
        }
        k += 1;
    }
    s
}

/// `Li₂(w)` for `w` off the cut `(1, ∞)`.
pub fn dilog(w: &Complex) -> Result<Complex, SpecialError> {
    let bits = w.prec().0;
    let wp = Complex::with_val(bits + 16, w);
    let r = dilog_inner(&wp)?;
    Ok(Complex::with_val(bits, r))
}

fn dilog_inner(w: &Complex) -> Result<Complex, SpecialError> {
    let bits = w.prec().0;
    if w.is_zero() {
        return Ok(Complex::with_val(bits, 0));
    }
    let p = pi(bits);
    let zeta2 = Float::with_val(bits, &p * &p) / 6u32;
    let one = cone(bits);
    if *w == one {
        return Ok(Complex::with_val(bits, (zeta2, 0)));
    }
    let a = cabs(w);
    if a > 1u32 {
        if w.imag().is_zero() && w.real().is_sign_positive() {
            return Err(SpecialError::Domain("Li2 on the branch cut (1, inf)".into()));
        }
        // Li₂(w) = −π²/6 − ½log²(−w) − Li₂(1/w)
        let l = Complex::with_val(bits, -w).ln();
        let inv = dilog_inner(&w.clone().recip())?;
        return Ok(-Complex::with_val(bits, (zeta2, 0)) - Complex::with_val(bits, &l * &l) / 2u32 - inv);
    }
    if a <= 0.5 {
        return Ok(series_small(w));
    }
    if *w.real() > 0.5 {
        // Li₂(w) = π²/6 − log(w)log(1−w) − Li₂(1−w)
        let omw = one - w;
        let prod = w.clone().ln() * omw.clone().ln();
        let rest = dilog_inner(&omw)?;
        return Ok(Complex::with_val(bits, (zeta2, 0)) - prod - rest);
    }
    Ok(series_bernoulli(w))
}

pub fn dilog_real(x: &Float) -> Result<Float, SpecialError> {
    let z = dilog(&Complex::with_val(x.prec(), (x, 0)))?;
    Ok(z.real().clone())
}

/// `L(z) = Li₂(z) + ½log(z)log(1−z) − π²/6` on `(0, 1)`, so `L(1) = 0`.
pub fn rogers_l(z: &Float) -> Result<Float, SpecialError> {
    if *z <= 0u32 || *z >= 1u32 {
        return Err(SpecialError::Domain("rogers_L needs 0 < z < 1".into()));
    }
    let bits = z.prec();
    let li = dilog_real(z)?;
    let lz = z.clone().ln();
    let l1 = (Float::with_val(bits, 1) - z).ln();
    let p = pi(bits);
    Ok(li + lz * l1 / 2u32 - Float::with_val(bits, &p * &p) / 6u32)
}

/// Double-precision Rogers dilogarithm, for fast prefilters.
pub fn rogers_l_f64(z: f64) -> f64 {
    fn li2(x: f64) -> f64 {
        if x > 0.5 {
            return std::f64::consts::PI.powi(2) / 6.0 - x.ln() * (1.0 - x).ln() - li2(1.0 - x);
        }
        let mut s = 0.0;
        let mut p = x;
        for k in 1..200 {
            let t = p / (k * k) as f64;
            s += t;
            if t.abs() < 1e-18 {
                break;
            }
            p *= x;
        }
        s
    }
    li2(z) + 0.5 * z.ln() * (1.0 - z).ln() - std::f64::consts::PI.powi(2) / 6.0
}
