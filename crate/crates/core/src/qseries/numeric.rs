use rug::{Complex, Float, Rational};

use super::nahm::{nahm_series, IntForm};
use super::SeriesError;
use crate::model::{LatticeFilter, NahmData};
use crate::specialfn::num::{cabs, czero, two_pi};
use crate::specialfn::Prec;

/// A point `q` in the punctured unit disk, stored as `log q` so that `q^r = exp(r log q)`.
#[derive(Debug, Clone)]
pub struct QPoint {
    log_q: Option<Complex>,
}

impl QPoint {
    pub fn zero() -> Self {
        Self { log_q: None }
    }

    pub fn from_log(log_q: Complex) -> Self {
        Self { log_q: Some(log_q) }
    }

    /// `q = 𝐞(τ)`, so `q^r = 𝐞(rτ)`.
    pub fn from_tau(tau: &Complex) -> Self {
        let bits = tau.prec().0;
        let i2pi = Complex::with_val(bits, (0, two_pi(bits)));
        Self::from_log(i2pi * tau)
    }

    /// Real `0 < x < 1`.
    pub fn real(x: &Float) -> Self {
        Self::from_log(Complex::with_val(x.prec(), x.clone().ln()))
    }

    /// `q = e^{−1/N}`.
    pub fn exp_neg_inv(n: u32, bits: u32) -> Self {
        Self::from_log(Complex::with_val(bits, -Float::with_val(bits, n).recip()))
    }

    /// Principal logarithm of an arbitrary `q`.
    pub fn from_q(q: &Complex) -> Self {
        if q.is_zero() {
            return Self::zero();
        }
        Self::from_log(q.clone().ln())
    }

    pub fn log_q(&self) -> Option<&Complex> {
        self.log_q.as_ref()
    }

    /// `−log|q|`.
    pub fn decay(&self) -> f64 {
        self.log_q.as_ref().map_or(f64::INFINITY, |l| -l.real().to_f64())
    }

    pub fn pow(&self, r: &Rational, bits: u32) -> Complex {
        match &self.log_q {
            None => {
                if *r == 0 {
                    Complex::with_val(bits, 1)
                } else {
                    Complex::with_val(bits, 0)
                }
            }
            Some(l) => Complex::with_val(bits, l * Float::with_val(bits, r)).exp(),
        }
    }
}

/// Value of a Nahm sum together with a bound on the omitted terms.
#[derive(Debug, Clone)]
pub struct EvalResult {
    pub value: Complex,
    pub truncation_bound: Float,
    pub terms: u64,
    pub passes: u32,
}

struct Hp {
    bits: u32,
    log_q: Complex,
    /// `q^{m₀₀ s²/D₀}`, the second difference of the inner line
    second: Complex,
    q_d: Vec<Complex>,
    q_last: Vec<Complex>,
    invp: Vec<Vec<Complex>>,
}

impl Hp {
    fn invp(&mut self, i: usize, n: usize) -> &Complex {
        while self.invp[i].len() <= n {
            self.q_last[i] *= &self.q_d[i];
            let f = Complex::with_val(self.bits, 1) - &self.q_last[i];
            let next = Complex::with_val(self.bits, self.invp[i].last().unwrap() / f);
            self.invp[i].push(next);
        }
        &self.invp[i][n]
    }
}

struct Walker<'a> {
    form: &'a IntForm,
    c: Rational,
    cf: f64,
    d: Vec<u32>,
    progs: Vec<(u64, u64)>,
    t: f64,
    lcut: f64,
    lp: Vec<Vec<f64>>,
    hp: Option<Hp>,
    terms: u64,
    max_terms: u64,
}

#[derive(Debug)]
struct Acc {
    sum: Option<Complex>,
    tail: f64,
    lmax: f64,
    mass: f64,
}

fn lse(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `log(e^σ/(1−e^σ))` for `σ < 0`.
fn geometric_tail(sigma: f64) -> f64 {
    sigma - (-(sigma.exp_m1())).ln()
}

impl<'a> Walker<'a> {
    fn lp(&mut self, i: usize, n: usize) -> f64 {
        while self.lp[i].len() <= n {
            let k = self.lp[i].len() as f64;
            let x = -self.t * self.d[i] as f64 * k;
            let prev = *self.lp[i].last().unwrap();
            self.lp[i].push(prev - (-x.exp()).ln_1p());
        }
        self.lp[i][n]
    }

    fn merge(acc: &mut Acc, sub: Acc) {
        if let (Some(a), Some(b)) = (acc.sum.as_mut(), sub.sum) {
            *a += b;
        }
        acc.tail = lse(acc.tail, sub.tail);
        acc.lmax = acc.lmax.max(sub.lmax);
        acc.mass = lse(acc.mass, sub.mass);
    }

    fn empty(&self) -> Acc {
        Acc {
            sum: self.hp.as_ref().map(|h| czero(h.bits)),
            tail: f64::NEG_INFINITY,
            lmax: f64::NEG_INFINITY,
            mass: f64::NEG_INFINITY,
        }
    }

    fn line(&mut self, n: &mut [u64], outer: Option<&Complex>, outer_lp: f64) -> Result<Acc, SeriesError> {
        let (step, first) = self.progs[0];
        let d0 = self.form.d0 as f64;
        let mut acc = self.empty();
        let mut x = first;
        n[0] = x;
        let mut j = self.form.j(n);
        let m00 = self.form.m[0][0] as i128;
        let s = step as i128;
        let mut dj = {
            n[0] = x + step;
            let v = self.form.j(n) - j;
            n[0] = x;
            v
        };
        let mut state = self.hp.as_ref().map(|h| {
            let e0 = &self.c + Rational::from((j as i64, self.form.d0)) ;
            let e = Complex::with_val(h.bits, &h.log_q * Float::with_val(h.bits, &e0)).exp();
            let step_exp = Rational::from((dj as i64, self.form.d0));
            let r = Complex::with_val(h.bits, &h.log_q * Float::with_val(h.bits, &step_exp)).exp();
            (e, r)
        });
        let mut prev = f64::NEG_INFINITY;
        loop {
            let l = -self.t * (self.cf + j as f64 / d0) + self.lp(0, x as usize) + outer_lp;
            if let Some((e, r)) = state.as_mut() {
                let h = self.hp.as_mut().unwrap();
                let mut term = Complex::with_val(h.bits, &*e * h.invp(0, x as usize));
                if let Some(o) = outer {
                    term *= o;
                }
                *acc.sum.as_mut().unwrap() += term;
                *e *= &*r;
                *r *= &h.second;
            }
            self.terms += 1;
            if self.terms > self.max_terms {
                return Err(SeriesError::PrecisionUnreachable(format!(
                    "more than {} terms needed",
                    self.max_terms
                )));
            }
            acc.lmax = acc.lmax.max(l);
            acc.mass = lse(acc.mass, l);
            if l < self.lcut && l < prev {
                // concavity of the majorant along the line
                acc.tail = lse(acc.tail, l + geometric_tail(l - prev));
                break;
            }
            prev = l;
            x += step;
            j += dj;
            dj += m00 * s * s;
        }
        n[0] = 0;
        Ok(acc)
    }

    fn walk(&mut self, level: usize, n: &mut [u64], outer: Option<&Complex>, outer_lp: f64) -> Result<Acc, SeriesError> {
        if level == 0 {
            return self.line(n, outer, outer_lp);
        }
        let (step, first) = self.progs[level];
        let mut acc = self.empty();
        let mut x = first;
        let mut prev_g = f64::NEG_INFINITY;
        let mut prev_mass = f64::NEG_INFINITY;
        loop {
            n[level] = x;
            let lp = self.lp(level, x as usize);
            let prod = match (&mut self.hp, outer) {
                (Some(h), Some(o)) => Some(Complex::with_val(h.bits, o * h.invp(level, x as usize))),
                (Some(h), None) => Some(h.invp(level, x as usize).clone()),
                _ => None,
            };
            let sub = self.walk(level - 1, n, prod.as_ref(), outer_lp + lp)?;
            let g = sub.lmax;
            let mass = sub.mass;
            Self::merge(&mut acc, sub);
            let sigma = mass - prev_mass;
            if g < self.lcut && g < prev_g && sigma < -1e-3 {
                acc.tail = lse(acc.tail, mass + geometric_tail(sigma));
                break;
            }
            prev_g = g;
            prev_mass = mass;
            x += step;
        }
        n[level] = 0;
        Ok(acc)
    }
}

/// Numerical value of the (filtered) Nahm sum at `q` to `prec` significant digits.
///
/// Terms are bounded by `exp(L(n))` with `L(n) = −t·Q(n) − Σ log(1 − e^{−t d_i k})`,
/// `t = −log|q|`, which is concave in `n`. Each lattice line is summed until `L` falls
/// below the cutoff and decreases; its remainder is bounded by a geometric series.
pub fn eval_numeric(
    data: &NahmData,
    filter: &LatticeFilter,
    q: &QPoint,
    prec: Prec,
) -> Result<EvalResult, SeriesError> {
    let out_bits = prec.bits();
    let Some(log_q) = q.log_q() else {
        let s = nahm_series(data, filter, &Rational::new());
        if *s.offset() < 0 && s.coeffs().iter().any(|c| *c != 0) {
            return Err(SeriesError::PrecisionUnreachable("negative exponent at q = 0".into()));
        }
        let v = s.coeff(&Rational::new()).unwrap_or_default();
        return Ok(EvalResult {
            value: Complex::with_val(out_bits, &v),
            truncation_bound: Float::with_val(out_bits, 0),
            terms: 1,
            passes: 0,
        });
    };
    let t = q.decay();
    if !(t > 0.0) {
        return Err(SeriesError::PrecisionUnreachable("|q| must be below 1".into()));
    }
    filter.validate(data.rank())?;
    let form = IntForm::new(data);
    let n = data.rank();
    let progs: Vec<(u64, u64)> = (0..n).map(|i| filter.progression(i)).collect();
    if progs.iter().any(|p| p.0 == 0) {
        return Ok(EvalResult {
            value: czero(out_bits),
            truncation_bound: Float::with_val(out_bits, 0),
            terms: 0,
            passes: 0,
        });
    }
    let ln10 = std::f64::consts::LN_10;
    let digits = prec.digits as f64;
    let mut walker = Walker {
        form: &form,
        c: data.c().clone(),
        cf: data.c().to_f64(),
        d: data.d().to_vec(),
        progs,
        t,
        lcut: 0.0,
        lp: vec![vec![0.0]; n],
        hp: None,
        terms: 0,
        max_terms: 200_000_000,
    };

    // majorant-only pass to locate the bulk of the sum
    let mut origin = vec![0u64; n];
    for i in 0..n {
        origin[i] = walker.progs[i].1;
    }
    let l_first = -t * (walker.cf + form.j(&origin) as f64 / form.d0 as f64);
    walker.lcut = l_first - (digits + 20.0) * ln10;
    let mut idx = vec![0u64; n];
    let probe = walker.walk(n - 1, &mut idx, None, 0.0)?;
    let mass = probe.mass;
    let mut terms_est = walker.terms.max(1) as f64;
    let mut log_abs = mass;

    for pass in 1..=8u32 {
        let cancel = (mass - log_abs).max(0.0);
        let extra = (cancel * std::f64::consts::LOG2_E + terms_est.log2()).ceil() as u32 + 16;
        let bits = out_bits + extra;
        let log_q = Complex::with_val(bits, log_q);
        let s = walker.progs[0].0 as i64;
        let second_exp = Rational::from((form.m[0][0] * s * s, form.d0));
        let second = Complex::with_val(bits, &log_q * Float::with_val(bits, &second_exp)).exp();
        let q_d: Vec<Complex> = data
            .d()
            .iter()
            .map(|&di| Complex::with_val(bits, &log_q * di).exp())
            .collect();
        walker.hp = Some(Hp {
            bits,
            log_q,
            second,
            q_last: vec![Complex::with_val(bits, 1); n],
            q_d,
            invp: vec![vec![Complex::with_val(bits, 1)]; n],
        });
        walker.lcut = log_abs - (digits + 6.0) * ln10 - terms_est.ln();
        walker.terms = 0;
        let mut idx = vec![0u64; n];
        let acc = walker.walk(n - 1, &mut idx, None, 0.0)?;
        terms_est = walker.terms.max(1) as f64;
        let value = acc.sum.unwrap();
        let abs = cabs(&value);
        let new_log_abs = if abs.is_zero() { f64::NEG_INFINITY } else { abs.clone().ln().to_f64() };
        let tail_ok = acc.tail <= new_log_abs - digits * ln10;
        let bits_ok = (acc.mass - new_log_abs) * std::f64::consts::LOG2_E <= (extra as f64 - 8.0);
        if tail_ok && bits_ok && new_log_abs.is_finite() {
            let bound = Float::with_val(out_bits, acc.tail).exp();
            return Ok(EvalResult {
                value: Complex::with_val(out_bits, value),
                truncation_bound: bound,
                terms: walker.terms,
                passes: pass,
            });
        }
        if !new_log_abs.is_finite() {
            log_abs -= 50.0;
        } else {
            log_abs = new_log_abs.min(log_abs - 1.0);
        }
    }
    Err(SeriesError::PrecisionUnreachable(format!(
        "no stable value after 8 passes (|sum| ≈ e^{log_abs:.1})"
    )))
}

/// `log f(q)` in double precision for real `0 < q < 1`, where every term is positive and the
/// majorant is the summand itself. Used as a cheap filter before [`eval_numeric`].
pub fn log_sum_real_f64(data: &NahmData, filter: &LatticeFilter, t: f64) -> Result<f64, SeriesError> {
    if !(t > 0.0) {
        return Err(SeriesError::PrecisionUnreachable("|q| must be below 1".into()));
    }
    filter.validate(data.rank())?;
    let form = IntForm::new(data);
    let n = data.rank();
    let progs: Vec<(u64, u64)> = (0..n).map(|i| filter.progression(i)).collect();
    if progs.iter().any(|p| p.0 == 0) {
        return Ok(f64::NEG_INFINITY);
    }
    let mut walker = Walker {
        form: &form,
        c: data.c().clone(),
        cf: data.c().to_f64(),
        d: data.d().to_vec(),
        progs,
        t,
        lcut: 0.0,
        lp: vec![vec![0.0]; n],
        hp: None,
        terms: 0,
        max_terms: 200_000_000,
    };
    let origin: Vec<u64> = (0..n).map(|i| walker.progs[i].1).collect();
    let l_first = -t * (walker.cf + form.j(&origin) as f64 / form.d0 as f64);
    walker.lcut = l_first - 45.0 * std::f64::consts::LN_10;
    let mut idx = vec![0u64; n];
    let probe = walker.walk(n - 1, &mut idx, None, 0.0)?;
    walker.lcut = probe.mass - 40.0 * std::f64::consts::LN_10;
    walker.terms = 0;
    let acc = walker.walk(n - 1, &mut idx, None, 0.0)?;
    Ok(acc.mass)
}
