//! Truncated series in `ε^{1/2}`, with scalar or polynomial coefficients, and the
//! Gaussian moments that turn the latter into the former.

use std::collections::{BTreeMap, HashMap};

use rug::{Complex, Float, Rational};

use super::AsymptoticsError;
use crate::specialfn::bernoulli::bernoulli_shift_coeffs;
use crate::specialfn::num::{cabs, czero};
use crate::specialfn::polylog::polylog_nonpositive;
use crate::specialfn::RootOfUnity;

/// `Σ_{k=0}^{2K} c_k ε^{k/2}`.
#[derive(Debug, Clone)]
pub struct FormalSeries {
    coeffs: Vec<Complex>,
}

impl FormalSeries {
    pub fn zero(order: usize, bits: u32) -> Self {
        Self { coeffs: vec![czero(bits); 2 * order + 1] }
    }

    pub fn constant(order: usize, v: Complex) -> Self {
        let bits = v.prec().0;
        let mut s = Self::zero(order, bits);
        s.coeffs[0] = v;
        s
    }

    /// From coefficients of `ε^{k/2}`; the length must be odd.
    pub fn from_coeffs(coeffs: Vec<Complex>) -> Self {
        assert!(coeffs.len() % 2 == 1, "need 2K+1 half-integer coefficients");
        Self { coeffs }
    }

    /// Truncation order `K` in integer powers of `ε`.
    pub fn order(&self) -> usize {
        self.coeffs.len() / 2
    }

    pub fn bits(&self) -> u32 {
        self.coeffs[0].prec().0
    }

    /// Coefficient of `ε^{k/2}`.
    pub fn half(&self, k: usize) -> &Complex {
        &self.coeffs[k]
    }

    /// Coefficient of `ε^k`.
    pub fn coeff(&self, k: usize) -> &Complex {
        &self.coeffs[2 * k]
    }

    pub fn coeffs(&self) -> &[Complex] {
        &self.coeffs
    }

    /// Largest absolute value among the half-integer coefficients.
    pub fn max_odd(&self) -> Float {
        let mut m = Float::with_val(self.bits(), 0);
        for c in self.coeffs.iter().skip(1).step_by(2) {
            let a = cabs(c);
            if a > m {
                m = a;
            }
        }
        m
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.coeffs.len(), other.coeffs.len());
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| Complex::with_val(a.prec(), a + b)).collect();
        Self { coeffs }
    }

    pub fn scale(&self, s: &Complex) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| Complex::with_val(c.prec(), c * s)).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.coeffs.len(), other.coeffs.len());
        let n = self.coeffs.len();
        let bits = self.bits();
        let mut out = vec![czero(bits); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs[..n - i].iter().enumerate() {
                out[i + j] += Complex::with_val(bits, a * b);
            }
        }
        Self { coeffs: out }
    }

    /// `exp` of the series; a nonzero constant term is factored out as `e^{c₀}`.
    pub fn exp(&self) -> Self {
        let n = self.coeffs.len();
        let bits = self.bits();
        let mut e = vec![czero(bits); n];
        e[0] = Complex::with_val(bits, 1);
        // g·E_g = Σ_{k=1}^{g} k·P_k·E_{g−k}
        for g in 1..n {
            let mut acc = czero(bits);
            for k in 1..=g {
                acc += Complex::with_val(bits, &self.coeffs[k] * &e[g - k]) * (k as u32);
            }
            e[g] = acc / (g as u32);
        }
        let c0 = self.coeffs[0].clone().exp();
        Self { coeffs: e.into_iter().map(|c| c * &c0).collect() }
    }

    /// `Σ_k c_k ε^{k/2}` at a numeric `ε > 0`.
    pub fn eval(&self, eps: &Float) -> Complex {
        let bits = self.bits();
        let root = Float::with_val(bits, eps.sqrt_ref());
        let mut acc = czero(bits);
        for c in self.coeffs.iter().rev() {
            acc *= &root;
            acc += c;
        }
        acc
    }
}

/// Multivariate polynomial in `x₁..x_N`, keyed by exponent vectors.
pub type Poly = BTreeMap<Vec<u32>, Complex>;

fn poly_add_scaled(out: &mut Poly, p: &Poly, s: &Complex) {
    for (k, v) in p {
        let t = Complex::with_val(v.prec(), v * s);
        match out.get_mut(k) {
            Some(e) => *e += t,
            None => {
                out.insert(k.clone(), t);
            }
        }
    }
}

fn poly_mul(a: &Poly, b: &Poly, cap: u32) -> Poly {
    let mut out = Poly::new();
    for (ka, va) in a {
        let da: u32 = ka.iter().sum();
        for (kb, vb) in b {
            let db: u32 = kb.iter().sum();
            if da + db > cap {
                continue;
            }
            let key: Vec<u32> = ka.iter().zip(kb).map(|(x, y)| x + y).collect();
            let t = Complex::with_val(va.prec(), va * vb);
            match out.get_mut(&key) {
                Some(e) => *e += t,
                None => {
                    out.insert(key, t);
                }
            }
        }
    }
    out
}

/// `Σ_g P_g(x) ε^{g/2}` with polynomial coefficients.
#[derive(Debug, Clone)]
pub struct PolySeries {
    nvars: usize,
    terms: Vec<Poly>,
    cap: u32,
}

impl PolySeries {
    /// Degree cap `6K`: a grading-`g` factor of the integrand has degree at most `g + 2`,
    /// so products reaching grading `2K` stay below `3·2K`.
    pub fn zero(nvars: usize, order: usize) -> Self {
        Self { nvars, terms: vec![Poly::new(); 2 * order + 1], cap: 6 * order as u32 }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.terms.len() / 2
    }

    pub fn degree_cap(&self) -> u32 {
        self.cap
    }

    pub fn grading(&self, g: usize) -> &Poly {
        &self.terms[g]
    }

    /// Adds `v·x^{mono}·ε^{g/2}`; terms beyond the order or degree cap are dropped.
    pub fn add_term(&mut self, g: usize, mono: Vec<u32>, v: Complex) {
        assert_eq!(mono.len(), self.nvars);
        if g >= self.terms.len() || mono.iter().sum::<u32>() > self.cap {
            return;
        }
        match self.terms[g].get_mut(&mono) {
            Some(e) => *e += v,
            None => {
                self.terms[g].insert(mono, v);
            }
        }
    }

    /// Adds a one-variable series into coordinate `i`.
    pub fn add_embedded(&mut self, other: &PolySeries, i: usize) {
        assert_eq!(other.nvars, 1);
        for (g, p) in other.terms.iter().enumerate() {
            for (k, v) in p {
                let mut mono = vec![0; self.nvars];
                mono[i] = k[0];
                self.add_term(g, mono, v.clone());
            }
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.terms.len();
        let mut out = Self { nvars: self.nvars, terms: vec![Poly::new(); n], cap: self.cap };
        let one = Complex::with_val(64, 1);
        for i in 0..n {
            for j in 0..n - i {
                if self.terms[i].is_empty() || other.terms[j].is_empty() {
                    continue;
                }
                let p = poly_mul(&self.terms[i], &other.terms[j], self.cap);
                poly_add_scaled(&mut out.terms[i + j], &p, &one);
            }
        }
        out
    }

    /// `exp` of a series without a grading-zero part.
    pub fn exp(&self, bits: u32) -> Self {
        assert!(self.terms[0].is_empty(), "exp needs a series without constant grading");
        let n = self.terms.len();
        let mut e: Vec<Poly> = vec![Poly::new(); n];
        e[0].insert(vec![0; self.nvars], Complex::with_val(bits, 1));
        for g in 1..n {
            let mut acc = Poly::new();
            for k in 1..=g {
                if self.terms[k].is_empty() || e[g - k].is_empty() {
                    continue;
                }
                let p = poly_mul(&self.terms[k], &e[g - k], self.cap);
                let w = Complex::with_val(bits, k as u32) / g as u32;
                poly_add_scaled(&mut acc, &p, &w);
            }
            e[g] = acc;
        }
        Self { nvars: self.nvars, terms: e, cap: self.cap }
    }

    /// Applies a linear functional monomial by monomial.
    pub fn integrate<F: FnMut(&[u32]) -> Float>(&self, mut moment: F, bits: u32) -> FormalSeries {
        let coeffs = self
            .terms
            .iter()
            .map(|p| {
                let mut acc = czero(bits);
                for (k, v) in p {
                    let m = moment(k);
                    if !m.is_zero() {
                        acc += Complex::with_val(bits, v * &m);
                    }
                }
                acc
            })
            .collect();
        FormalSeries::from_coeffs(coeffs)
    }
}

/// Centered Gaussian moments `E[∏ x_i^{k_i}]` with covariance `C`, memoized.
pub struct GaussianMoments {
    cov: Vec<Vec<Float>>,
    memo: HashMap<Vec<u32>, Float>,
    bits: u32,
}

impl GaussianMoments {
    /// `cov` must be symmetric positive definite.
    pub fn new(cov: Vec<Vec<Float>>) -> Result<Self, AsymptoticsError> {
        let n = cov.len();
        let bits = cov[0][0].prec();
        for i in 0..n {
            for j in 0..i {
                let diff = Float::with_val(bits, &cov[i][j] - &cov[j][i]).abs();
                let scale = Float::with_val(bits, cov[i][j].abs_ref()) + 1u32;
                if diff > scale * Float::with_val(bits, Float::u_exp(1, 20 - bits as i32)) {
                    return Err(AsymptoticsError::NotPositiveDefinite);
                }
            }
        }
        // Cholesky as the definiteness test.
        let mut l = vec![vec![Float::new(bits); n]; n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = cov[i][j].clone();
                for k in 0..j {
                    s -= Float::with_val(bits, &l[i][k] * &l[j][k]);
                }
                if i == j {
                    if s <= 0u32 {
                        return Err(AsymptoticsError::NotPositiveDefinite);
                    }
                    l[i][j] = s.sqrt();
                } else {
                    l[i][j] = s / &l[j][j];
                }
            }
        }
        Ok(Self { cov, memo: HashMap::new(), bits })
    }

    pub fn moment(&mut self, k: &[u32]) -> Float {
        let total: u32 = k.iter().sum();
        if total % 2 == 1 {
            return Float::new(self.bits);
        }
        if total == 0 {
            return Float::with_val(self.bits, 1);
        }
        if let Some(v) = self.memo.get(k) {
            return v.clone();
        }
        // E[x_i x^β] = Σ_j C_ij β_j E[x^{β−e_j}]
        let i = k.iter().position(|&e| e > 0).unwrap();
        let mut beta = k.to_vec();
        beta[i] -= 1;
        let mut acc = Float::new(self.bits);
        for j in 0..k.len() {
            if beta[j] == 0 || self.cov[i][j].is_zero() {
                continue;
            }
            let mut rest = beta.clone();
            rest[j] -= 1;
            let m = self.moment(&rest);
            acc += Float::with_val(self.bits, &self.cov[i][j] * &m) * beta[j];
        }
        self.memo.insert(k.to_vec(), acc.clone());
        acc
    }
}

/// One-shot [`GaussianMoments::moment`].
pub fn gaussian_moment(cov: &[Vec<Float>], k: &[u32]) -> Result<Float, AsymptoticsError> {
    Ok(GaussianMoments::new(cov.to_vec())?.moment(k))
}

/// `ψ_{w,ζ}(x ε^{−1/2}, d·ε)` as a one-variable series in `x` graded by `ε^{1/2}`.
///
/// The `ν^j ε^{r−1}` term of `ψ` lands in grading `2r − 2 − j`, so orders `r ≤ 2K + 2` suffice.
pub fn psi_series(w: &Complex, ctx: &RootOfUnity, d: u32, order: usize) -> Result<PolySeries, AsymptoticsError> {
    let bits = w.prec().0;
    let m = ctx.m as i64;
    let mut out = PolySeries::zero(1, order);
    let max_g = 2 * order as i64;
    let lis: Vec<Vec<Complex>> = (2..=(max_g + 2) as u32)
        .map(|r| {
            (1..=m)
                .map(|t| {
                    let x = Complex::with_val(bits, &ctx.zeta_pow(t, bits) * w);
                    polylog_nonpositive(2 - r as i32, &x)
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let s = Rational::from((-1, m));
    let mut fact = Rational::from(1);
    let mut dpow = Rational::from(1);
    for r in 2..=(max_g + 2) as u32 {
        fact *= r;
        dpow *= d;
        let jmin = (2 * r as i64 - 2 - max_g).max(0) as u32;
        for j in jmin..=r {
            let g = 2 * r as i64 - 2 - j as i64;
            if g < 0 {
                continue;
            }
            let mut acc = czero(bits);
            for t in 1..=m {
                let a = Rational::from(1) - Rational::from((t, m));
                let mut cr = bernoulli_shift_coeffs(r, &a, &s)[j as usize].clone();
                if r == 2 && j == 2 {
                    cr -= Rational::from((1, m * m));
                }
                if cr == 0 {
                    continue;
                }
                acc += Complex::with_val(bits, &lis[(r - 2) as usize][(t - 1) as usize] * Float::with_val(bits, &cr));
            }
            let scale = Float::with_val(bits, Rational::from(&dpow / &fact));
            acc *= -scale;
            if !acc.is_zero() {
                out.add_term(g as usize, vec![j], acc);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::q;
    use crate::specialfn::bernoulli::bernoulli_poly;
    use crate::specialfn::num::rel_err;

    const B: u32 = 200;

    fn f(x: f64) -> Float {
        Float::with_val(B, x)
    }

    #[test]
    fn series_exp_and_mul() {
        let mut c = vec![czero(B); 7];
        c[2] = Complex::with_val(B, 3);
        let s = FormalSeries::from_coeffs(c);
        let e = s.exp();
        // exp(3ε) = 1 + 3ε + 9/2 ε² + 9/2 ε³
        let want = [1.0, 0.0, 3.0, 0.0, 4.5, 0.0, 4.5];
        for (k, w) in want.iter().enumerate() {
            assert!(cabs(&(e.half(k).clone() - *w)) < 1e-50);
        }
        let sq = e.mul(&e);
        assert!(cabs(&(sq.coeff(2).clone() - 18.0)) < 1e-50);
        let v = e.eval(&f(0.01));
        assert!(cabs(&(v - 1.030_454_5)) < 1e-9);
        let with_const = FormalSeries::constant(3, Complex::with_val(B, 2)).exp();
        assert!(cabs(&(with_const.coeff(0).clone() - f(2.0).exp())) < 1e-50);
    }

    #[test]
    fn moments_one_and_two_variables() {
        let a = f(2.5);
        let cov = vec![vec![Float::with_val(B, 1) / &a]];
        assert_eq!(gaussian_moment(&cov, &[0]).unwrap(), 1);
        assert!((gaussian_moment(&cov, &[2]).unwrap() - Float::with_val(B, 2) / 5u32).abs() < 1e-55);
        assert!((gaussian_moment(&cov, &[4]).unwrap() - Float::with_val(B, 12) / 25u32).abs() < 1e-55);
        assert!(gaussian_moment(&cov, &[5]).unwrap().is_zero());
        let cov2 = vec![vec![f(2.0), f(0.5)], vec![f(0.5), f(1.0)]];
        assert!((gaussian_moment(&cov2, &[1, 1]).unwrap() - f(0.5)).abs() < 1e-55);
        // E[x²y²] = C11 C22 + 2 C12²
        assert!((gaussian_moment(&cov2, &[2, 2]).unwrap() - f(2.5)).abs() < 1e-55);
        let bad = vec![vec![f(1.0), f(2.0)], vec![f(2.0), f(1.0)]];
        assert!(matches!(GaussianMoments::new(bad), Err(AsymptoticsError::NotPositiveDefinite)));
    }

    /// Moments against the Hermite recursion `E[x^{n+2}] = (n+1) σ² E[x^n]`.
    #[test]
    fn moments_match_double_factorial() {
        let s2 = f(0.7);
        let mut g = GaussianMoments::new(vec![vec![s2.clone()]]).unwrap();
        let mut want = Float::with_val(B, 1);
        for n in (0..20u32).step_by(2) {
            assert!(rel_err(&Complex::with_val(B, g.moment(&[n])), &Complex::with_val(B, &want)) < 1e-50);
            want *= Float::with_val(B, &s2 * (n + 1));
        }
    }

    #[test]
    fn psi_has_no_quadratic_r2_term_and_lowest_order() {
        let ctx = RootOfUnity::new(&q("1/3"));
        let w = Complex::with_val(B, (0.4, 0.1));
        let psi = psi_series(&w, &ctx, 1, 2).unwrap();
        assert!(psi.grading(0).is_empty());
        // Grading 2 with x⁰ comes from r = 2, j = 0 only: −Σ_t B₂(1−t/m) Li₀(ζᵗw)/2.
        let mut want = czero(B);
        for t in 1..=3i64 {
            let x = Complex::with_val(B, &ctx.zeta_pow(t, B) * &w);
            let b2 = bernoulli_poly(2, &(Rational::from(1) - Rational::from((t, 3))));
            want -= polylog_nonpositive(0, &x).unwrap() * Float::with_val(B, b2) / 2u32;
        }
        assert!(rel_err(psi.grading(2).get(&vec![0]).unwrap(), &want) < 1e-50);
    }

    /// At `m = 1`, `r = 2`: `−(B₂(−ν) − ν²)Li₀(w)ε/2 = −(ν + 1/6)Li₀(w)ε/2`,
    /// `r = 3`: `−B₃(−ν)Li_{−1}(w)ε²/6` with `B₃(−ν) = −ν³ − 3ν²/2 − ν/2`.
    #[test]
    fn psi_trivial_root_by_hand() {
        let ctx = RootOfUnity::trivial();
        let w = Complex::with_val(B, (0.3, 0.0));
        let l0 = polylog_nonpositive(0, &w).unwrap();
        let l1 = polylog_nonpositive(-1, &w).unwrap();
        let psi = psi_series(&w, &ctx, 1, 1).unwrap();
        // grading 1: ν-term of r=2 (−Li₀/2 · x) and ν³-term of r=3 (+Li₋₁/6 · x³)
        let g1 = psi.grading(1);
        assert!(rel_err(g1.get(&vec![1]).unwrap(), &(-l0.clone() / 2u32)) < 1e-50);
        assert!(rel_err(g1.get(&vec![3]).unwrap(), &(l1.clone() / 6u32)) < 1e-50);
        assert_eq!(g1.len(), 2);
        // grading 2 contains −Li₀/12 at x⁰ and +Li₋₁/4 at x²
        let g2 = psi.grading(2);
        assert!(rel_err(g2.get(&vec![0]).unwrap(), &(-l0 / 12u32)) < 1e-50);
        assert!(rel_err(g2.get(&vec![2]).unwrap(), &(l1 / 4u32)) < 1e-50);
    }

    #[test]
    fn poly_exp_matches_square() {
        let mut p = PolySeries::zero(2, 2);
        p.add_term(1, vec![1, 0], Complex::with_val(B, 2));
        p.add_term(1, vec![0, 1], Complex::with_val(B, -1));
        let e = p.exp(B);
        let sq = p.mul(&p);
        for (k, v) in sq.grading(2) {
            let half = Complex::with_val(B, v / 2u32);
            assert!(rel_err(e.grading(2).get(k).unwrap(), &half) < 1e-50);
        }
        assert_eq!(e.grading(0).get(&vec![0, 0]).unwrap().real().to_f64(), 1.0);
    }
}
