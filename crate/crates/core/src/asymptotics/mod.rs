//! Radial asymptotics of Nahm sums at roots of unity.
//!
//! For `ζ = 𝐞(α)`, `α = a/m`, the expansion reads
//! `e^{−Λ/(mε)} f̃(α + iε/(2πm)) ~ m^{−N/2} χ(d,α) c(Q) G(Q,α) S_{Q,ζ}(ε)`
//! where `S` is a finite sum over `k ∈ (ℤ/m)^N` of formal Gaussian integrals.

pub mod formal;

use rug::{Complex, Float, Rational};
use serde::Serialize;
use thiserror::Error;

pub use formal::{gaussian_moment, psi_series, FormalSeries, GaussianMoments, PolySeries};

use crate::model::{gcd_u64, LatticeFilter, NahmData};
use crate::qseries::{eval_numeric, QPoint, SeriesError};
use crate::solver::{detect_rational, solve_nahm, NahmSolution, SolverError};
use crate::specialfn::num::{cabs, cone, cpow_int, czero, det_real, e_rat, float, fmt_complex, fmt_float, fpow_rat, inverse_real, pi, rel_err, ten_pow};
use crate::specialfn::{chi_factor, cyclic_dilog, gauss_sum, poch, reduce_mod_m, Prec, RootOfUnity, SpecialError};

/// Sign in `e^{−σΛ/(mε)}`. The literal reading `σ = +1` gives finite radial limits,
/// which the tests confirm on the Rogers–Ramanujan data.
pub const SIGMA: i32 = 1;

#[derive(Debug, Error)]
pub enum AsymptoticsError {
    #[error("covariance is not positive definite")]
    NotPositiveDefinite,
    #[error("order m = {m} shares a factor with {what}")]
    NotCoprime { m: u64, what: String },
    #[error("parity cancellation failed: half-integer coefficient {0}")]
    Parity(String),
    #[error(transparent)]
    Special(#[from] SpecialError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Everything the expansion needs at one root of unity.
#[derive(Debug, Clone)]
pub struct Setup {
    pub data: NahmData,
    pub ctx: RootOfUnity,
    pub sol: NahmSolution,
    /// `θ_i = z_i^{1/m}`
    pub theta: Vec<Float>,
    /// `Ã = A + diag(z/(1−z))`
    pub a_tilde: Vec<Vec<Float>>,
    pub bits: u32,
}

impl Setup {
    /// Solves Nahm's equation and checks `gcd(m, δ) = gcd(m, d_i) = 1`.
    pub fn new(data: &NahmData, alpha: &Rational, prec: Prec) -> Result<Self, AsymptoticsError> {
        let sol = solve_nahm(data, prec.plus(10))?;
        Self::with_solution(data, alpha, sol)
    }

    pub fn with_solution(data: &NahmData, alpha: &Rational, sol: NahmSolution) -> Result<Self, AsymptoticsError> {
        let ctx = RootOfUnity::new(alpha);
        let m = ctx.m;
        let delta = data.strong_denominator_strict();
        if gcd_u64(m, delta) != 1 {
            return Err(AsymptoticsError::NotCoprime { m, what: format!("strong denominator {delta}") });
        }
        for &di in data.d() {
            if gcd_u64(m, di as u64) != 1 {
                return Err(AsymptoticsError::NotCoprime { m, what: format!("d_i = {di}") });
            }
        }
        let bits = sol.bits();
        let n = data.rank();
        let inv_m = Rational::from((1, m));
        let theta = sol.z.iter().map(|z| fpow_rat(z, &inv_m)).collect();
        let mut a_tilde = vec![vec![Float::new(bits); n]; n];
        for i in 0..n {
            for j in 0..n {
                a_tilde[i][j] = float(bits, &data.a()[i][j]);
            }
            let z = &sol.z[i];
            a_tilde[i][i] += Float::with_val(bits, z / Float::with_val(bits, 1 - z));
        }
        Ok(Self { data: data.clone(), ctx, sol, theta, a_tilde, bits })
    }

    pub fn m(&self) -> u64 {
        self.ctx.m
    }

    /// `ÃD`, symmetric positive definite.
    pub fn a_tilde_d(&self) -> Vec<Vec<Float>> {
        let d = self.data.d();
        self.a_tilde
            .iter()
            .map(|row| row.iter().zip(d).map(|(x, &dj)| Float::with_val(self.bits, x * dj)).collect())
            .collect()
    }

    /// Covariance `m·(ÃD)⁻¹` of the formal Gaussian integral.
    pub fn covariance(&self) -> Result<Vec<Vec<Float>>, AsymptoticsError> {
        let inv = inverse_real(&self.a_tilde_d()).ok_or(AsymptoticsError::NotPositiveDefinite)?;
        let m = self.m() as u32;
        Ok(inv.into_iter().map(|row| row.into_iter().map(|x| x * m).collect()).collect())
    }

    fn zeta_i(&self, i: usize) -> RootOfUnity {
        self.ctx.power(self.data.d()[i] as i64)
    }

    fn complex(&self, x: &Float) -> Complex {
        Complex::with_val(self.bits, (x, 0))
    }

    /// `ζ^{Q(k)‾}` for the form without `c`.
    fn zeta_q(&self, k: &[i64]) -> Result<Complex, AsymptoticsError> {
        let v = self.data.with_c(Rational::new()).quadratic_form_unchecked(k);
        let t = reduce_mod_m(&v, self.m())
            .ok_or_else(|| AsymptoticsError::NotCoprime { m: self.m(), what: format!("denominator of Q(k) = {v}") })?;
        Ok(self.ctx.zeta_pow(t, self.bits))
    }

    /// `(kᵀA)_i`
    fn ka(&self, k: &[i64], i: usize) -> Rational {
        let mut s = Rational::new();
        for (j, &kj) in k.iter().enumerate() {
            s += Rational::from(&self.data.a()[j][i] * kj);
        }
        s
    }

    /// All `k ∈ {0..m−1}^N` in lexicographic order.
    pub fn residues(&self) -> Vec<Vec<i64>> {
        let n = self.data.rank();
        let m = self.m() as i64;
        let mut out = Vec::new();
        let mut k = vec![0i64; n];
        loop {
            out.push(k.clone());
            let mut i = 0;
            while i < n {
                k[i] += 1;
                if k[i] < m {
                    break;
                }
                k[i] = 0;
                i += 1;
            }
            if i == n {
                return out;
            }
        }
    }
}

/// `ζ^{Q(k)‾} ∏ θ_i^{(kᵀA)_i}/(ζ_iθ_i;ζ_i)_{k_i}`, with `θ_i` optionally twisted by `ζ_i^{e_i}`.
pub fn summand(setup: &Setup, k: &[i64], twist: Option<&[i64]>) -> Result<Complex, AsymptoticsError> {
    let bits = setup.bits;
    let mut v = setup.zeta_q(k)?;
    for i in 0..k.len() {
        let zi = setup.zeta_i(i);
        let e = twist.map_or(0, |t| t[i]);
        let x = setup.ka(k, i);
        v *= theta_pow(setup, i, &x, e)?;
        let th = zi.zeta_pow(1 + e, bits) * setup.complex(&setup.theta[i]);
        v /= poch(&th, &zi.zeta(bits), k[i]);
    }
    Ok(v)
}

/// `θ_i^x` under `θ_i ↦ ζ_i^{e}θ_i`, i.e. `θ_i^x · ζ^{(d_i e x)‾}` for `x` with denominator prime to `m`.
fn theta_pow(setup: &Setup, i: usize, x: &Rational, e: i64) -> Result<Complex, AsymptoticsError> {
    let base = setup.complex(&fpow_rat(&setup.theta[i], x));
    if e == 0 {
        return Ok(base);
    }
    let ph = Rational::from(x * (setup.data.d()[i] as i64 * e));
    let t = reduce_mod_m(&ph, setup.m())
        .ok_or_else(|| AsymptoticsError::NotCoprime { m: setup.m(), what: format!("denominator of {x}") })?;
    Ok(base * setup.ctx.zeta_pow(t, setup.bits))
}

/// `I_{Q,ζ}(k, ε)` to order `ε^K`; the half-integer coefficients are returned as computed.
pub fn i_series(
    setup: &Setup,
    k: &[i64],
    order: usize,
    moments: &mut GaussianMoments,
) -> Result<FormalSeries, AsymptoticsError> {
    let bits = setup.bits;
    let data = &setup.data;
    let n = data.rank();
    let m = setup.m();
    let mut expo = PolySeries::zero(n, order);
    for i in 0..n {
        let mut mono = vec![0; n];
        mono[i] = 1;
        let v = -float(bits, &data.b()[i]) / m as u32;
        expo.add_term(1, mono, Complex::with_val(bits, (v, 0)));
    }
    let shift = data.c() + Rational::from((data.trace_d(), 24));
    let cterm = -float(bits, &shift) / m as u32;
    expo.add_term(2, vec![0; n], Complex::with_val(bits, (cterm, 0)));
    for i in 0..n {
        let zi = setup.zeta_i(i);
        let w = zi.zeta_pow(k[i], bits) * setup.complex(&setup.theta[i]);
        let psi = psi_series(&w, &zi, data.d()[i], order)?;
        expo.add_embedded(&psi, i);
    }
    let e = expo.exp(bits);
    Ok(e.integrate(|mono| moments.moment(mono), bits))
}

/// `c(Q) = (det Ã)^{−1/2} ∏ θ_i^{b_i/d_i} (1−z_i)^{1/2−1/m}`.
pub fn c_of_q(setup: &Setup) -> Result<Float, AsymptoticsError> {
    let bits = setup.bits;
    let det = det_real(&setup.a_tilde);
    if det <= 0u32 {
        return Err(AsymptoticsError::NotPositiveDefinite);
    }
    let mut out = det.sqrt().recip();
    let ex = Rational::from((1, 2)) - Rational::from((1, setup.m()));
    for i in 0..setup.data.rank() {
        let bi = Rational::from(&setup.data.b()[i] / setup.data.d()[i]);
        out *= fpow_rat(&setup.theta[i], &bi);
        let om = Float::with_val(bits, 1 - &setup.sol.z[i]);
        out *= fpow_rat(&om, &ex);
    }
    Ok(out)
}

/// `∏ D_{ζ_i}(ζ_iθ_i)^{−1/m}` on the principal branch, and whether some `D` value sits
/// within `10⁻⁶` radians of the negative real axis.
fn d_factor(setup: &Setup, twist: Option<&[i64]>) -> (Complex, Complex, bool) {
    let bits = setup.bits;
    let m = setup.m();
    let mut root = cone(bits);
    let mut full = cone(bits);
    let mut warn = false;
    for i in 0..setup.data.rank() {
        let zi = setup.zeta_i(i);
        let e = twist.map_or(0, |t| t[i]);
        let x = zi.zeta_pow(1 + e, bits) * setup.complex(&setup.theta[i]);
        let dv = cyclic_dilog(&zi, &x);
        if m > 1 {
            let arg = dv.clone().arg().real().to_f64();
            if (std::f64::consts::PI - arg.abs()) < 1e-6 {
                warn = true;
            }
        }
        let r = Complex::with_val(bits, dv.clone().ln() / m as u32).exp();
        root /= r;
        full /= dv;
    }
    (root, full, warn)
}

/// `S_{Q,ζ}(ε)` together with the branch flag.
#[derive(Debug, Clone)]
pub struct SSeries {
    pub series: FormalSeries,
    /// The `k`-sum at `ε⁰` times the `D` factor.
    pub constant: Complex,
    pub branch_warning: bool,
    /// Largest half-integer coefficient over all `I(k, ε)`.
    pub parity_defect: Float,
}

pub fn s_series(setup: &Setup, order: usize) -> Result<SSeries, AsymptoticsError> {
    let bits = setup.bits;
    let mut moments = GaussianMoments::new(setup.covariance()?)?;
    let mut total = FormalSeries::zero(order, bits);
    let mut ksum = czero(bits);
    let mut parity = Float::with_val(bits, 0);
    for k in setup.residues() {
        let w = summand(setup, &k, None)?;
        let is = i_series(setup, &k, order, &mut moments)?;
        let odd = is.max_odd();
        if odd > parity {
            parity = odd;
        }
        ksum += &w;
        total = total.add(&is.scale(&w));
    }
    if parity > ten_pow(-(bits as f64 * 0.301 * 0.8) as i32, bits) {
        return Err(AsymptoticsError::Parity(fmt_float(&parity, 6)));
    }
    let (dfac, _, warn) = d_factor(setup, None);
    let even: Vec<Complex> = total
        .coeffs()
        .iter()
        .enumerate()
        .map(|(j, c)| if j % 2 == 1 { czero(bits) } else { Complex::with_val(bits, c * &dfac) })
        .collect();
    Ok(SSeries {
        series: FormalSeries::from_coeffs(even),
        constant: ksum * &dfac,
        branch_warning: warn,
        parity_defect: parity,
    })
}

/// `m^{−N/2} χ(d,α) c(Q) G(Q,α)`, with the `c`-part of the Gauss sum split off as `𝐞(cα)`.
pub fn prefactor(setup: &Setup) -> Result<Complex, AsymptoticsError> {
    let bits = setup.bits;
    let data = &setup.data;
    let alpha = &setup.ctx.alpha;
    let n = data.rank() as i32;
    let mpow = rug::ops::Pow::pow(Float::with_val(bits, setup.m()), Float::with_val(bits, -n) / 2u32);
    let chi = chi_factor(data.d(), alpha, bits);
    let g = gauss_sum(&data.with_c(Rational::new()), alpha, bits)?;
    let ec = e_rat(&Rational::from(data.c() * alpha), bits);
    let cq = c_of_q(setup)?;
    Ok(chi * g * ec * cq * mpow)
}

/// The constant `u` in both displayed forms, and `u^m` computed without roots.
#[derive(Debug, Clone)]
pub struct UValue {
    pub u: Complex,
    /// `∏ θ_i^{b_i/d_i} D_{ζ_i}(θ_i)^{−1/m} · a_ζ(θ)`
    pub u_alt: Complex,
    pub u_m: Complex,
}

fn theta_b(setup: &Setup, twist: Option<&[i64]>) -> Result<Complex, AsymptoticsError> {
    let mut out = cone(setup.bits);
    for i in 0..setup.data.rank() {
        let bi = Rational::from(&setup.data.b()[i] / setup.data.d()[i]);
        out *= theta_pow(setup, i, &bi, twist.map_or(0, |t| t[i]))?;
    }
    Ok(out)
}

fn one_minus_z_pow(setup: &Setup, ex: &Rational) -> Float {
    let mut out = Float::with_val(setup.bits, 1);
    for z in &setup.sol.z {
        out *= fpow_rat(&Float::with_val(setup.bits, 1 - z), ex);
    }
    out
}

pub fn compute_u(setup: &Setup) -> Result<UValue, AsymptoticsError> {
    let bits = setup.bits;
    let m = setup.m();
    let tb = theta_b(setup, None)?;
    let mut ksum = czero(bits);
    let mut asum = czero(bits);
    for k in setup.residues() {
        ksum += summand(setup, &k, None)?;
        // a_ζ(θ): θ_i^{(kᵀA)_i}/(θ_i;ζ_i)_{k_i+1}
        let mut v = setup.zeta_q(&k)?;
        for i in 0..k.len() {
            let zi = setup.zeta_i(i);
            v *= theta_pow(setup, i, &setup.ka(&k, i), 0)?;
            v /= poch(&setup.complex(&setup.theta[i]), &zi.zeta(bits), k[i] + 1);
        }
        asum += v;
    }
    let (dfac, _, _) = d_factor(setup, None);
    let omz = one_minus_z_pow(setup, &Rational::from((-1, m)));
    let u = Complex::with_val(bits, &tb * &dfac) * &ksum * omz;
    let mut dplain = cone(bits);
    for i in 0..setup.data.rank() {
        let zi = setup.zeta_i(i);
        let dv = cyclic_dilog(&zi, &setup.complex(&setup.theta[i]));
        dplain /= Complex::with_val(bits, dv.ln() / m as u32).exp();
    }
    let u_alt = Complex::with_val(bits, &tb * &dplain) * asum;
    let u_m = u_power(setup, None)?;
    Ok(UValue { u, u_alt, u_m })
}

/// `u^m` with every `θ_i` replaced by `ζ_i^{e_i} θ_i`; needs no `m`-th roots.
pub fn u_power(setup: &Setup, twist: Option<&[i64]>) -> Result<Complex, AsymptoticsError> {
    let bits = setup.bits;
    let m = setup.m() as i64;
    let tb = theta_b(setup, twist)?;
    let mut ksum = czero(bits);
    for k in setup.residues() {
        ksum += summand(setup, &k, twist)?;
    }
    let (_, dfull, _) = d_factor(setup, twist);
    let omz = one_minus_z_pow(setup, &Rational::from(-1));
    Ok(cpow_int(&tb, m) * dfull * cpow_int(&ksum, m) * omz)
}

/// Value and relative error of the prediction at one `ε`.
#[derive(Debug, Clone, Serialize)]
pub struct RadialRow {
    pub eps: String,
    pub lhs: String,
    pub rhs: String,
    pub rel_err: f64,
    /// Smallest relative error after multiplying the prediction by an `m`-th root of unity.
    pub rel_err_up_to_phase: f64,
    pub phase_index: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RadialReport {
    pub schema: u32,
    pub alpha: String,
    pub m: u64,
    pub order: usize,
    pub sigma: i32,
    pub prefactor: String,
    pub s_coeffs: Vec<String>,
    pub branch_warning: bool,
    pub rows: Vec<RadialRow>,
    /// `log(err_i/err_{i+1}) / log(ε_i/ε_{i+1})` for consecutive rows.
    pub orders: Vec<f64>,
}

impl RadialReport {
    /// The error that the acceptance rule uses: exact, or up to a root of unity under the branch flag.
    pub fn effective_errors(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| if self.branch_warning { r.rel_err.min(r.rel_err_up_to_phase) } else { r.rel_err })
            .collect()
    }
}

/// `e^{−σΛ/(mε)} f̃(α + iε/(2πm))` by direct summation.
pub fn radial_value(setup: &Setup, eps: &Rational, prec: Prec) -> Result<Complex, AsymptoticsError> {
    let bits = setup.bits;
    let m = setup.m();
    let e = float(bits, eps);
    let im = Float::with_val(bits, &e / (pi(bits) * 2u32)) / m as u32;
    let tau = Complex::with_val(bits, (float(bits, &setup.ctx.alpha), im));
    let v = eval_numeric(&setup.data, &LatticeFilter::none(), &QPoint::from_tau(&tau), prec)?;
    let ex = Float::with_val(bits, &setup.sol.big_lambda * -SIGMA) / (Float::with_val(bits, &e * m));
    Ok(Complex::with_val(bits, v.value) * ex.exp())
}

/// Compares the numerical radial values with the truncated expansion.
pub fn predict_radial(
    data: &NahmData,
    alpha: &Rational,
    eps_list: &[Rational],
    order: usize,
    prec: Prec,
) -> Result<RadialReport, AsymptoticsError> {
    let setup = Setup::new(data, alpha, prec)?;
    let bits = setup.bits;
    let m = setup.m();
    let pre = prefactor(&setup)?;
    let s = s_series(&setup, order)?;
    let mut rows = Vec::new();
    let mut errs = Vec::new();
    for eps in eps_list {
        let lhs = radial_value(&setup, eps, prec)?;
        let rhs = Complex::with_val(bits, &pre * s.series.eval(&float(bits, eps)));
        let err = rel_err(&lhs, &rhs).to_f64();
        let (mut best, mut idx) = (f64::INFINITY, 0);
        for j in 0..m {
            let r = Complex::with_val(bits, &rhs * e_rat(&Rational::from((j as i64, m as i64)), bits));
            let e = rel_err(&lhs, &r).to_f64();
            if e < best {
                best = e;
                idx = j;
            }
        }
        errs.push((eps.to_f64(), err));
        rows.push(RadialRow {
            eps: crate::model::fmt_rational(eps),
            lhs: fmt_complex(&lhs, 30),
            rhs: fmt_complex(&rhs, 30),
            rel_err: err,
            rel_err_up_to_phase: best,
            phase_index: idx,
        });
    }
    let orders = errs.windows(2).map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln()).collect();
    Ok(RadialReport {
        schema: 1,
        alpha: crate::model::fmt_rational(&setup.ctx.alpha),
        m,
        order,
        sigma: SIGMA,
        prefactor: fmt_complex(&pre, 30),
        s_coeffs: s.series.coeffs().iter().step_by(2).map(|c| fmt_complex(c, 30)).collect(),
        branch_warning: s.branch_warning,
        rows,
        orders,
    })
}

/// The value of `c` that kills the `ε¹` coefficient at `q → 1`, and what remains after the shift.
#[derive(Debug, Clone)]
pub struct CEstimate {
    pub c_est: Float,
    pub c_rational: Option<Rational>,
    /// Coefficients of `ε^k`, `k = 0..K`, of `e^{−c_est·ε} S(ε)`.
    pub shifted: Vec<Complex>,
}

impl CEstimate {
    /// `max_{k ≥ 2} |coefficient of ε^k|` relative to the constant term.
    pub fn residual(&self) -> Float {
        let bits = self.c_est.prec();
        let c0 = cabs(&self.shifted[0]);
        let mut out = Float::with_val(bits, 0);
        for c in self.shifted.iter().skip(2) {
            let r = Float::with_val(bits, cabs(c) / &c0);
            if r > out {
                out = r;
            }
        }
        out
    }
}

/// Works at `m = 1` with `c` set to zero; requires `K ≥ 3` to see two coefficients past the shift.
pub fn determine_c(data: &NahmData, order: usize, prec: Prec) -> Result<CEstimate, AsymptoticsError> {
    let zero = data.with_c(Rational::new());
    let setup = Setup::new(&zero, &Rational::new(), prec)?;
    determine_c_with(&setup, order)
}

pub fn determine_c_with(setup: &Setup, order: usize) -> Result<CEstimate, AsymptoticsError> {
    let bits = setup.bits;
    assert_eq!(setup.m(), 1, "determine_c works at q → 1");
    assert!(*setup.data.c() == 0, "c must be zero");
    let s = s_series(setup, order)?;
    let s0 = s.series.coeff(0).clone();
    let s1 = s.series.coeff(1).clone();
    let c_est = Float::with_val(bits, (s1 / &s0).real());
    let mut shift = vec![czero(bits); 2 * order + 1];
    shift[2] = Complex::with_val(bits, (-c_est.clone(), 0));
    let shifted_series = FormalSeries::from_coeffs(shift).exp().mul(&s.series);
    let shifted = (0..=order).map(|k| shifted_series.coeff(k).clone()).collect();
    let tol = ten_pow(-((bits as f64 * 0.301 * 0.6) as i32), bits);
    let c_rational = detect_rational(&c_est, 100_000, &tol);
    Ok(CEstimate { c_est, c_rational, shifted })
}
