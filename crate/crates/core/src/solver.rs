//! Nahm's equation `1 − z_i = ∏_j z_j^{A_ij}` on `(0,1)^N`, the volume `Λ` and rationality of `λ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::{Float, Integer, Rational};
use thiserror::Error;

use crate::model::NahmData;
use crate::specialfn::num::{float, pi, solve_linear_real, ten_pow};
use crate::specialfn::polylog::{rogers_l, rogers_l_f64};
use crate::specialfn::{Prec, SpecialError};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("Newton iteration did not converge: {0}")]
    NoConvergence(String),
    #[error(transparent)]
    Special(#[from] SpecialError),
}

#[derive(Debug, Clone)]
pub struct NahmSolution {
    pub z: Vec<Float>,
    /// `Λ = −Σ d_i⁻¹ L(z_i)`
    pub big_lambda: Float,
    /// `λ = Λ/(2π)²`
    pub lambda: Float,
    /// `max |1 − z_i − ∏ z_j^{A_ij}|`
    pub residual: Float,
    pub iterations: u32,
}

impl NahmSolution {
    pub fn bits(&self) -> u32 {
        self.z[0].prec()
    }
}

fn residuals(a: &[Vec<Float>], x: &[Float]) -> Vec<Float> {
    let bits = x[0].prec();
    (0..x.len())
        .map(|i| {
            let z = x[i].clone().exp();
            let one_minus = Float::with_val(bits, 1) - &z;
            let mut s = Float::with_val(bits, 0);
            for j in 0..x.len() {
                s += Float::with_val(bits, &a[i][j] * &x[j]);
            }
            one_minus.ln() - s
        })
        .collect()
}

fn max_abs(v: &[Float]) -> Float {
    v.iter().map(|x| x.clone().abs()).fold(Float::with_val(v[0].prec(), 0), |a, b| if b > a { b } else { a })
}

fn newton(data: &NahmData, start: Vec<Float>, bits: u32) -> Result<(Vec<Float>, u32), SolverError> {
    let n = data.rank();
    let a: Vec<Vec<Float>> = data.a().iter().map(|r| r.iter().map(|x| float(bits, x)).collect()).collect();
    let mut x = start;
    let mut g = residuals(&a, &x);
    let tol = Float::with_val(bits, Float::u_exp(1, -(bits as i32) + 8));
    for it in 0..400u32 {
        // J = −(A + diag(z/(1−z)))
        let mut jac = vec![vec![Float::with_val(bits, 0); n]; n];
        for i in 0..n {
            let z = x[i].clone().exp();
            let w = Float::with_val(bits, &z / (Float::with_val(bits, 1) - &z));
            for j in 0..n {
                jac[i][j] = a[i][j].clone();
            }
            jac[i][i] += w;
        }
        let step = solve_linear_real(&jac, &g)
            .ok_or_else(|| SolverError::NoConvergence("singular Jacobian".into()))?;
        let gnorm = max_abs(&g);
        let mut t = Float::with_val(bits, 1);
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<Float> = x.iter().zip(&step).map(|(xi, s)| Float::with_val(bits, xi + &t * s)).collect();
            if trial.iter().all(|v| *v < 0) {
                let gt = residuals(&a, &trial);
                let nt = max_abs(&gt);
                if nt.is_finite() && (nt < gnorm || gnorm < tol) {
                    accepted = Some((trial, gt));
                    break;
                }
            }
            t /= 2u32;
        }
        let Some((trial, gt)) = accepted else {
            if gnorm < Float::with_val(bits, Float::u_exp(1, -(bits as i32) + 24)) {
                return Ok((x, it));
            }
            return Err(SolverError::NoConvergence(format!("line search failed at iteration {it}")));
        };
        let smax = max_abs(&step) * &t;
        x = trial;
        g = gt;
        if smax < tol {
            return Ok((x, it + 1));
        }
    }
    Err(SolverError::NoConvergence("iteration cap".into()))
}

/// Solve Nahm's equation at `1.2·P` digits by damped Newton in `x = log z`, starting at `z = ½`.
pub fn solve_nahm(data: &NahmData, prec: Prec) -> Result<NahmSolution, SolverError> {
    let work = prec.scaled(1.2);
    let bits = work.bits();
    let half = Float::with_val(bits, 0.5).ln();
    let (x, iterations) = newton(data, vec![half; data.rank()], bits)?;
    finish(data, x, iterations, prec)
}

fn finish(data: &NahmData, x: Vec<Float>, iterations: u32, prec: Prec) -> Result<NahmSolution, SolverError> {
    let bits = x[0].prec();
    let z: Vec<Float> = x.iter().map(|v| v.clone().exp()).collect();
    let n = data.rank();
    let mut residual = Float::with_val(bits, 0);
    for i in 0..n {
        let mut prod = Float::with_val(bits, 0);
        for j in 0..n {
            prod += float(bits, &data.a()[i][j]) * &x[j];
        }
        let r = (Float::with_val(bits, 1) - &z[i] - prod.exp()).abs();
        if r > residual {
            residual = r;
        }
    }
    if residual > ten_pow(-(prec.digits as i32 - 5), bits) {
        return Err(SolverError::NoConvergence(format!("residual {residual:.3e}")));
    }
    let (big_lambda, lambda) = compute_lambda_from(&z, data.d())?;
    let out = prec.bits();
    Ok(NahmSolution {
        z: z.into_iter().map(|v| Float::with_val(out, v)).collect(),
        big_lambda: Float::with_val(out, big_lambda),
        lambda: Float::with_val(out, lambda),
        residual,
        iterations,
    })
}

fn compute_lambda_from(z: &[Float], d: &[u32]) -> Result<(Float, Float), SolverError> {
    let bits = z[0].prec();
    let mut big = Float::with_val(bits, 0);
    for (zi, &di) in z.iter().zip(d) {
        big -= rogers_l(zi)? / di;
    }
    let p = pi(bits);
    let lambda = Float::with_val(bits, &big / Float::with_val(bits, &p * &p)) / 4u32;
    Ok((big, lambda))
}

/// `(Λ, λ)` recomputed from the solution.
pub fn compute_lambda(sol: &NahmSolution, data: &NahmData) -> Result<(Float, Float), SolverError> {
    compute_lambda_from(&sol.z, data.d())
}

/// Continued-fraction reconstruction: the first convergent `p/q` with `q ≤ max_den` and
/// `|x − p/q| < tol`.
pub fn detect_rational(x: &Float, max_den: u64, tol: &Float) -> Option<Rational> {
    let exact = x.to_rational()?;
    let (mut h0, mut h1) = (Integer::from(0), Integer::from(1));
    let (mut k0, mut k1) = (Integer::from(1), Integer::from(0));
    let mut r = exact.clone();
    for _ in 0..200 {
        let a = Integer::from(r.floor_ref());
        let h2 = Integer::from(&a * &h1) + &h0;
        let k2 = Integer::from(&a * &k1) + &k0;
        if k2 > max_den {
            return None;
        }
        let cand = Rational::from((h2.clone(), k2.clone()));
        let err = Float::with_val(x.prec(), &cand - x).abs();
        if err < *tol {
            return Some(cand);
        }
        let frac = Rational::from(&r - &a);
        if frac == 0 {
            return None;
        }
        r = frac.recip();
        h0 = std::mem::replace(&mut h1, h2);
        k0 = std::mem::replace(&mut k1, k2);
    }
    None
}

pub fn detect_rational_f64(x: f64, max_den: u64, tol: f64) -> Option<Rational> {
    detect_rational(&Float::with_val(64, x), max_den, &Float::with_val(64, tol))
}

/// Double-precision solve for quick filters; `None` when Newton fails.
pub fn solve_nahm_f64(data: &NahmData) -> Option<Vec<f64>> {
    let n = data.rank();
    let a: Vec<Vec<f64>> = data.a().iter().map(|r| r.iter().map(|x| x.to_f64()).collect()).collect();
    let mut x = vec![0.5f64.ln(); n];
    let g = |x: &[f64]| -> Vec<f64> {
        (0..n).map(|i| (1.0 - x[i].exp()).ln() - (0..n).map(|j| a[i][j] * x[j]).sum::<f64>()).collect()
    };
    let norm = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut gv = g(&x);
    for _ in 0..200 {
        let mut jac = vec![vec![0.0; n]; n];
        for i in 0..n {
            let z = x[i].exp();
            for j in 0..n {
                jac[i][j] = a[i][j];
            }
            jac[i][i] += z / (1.0 - z);
        }
        let step = solve_f64(jac, gv.clone())?;
        let mut t = 1.0;
        let mut ok = false;
        for _ in 0..50 {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(a, s)| a + t * s).collect();
            if trial.iter().all(|v| *v < 0.0) {
                let gt = g(&trial);
                if norm(&gt) < norm(&gv) || norm(&gv) < 1e-15 {
                    x = trial;
                    gv = gt;
                    ok = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !ok || norm(&step) * t < 1e-15 {
            break;
        }
    }
    if norm(&gv) < 1e-10 {
        Some(x.iter().map(|v| v.exp()).collect())
    } else {
        None
    }
}

fn solve_f64(mut m: Vec<Vec<f64>>, mut v: Vec<f64>) -> Option<Vec<f64>> {
    let n = v.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[i][k].abs().partial_cmp(&m[j][k].abs()).unwrap())?;
        if m[p][k].abs() < 1e-300 {
            return None;
        }
        m.swap(k, p);
        v.swap(k, p);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            for j in k..n {
                m[i][j] -= f * m[k][j];
            }
            v[i] -= f * v[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
        x[i] = (v[i] - s) / m[i][i];
    }
    Some(x)
}

/// `λ` in double precision from a double-precision solution.
pub fn lambda_f64(z: &[f64], d: &[u32]) -> f64 {
    let big: f64 = z.iter().zip(d).map(|(zi, &di)| -rogers_l_f64(*zi) / di as f64).sum();
    big / (4.0 * std::f64::consts::PI * std::f64::consts::PI)
}

/// Newton from `starts` random interior points; returns the largest distance between
/// any of the limits and the reference solution.
pub fn uniqueness_probe(data: &NahmData, prec: Prec, starts: usize, seed: u64) -> Result<Float, SolverError> {
    let reference = solve_nahm(data, prec)?;
    let bits = prec.scaled(1.2).bits();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = Float::with_val(bits, 0);
    for _ in 0..starts {
        let start: Vec<Float> =
            (0..data.rank()).map(|_| Float::with_val(bits, rng.gen_range(0.02..0.98f64)).ln()).collect();
        let (x, _) = newton(data, start, bits)?;
        for (xi, zr) in x.iter().zip(&reference.z) {
            let diff = (xi.clone().exp() - zr).abs();
            if diff > worst {
                worst = diff;
            }
        }
    }
    Ok(Float::with_val(prec.bits(), worst))
}
