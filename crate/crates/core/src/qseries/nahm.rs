use rayon::prelude::*;
use rug::{Integer, Rational};

use super::series::QSeries;
use crate::model::{is_positive_definite, LatticeFilter, Matrix, NahmData};

/// `D₀·(Q(n) − c)` as an integer quadratic form, `D₀` the value denominator.
#[derive(Debug, Clone)]
pub(crate) struct IntForm {
    pub d0: i64,
    pub lin: Vec<i64>,
    pub m: Vec<Vec<i64>>,
}

fn to_i64(r: &Rational) -> i64 {
    assert_eq!(*r.denom(), 1, "value denominator does not clear {r}");
    r.numer().to_i64().expect("coefficient overflow")
}

impl IntForm {
    pub fn new(data: &NahmData) -> Self {
        let d0 = data.value_denominator().to_i64().expect("denominator overflow");
        let n = data.rank();
        let ad = data.ad();
        let lin = (0..n)
            .map(|i| to_i64(&((Rational::from(&ad[i][i] / 2u32) + &data.b()[i]) * d0)))
            .collect();
        let m = (0..n).map(|i| (0..n).map(|j| to_i64(&Rational::from(&ad[i][j] * d0))).collect()).collect();
        Self { d0, lin, m }
    }

    pub fn rank(&self) -> usize {
        self.lin.len()
    }

    pub fn j(&self, n: &[u64]) -> i128 {
        let k = self.rank();
        let mut s = 0i128;
        for i in 0..k {
            let ni = n[i] as i128;
            if ni == 0 {
                continue;
            }
            s += self.lin[i] as i128 * ni + self.m[i][i] as i128 * (ni * (ni - 1) / 2);
            for j in i + 1..k {
                s += self.m[i][j] as i128 * ni * n[j] as i128;
            }
        }
        s
    }

    /// Linear coefficient in `n₀` of `j` with the other coordinates fixed.
    pub fn line_slope(&self, n: &[u64]) -> i128 {
        let mut s = self.lin[0] as i128;
        for j in 1..self.rank() {
            s += self.m[0][j] as i128 * n[j] as i128;
        }
        s
    }
}

/// Rational `λ ≥ 0` with `AD − λI` positive definite, close to the smallest eigenvalue.
pub fn certified_lambda_min(ad: &Matrix) -> Rational {
    let n = ad.len();
    let shifted = |l: &Rational| -> Matrix {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { Rational::from(&ad[i][j] - l) } else { ad[i][j].clone() })
                    .collect()
            })
            .collect()
    };
    let mut lo = Rational::new();
    let mut hi = (0..n).map(|i| ad[i][i].clone()).min().unwrap();
    for _ in 0..40 {
        let mid = Rational::from(&lo + &hi) / 2u32;
        // keep denominators small
        let mid = Rational::from((Integer::from((mid * (1u64 << 40)).floor_ref()), Integer::from(1u64 << 40)));
        if is_positive_definite(&shifted(&mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Per-coordinate box containing every `n ≥ 0` with `Q(n) − c ≤ bound`, and a lower bound for `Q − c`.
pub(crate) fn lattice_box(data: &NahmData, bound: &Rational) -> (Vec<u64>, Rational) {
    let lambda = certified_lambda_min(data.ad());
    assert!(lambda > 0, "positive definite form has positive minimum eigenvalue");
    let half = Rational::from(&lambda / 2u32);
    let mins: Vec<Rational> = data
        .b()
        .iter()
        .map(|b| if *b < 0 { -Rational::from(b * b) / Rational::from(&lambda * 2u32) } else { Rational::new() })
        .collect();
    let total_min: Rational = mins.iter().fold(Rational::new(), |a, x| a + x);
    let radii = (0..data.rank())
        .map(|i| {
            let rhs = Rational::from(bound - &total_min) + &mins[i];
            let b = &data.b()[i];
            let vertex = (-Rational::from(b / &lambda)).to_f64().max(0.0);
            let mut n = 0u64;
            let mut last_ok = 0u64;
            loop {
                let v = Rational::from(&half * (n * n)) + Rational::from(b * n);
                if v <= rhs {
                    last_ok = n;
                } else if n as f64 > vertex {
                    break;
                }
                n += 1;
            }
            last_ok
        })
        .collect();
    (radii, total_min)
}

fn divide_by_one_minus(v: &mut [Integer], step: usize) {
    for t in step..v.len() {
        let (lo, hi) = v.split_at_mut(t);
        hi[0] += &lo[t - step];
    }
}

/// Exact coefficients of the (filtered) Nahm sum up to exponent `order`.
pub fn nahm_series(data: &NahmData, filter: &LatticeFilter, order: &Rational) -> QSeries {
    let form = IntForm::new(data);
    let d0 = form.d0;
    let n = data.rank();
    let bound = Rational::from(order - data.c());
    if bound < 0 {
        return QSeries::new(d0 as u64, data.c().clone(), vec![], order.clone());
    }
    let (radii, total_min) = lattice_box(data, &bound);
    let j_lo = Integer::from((total_min * d0).floor_ref()).to_i64().unwrap().min(0) as i128;
    let top = Integer::from((bound * d0).floor_ref()).to_i64().unwrap() as i128;
    let len = (top - j_lo + 1) as usize;

    let progs: Vec<(u64, u64)> = (0..n).map(|i| filter.progression(i)).collect();
    if progs.iter().any(|p| p.0 == 0) {
        return QSeries::new(d0 as u64, data.c().clone(), vec![], order.clone());
    }

    // 1/(q^{d₀}; q^{d₀})_k for the inner coordinate
    let inner_max = radii[0] as usize;
    let mut inner = Vec::with_capacity(inner_max + 1);
    let mut cur = vec![Integer::new(); len];
    cur[0] = Integer::from(1);
    inner.push(cur.clone());
    for k in 1..=inner_max {
        divide_by_one_minus(&mut cur, data.d()[0] as usize * k * d0 as usize);
        inner.push(cur.clone());
    }

    // outer coordinate tuples
    let mut outers: Vec<Vec<u64>> = vec![vec![0; n]];
    for i in 1..n {
        let (step, first) = progs[i];
        let mut next = Vec::new();
        for o in &outers {
            let mut x = first;
            while x <= radii[i] {
                let mut v = o.clone();
                v[i] = x;
                next.push(v);
                x += step;
            }
        }
        outers = next;
    }
    let (step0, first0) = progs[0];
    let m00 = form.m[0][0] as i128;

    let total = outers
        .par_iter()
        .filter_map(|outer| {
            let mut nvec = outer.clone();
            nvec[0] = 0;
            let gamma = form.j(&nvec);
            let beta = form.line_slope(&nvec);
            // j(n₀) = γ + β n₀ + m₀₀ n₀(n₀−1)/2 is convex in n₀
            let vertex = if m00 > 0 { (m00 as f64 / 2.0 - beta as f64) / m00 as f64 } else { 0.0 };
            let mut acc = vec![Integer::new(); len];
            let mut any = false;
            let mut x = first0;
            while x as usize <= inner_max {
                let xi = x as i128;
                let j = gamma + beta * xi + m00 * (xi * (xi - 1) / 2);
                if j <= top {
                    let pos = (j - j_lo) as usize;
                    let src = &inner[x as usize];
                    for (a, s) in acc[pos..].iter_mut().zip(src.iter()) {
                        *a += s;
                    }
                    any = true;
                } else if x as f64 > vertex {
                    break;
                }
                x += step0;
            }
            if !any {
                return None;
            }
            for i in 1..n {
                for k in 1..=outer[i] as usize {
                    divide_by_one_minus(&mut acc, data.d()[i] as usize * k * d0 as usize);
                }
            }
            Some(acc)
        })
        .reduce(
            || vec![Integer::new(); len],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );

    let offset = data.c() + Rational::from((j_lo as i64, d0)) ;
    let first_nz = total.iter().position(|c| *c != 0).unwrap_or(0);
    let offset = offset + Rational::from((first_nz as i64, d0));
    let coeffs = total.into_iter().skip(first_nz).collect();
    QSeries::from_integers(d0 as u64, offset, coeffs, order.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::q;
    use crate::qseries::product::{product_series, Factor};
    use crate::qseries::series::verify_identity;

    fn ints(s: &QSeries) -> Vec<i64> {
        s.coeffs().iter().map(|c| c.numer().to_i64().unwrap()).collect()
    }

    /// Direct expansion of each lattice term with rational series arithmetic.
    fn brute(data: &NahmData, filter: &LatticeFilter, order: &Rational, box_r: u64) -> QSeries {
        let n = data.rank();
        let mut total = QSeries::new(1, q("-10"), vec![], order.clone());
        let mut idx = vec![0u64; n];
        loop {
            if filter.admits(&idx) {
                let ni: Vec<i64> = idx.iter().map(|&x| x as i64).collect();
                let e = data.quadratic_form(&ni).unwrap();
                if e <= *order {
                    let mut term = QSeries::new(1, e.clone(), vec![q("1")], order.clone());
                    for i in 0..n {
                        for k in 1..=idx[i] {
                            let f = vec![Factor::inv((data.d()[i] as u64 * k) as i64, 1_000_000)];
                            term = term.mul(&product_series(&f, order).unwrap());
                        }
                    }
                    total = total.add(&term);
                }
            }
            let mut i = 0;
            while i < n {
                idx[i] += 1;
                if idx[i] <= box_r {
                    break;
                }
                idx[i] = 0;
                i += 1;
            }
            if i == n {
                break;
            }
        }
        total
    }

    #[test]
    fn rogers_ramanujan_coefficients() {
        let rr = NahmData::from_strs(&[&["2"]], &["0"], "0", &[1]).unwrap();
        let s = nahm_series(&rr, &LatticeFilter::none(), &q("6"));
        assert_eq!(ints(&s), vec![1, 1, 1, 1, 2, 2, 3]);
        let p = product_series(&[Factor::inv(1, 5), Factor::inv(4, 5)], &q("200")).unwrap();
        assert!(verify_identity(&nahm_series(&rr, &LatticeFilter::none(), &q("200")), &p).is_equal());
    }

    #[test]
    fn c_shift() {
        let a = NahmData::from_strs(&[&["2", "1"], &["3", "2"]], &["1", "3"], "0", &[1, 3]).unwrap();
        let s0 = nahm_series(&a, &LatticeFilter::none(), &q("30"));
        let s1 = nahm_series(&a.with_c(q("5/18")), &LatticeFilter::none(), &q("30"));
        assert!(verify_identity(&s0.shift(&q("5/18")), &s1).is_equal());
    }

    #[test]
    fn matches_brute_force_with_negative_b() {
        let a = NahmData::from_strs(&[&["3/2", "1/2"], &["1", "1"]], &["-1", "1"], "0", &[1, 2]).unwrap();
        let f = LatticeFilter::congruence(0, 1, 2);
        let fast = nahm_series(&a, &f, &q("12"));
        let slow = brute(&a, &f, &q("12"), 12);
        assert!(verify_identity(&fast, &slow).is_equal(), "{fast}\n{slow}");
        let b = NahmData::from_strs(&[&["1", "-1/2"], &["-1", "3/4"]], &["-1/2", "1/2"], "1/60", &[1, 2]).unwrap();
        let fast = nahm_series(&b, &LatticeFilter::none(), &q("8"));
        let slow = brute(&b, &LatticeFilter::none(), &q("8"), 14);
        assert!(verify_identity(&fast, &slow).is_equal(), "{fast}\n{slow}");
    }

    #[test]
    fn rank_three_and_lower_bounds() {
        let a = NahmData::from_strs(
            &[&["2", "1", "1"], &["1", "2", "1"], &["1", "1", "2"]],
            &["0", "1", "0"],
            "0",
            &[1, 1, 1],
        )
        .unwrap();
        let mut f = LatticeFilter::congruence(2, 1, 2);
        f.lower = vec![1, 0, 0];
        let fast = nahm_series(&a, &f, &q("10"));
        let slow = brute(&a, &f, &q("10"), 6);
        assert!(verify_identity(&fast, &slow).is_equal());
    }

    #[test]
    fn splitting_by_parity() {
        let a = NahmData::from_strs(&[&["2", "1"], &["2", "2"]], &["0", "1"], "0", &[1, 2]).unwrap();
        let all = nahm_series(&a, &LatticeFilter::none(), &q("40"));
        for s in [2u64, 3] {
            let mut acc = QSeries::new(1, q("0"), vec![], q("40"));
            for r in 0..s {
                acc = acc.add(&nahm_series(&a, &LatticeFilter::congruence(0, r, s), &q("40")));
            }
            assert!(verify_identity(&all, &acc).is_equal());
        }
    }

    #[test]
    fn lambda_is_certified() {
        let a = NahmData::from_strs(&[&["2", "1"], &["3", "2"]], &["0", "0"], "0", &[1, 3]).unwrap();
        let l = certified_lambda_min(a.ad());
        // AD = [[2,3],[3,6]] has eigenvalues 4 ± √13
        let exact = 4.0 - 13f64.sqrt();
        assert!(l.to_f64() <= exact && l.to_f64() > exact - 1e-9);
    }
}
