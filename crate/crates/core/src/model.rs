//! Nahm data `Q = (A, b, c, d)` with exact rational entries.

use std::fmt;
use std::str::FromStr;

use rug::{Integer, Rational};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub type Matrix = Vec<Vec<Rational>>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("A·D is not symmetric at ({0}, {1})")]
    AsymmetricProduct(usize, usize),
    #[error("A·D is not positive definite (leading minor {0} is {1})")]
    NotPositiveDefinite(usize, String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("invalid congruence constraint: {0}")]
    InvalidConstraint(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub fn parse_rational(s: &str) -> Result<Rational, ModelError> {
    let t = s.trim();
    Rational::from_str(t).map_err(|_| ModelError::Parse(format!("bad rational `{t}`")))
}

/// Shorthand for literals in tests and examples. Panics on malformed input.
pub fn q(s: &str) -> Rational {
    parse_rational(s).unwrap()
}

pub fn fmt_rational(r: &Rational) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn lcm_u64(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        return 0;
    }
    a / gcd_u64(a, b) * b
}

pub fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn gcd_i64(a: i64, b: i64) -> i64 {
    gcd_u64(a.unsigned_abs(), b.unsigned_abs()) as i64
}

/// Inverse of `a` modulo `m` in `[0, m)`, if it exists.
pub fn mod_inverse(a: i64, m: i64) -> Option<i64> {
    if m == 1 {
        return Some(0);
    }
    let (mut r0, mut r1) = (a.rem_euclid(m), m);
    let (mut s0, mut s1) = (1i64, 0i64);
    while r1 != 0 {
        let qt = r0 / r1;
        (r0, r1) = (r1, r0 - qt * r1);
        (s0, s1) = (s1, s0 - qt * s1);
    }
    if r0 != 1 {
        return None;
    }
    Some(s0.rem_euclid(m))
}

fn is_integer(r: &Rational) -> bool {
    *r.denom() == 1
}

pub fn mat_mul_vec(a: &Matrix, v: &[Rational]) -> Vec<Rational> {
    a.iter()
        .map(|row| {
            let mut s = Rational::new();
            for (x, y) in row.iter().zip(v) {
                s += Rational::from(x * y);
            }
            s
        })
        .collect()
}

pub fn transpose(a: &Matrix) -> Matrix {
    let n = a.len();
    (0..n).map(|j| (0..n).map(|i| a[i][j].clone()).collect()).collect()
}

/// Determinants of the leading principal submatrices, by exact elimination.
pub fn leading_minors(a: &Matrix) -> Vec<Rational> {
    let n = a.len();
    let mut m = a.clone();
    let mut out = Vec::with_capacity(n);
    let mut det = Rational::from(1);
    for k in 0..n {
        // Without pivoting the k-th pivot is the ratio of consecutive minors;
        // a zero pivot means a zero minor, after which we stop eliminating.
        let piv = m[k][k].clone();
        det *= &piv;
        out.push(det.clone());
        if piv == 0 {
            for _ in k + 1..n {
                out.push(Rational::new());
            }
            break;
        }
        for i in k + 1..n {
            let f = Rational::from(&m[i][k] / &piv);
            for j in k..n {
                let t = Rational::from(&f * &m[k][j]);
                m[i][j] -= t;
            }
        }
    }
    out
}

pub fn determinant(a: &Matrix) -> Rational {
    let n = a.len();
    let mut m = a.clone();
    let mut det = Rational::from(1);
    for k in 0..n {
        let Some(p) = (k..n).find(|&i| m[i][k] != 0) else {
            return Rational::new();
        };
        if p != k {
            m.swap(p, k);
            det = -det;
        }
        let piv = m[k][k].clone();
        det *= &piv;
        for i in k + 1..n {
            let f = Rational::from(&m[i][k] / &piv);
            for j in k..n {
                let t = Rational::from(&f * &m[k][j]);
                m[i][j] -= t;
            }
        }
    }
    det
}

pub fn inverse(a: &Matrix) -> Result<Matrix, ModelError> {
    let n = a.len();
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| Rational::from(u32::from(i == j))));
            r
        })
        .collect();
    for k in 0..n {
        let p = (k..n).find(|&i| m[i][k] != 0).ok_or(ModelError::SingularMatrix)?;
        m.swap(p, k);
        let piv = m[k][k].clone();
        for x in m[k].iter_mut() {
            *x /= &piv;
        }
        for i in 0..n {
            if i == k || m[i][k] == 0 {
                continue;
            }
            let f = m[i][k].clone();
            for j in 0..2 * n {
                let t = Rational::from(&f * &m[k][j]);
                m[i][j] -= t;
            }
        }
    }
    Ok(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

pub fn is_positive_definite(a: &Matrix) -> bool {
    leading_minors(a).iter().all(|x| *x > 0)
}

/// `n_i ≡ residue (mod modulus)`; `index` is 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CongruenceConstraint {
    pub index: usize,
    pub residue: u64,
    pub modulus: u64,
}

impl CongruenceConstraint {
    pub fn new(index: usize, residue: u64, modulus: u64) -> Result<Self, ModelError> {
        if modulus == 0 || residue >= modulus {
            return Err(ModelError::InvalidConstraint(format!(
                "residue {residue} modulus {modulus}"
            )));
        }
        Ok(Self { index, residue, modulus })
    }
}

/// Summation range for a Nahm sum: congruence conditions plus per-coordinate lower bounds.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LatticeFilter {
    pub constraints: Vec<CongruenceConstraint>,
    pub lower: Vec<u64>,
}

impl LatticeFilter {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn congruence(index: usize, residue: u64, modulus: u64) -> Self {
        Self {
            constraints: vec![CongruenceConstraint::new(index, residue, modulus).unwrap()],
            lower: vec![],
        }
    }

    pub fn lower_bound(&self, i: usize) -> u64 {
        self.lower.get(i).copied().unwrap_or(0)
    }

    /// Step and first admissible value of coordinate `i`.
    pub fn progression(&self, i: usize) -> (u64, u64) {
        let mut step = 1u64;
        let mut res = 0u64;
        for c in self.constraints.iter().filter(|c| c.index == i) {
            // combine n ≡ res (step) with n ≡ c.residue (c.modulus)
            let new_step = lcm_u64(step, c.modulus);
            let mut r = res;
            while r % c.modulus != c.residue {
                r += step;
                if r >= new_step {
                    // incompatible congruences: empty progression
                    return (0, 0);
                }
            }
            step = new_step;
            res = r;
        }
        let lo = self.lower_bound(i);
        let first = if lo <= res { res } else { lo + (step - (lo - res) % step) % step };
        (step, first)
    }

    pub fn admits(&self, n: &[u64]) -> bool {
        n.iter().enumerate().all(|(i, &x)| x >= self.lower_bound(i))
            && self.constraints.iter().all(|c| n[c.index] % c.modulus == c.residue)
    }

    pub fn validate(&self, rank: usize) -> Result<(), ModelError> {
        if self.lower.len() > rank {
            return Err(ModelError::DimensionMismatch("lower bounds".into()));
        }
        for c in &self.constraints {
            if c.index >= rank {
                return Err(ModelError::InvalidConstraint(format!("index {}", c.index + 1)));
            }
        }
        Ok(())
    }
}

/// Validated Nahm data. `A·D` is symmetric positive definite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NahmData {
    a: Matrix,
    b: Vec<Rational>,
    c: Rational,
    d: Vec<u32>,
    ad: Matrix,
}

impl NahmData {
    pub fn new(a: Matrix, b: Vec<Rational>, c: Rational, d: Vec<u32>) -> Result<Self, ModelError> {
        let n = a.len();
        if n == 0 {
            return Err(ModelError::DimensionMismatch("empty matrix".into()));
        }
        if a.iter().any(|r| r.len() != n) || b.len() != n || d.len() != n {
            return Err(ModelError::DimensionMismatch(format!(
                "A is {}x?, b has {}, d has {}",
                n,
                b.len(),
                d.len()
            )));
        }
        if d.contains(&0) {
            return Err(ModelError::DimensionMismatch("d entries must be positive".into()));
        }
        let ad: Matrix = a
            .iter()
            .map(|row| row.iter().zip(&d).map(|(x, &dj)| Rational::from(x * dj)).collect())
            .collect();
        for i in 0..n {
            for j in i + 1..n {
                if ad[i][j] != ad[j][i] {
                    return Err(ModelError::AsymmetricProduct(i, j));
                }
            }
        }
        if let Some((k, m)) = leading_minors(&ad).into_iter().enumerate().find(|(_, m)| *m <= 0) {
            return Err(ModelError::NotPositiveDefinite(k + 1, fmt_rational(&m)));
        }
        Ok(Self { a, b, c, d, ad })
    }

    /// Build from string literals, e.g. `from_strs(&[&["2","1"],&["3","2"]], &["1","3"], "0", &[1,3])`.
    pub fn from_strs(a: &[&[&str]], b: &[&str], c: &str, d: &[u32]) -> Result<Self, ModelError> {
        let a = a
            .iter()
            .map(|r| r.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        let b = b.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>, _>>()?;
        Self::new(a, b, parse_rational(c)?, d.to_vec())
    }

    pub fn rank(&self) -> usize {
        self.a.len()
    }
    pub fn a(&self) -> &Matrix {
        &self.a
    }
    pub fn b(&self) -> &[Rational] {
        &self.b
    }
    pub fn c(&self) -> &Rational {
        &self.c
    }
    pub fn d(&self) -> &[u32] {
        &self.d
    }
    pub fn ad(&self) -> &Matrix {
        &self.ad
    }

    pub fn with_b(&self, b: Vec<Rational>) -> Result<Self, ModelError> {
        Self::new(self.a.clone(), b, self.c.clone(), self.d.clone())
    }

    pub fn with_c(&self, c: Rational) -> Self {
        Self { c, ..self.clone() }
    }

    pub fn trace_d(&self) -> u64 {
        self.d.iter().map(|&x| x as u64).sum()
    }

    /// `Q(n) = ½ nᵀADn + nᵀb + c`.
    pub fn quadratic_form(&self, n: &[i64]) -> Result<Rational, ModelError> {
        if n.len() != self.rank() {
            return Err(ModelError::DimensionMismatch(format!(
                "vector of length {} for rank {}",
                n.len(),
                self.rank()
            )));
        }
        Ok(self.quadratic_form_unchecked(n))
    }

    pub(crate) fn quadratic_form_unchecked(&self, n: &[i64]) -> Rational {
        let mut quad = Rational::new();
        let nn = self.rank();
        for i in 0..nn {
            if n[i] == 0 {
                continue;
            }
            let mut row = Rational::new();
            for j in 0..nn {
                if n[j] != 0 {
                    row += Rational::from(&self.ad[i][j] * n[j]);
                }
            }
            quad += row * n[i];
        }
        quad /= 2;
        for i in 0..nn {
            if n[i] != 0 {
                quad += Rational::from(&self.b[i] * n[i]);
            }
        }
        quad + &self.c
    }

    /// Smallest `δ ≥ 1` with `Q(k + δe_i) − Q(k) ∈ ℤ` for all `k` and `i`.
    pub fn strong_denominator(&self) -> u64 {
        let n = self.rank();
        let mut delta = 1u64;
        loop {
            let ok = (0..n).all(|i| {
                (0..n).all(|j| is_integer(&Rational::from(&self.ad[i][j] * delta)))
                    && is_integer(&self.shift_increment(i, delta))
            });
            if ok {
                return delta;
            }
            delta += 1;
        }
    }

    fn shift_increment(&self, i: usize, delta: u64) -> Rational {
        let d = Integer::from(delta);
        let sq = Rational::from(&self.ad[i][i] * Integer::from(&d * &d)) / 2;
        sq + Rational::from(&self.b[i] * &d)
    }

    /// Smallest strong denominator with `δ b_i / d_i ∈ ℤ` and `δ A_ij / d_i ∈ ℤ`.
    pub fn strong_denominator_strict(&self) -> u64 {
        let n = self.rank();
        let base = self.strong_denominator();
        let mut delta = base;
        loop {
            let ok = (0..n).all(|i| {
                let di = self.d[i];
                is_integer(&(Rational::from(&self.b[i] * delta) / di))
                    && (0..n).all(|j| is_integer(&(Rational::from(&self.a[i][j] * delta) / di)))
            });
            if ok {
                return delta;
            }
            delta += base;
        }
    }

    /// Least common denominator of all values `Q(n) − c`.
    pub fn value_denominator(&self) -> Integer {
        let delta = self.strong_denominator() as i64;
        let n = self.rank();
        let zero = self.with_c(Rational::new());
        let mut den = Integer::from(1);
        let mut k = vec![0i64; n];
        loop {
            let v = zero.quadratic_form_unchecked(&k);
            den.lcm_mut(v.denom());
            let mut i = 0;
            while i < n {
                k[i] += 1;
                if k[i] < delta {
                    break;
                }
                k[i] = 0;
                i += 1;
            }
            if i == n {
                break;
            }
        }
        den
    }

    /// `(A⁻¹, A⁻¹b, ½bᵀ(AD)⁻¹b − tr D/24 − c, d)`.
    pub fn dual_data(&self) -> Result<Self, ModelError> {
        let ainv = inverse(&self.a)?;
        let bstar = mat_mul_vec(&ainv, &self.b);
        let adinv = inverse(&self.ad)?;
        let w = mat_mul_vec(&adinv, &self.b);
        let mut quad = Rational::new();
        for (x, y) in self.b.iter().zip(&w) {
            quad += Rational::from(x * y);
        }
        let cstar = quad / 2 - Rational::from((self.trace_d() as i64, 24)) - &self.c;
        Self::new(ainv, bstar, cstar, self.d.clone())
    }

    /// Coordinates may be permuted among positions with equal `d`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, ModelError> {
        let n = self.rank();
        let a = (0..n).map(|i| (0..n).map(|j| self.a[perm[i]][perm[j]].clone()).collect()).collect();
        let b = (0..n).map(|i| self.b[perm[i]].clone()).collect();
        let d = (0..n).map(|i| self.d[perm[i]]).collect();
        Self::new(a, b, self.c.clone(), d)
    }
}

impl fmt::Display for NahmData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .a
            .iter()
            .map(|r| format!("[{}]", r.iter().map(fmt_rational).collect::<Vec<_>>().join(",")))
            .collect();
        let b: Vec<String> = self.b.iter().map(fmt_rational).collect();
        let d: Vec<String> = self.d.iter().map(|x| x.to_string()).collect();
        write!(
            f,
            "A=[{}] b=({}) c={} d=({})",
            rows.join(","),
            b.join(","),
            fmt_rational(&self.c),
            d.join(",")
        )
    }
}

/// A rational in JSON: an integer or a string `"p/q"`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct JsonRational(pub Rational);

impl Serialize for JsonRational {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if *self.0.denom() == 1 {
            if let Some(v) = self.0.numer().to_i64() {
                return s.serialize_i64(v);
            }
        }
        s.serialize_str(&fmt_rational(&self.0))
    }
}

impl<'de> Deserialize<'de> for JsonRational {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(de)?;
        let r = match &v {
            serde_json::Value::Number(x) => {
                if let Some(i) = x.as_i64() {
                    Rational::from(i)
                } else {
                    return Err(serde::de::Error::custom(format!("non-integer number {x}; use \"p/q\"")));
                }
            }
            serde_json::Value::String(s) => parse_rational(s).map_err(serde::de::Error::custom)?,
            _ => return Err(serde::de::Error::custom("expected integer or \"p/q\" string")),
        };
        Ok(JsonRational(r))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintJson {
    pub i: usize,
    pub r: u64,
    pub s: u64,
}

/// JSON form of Nahm data with its summation range.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NahmJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<u32>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<JsonRational>>,
    pub b: Vec<JsonRational>,
    #[serde(default = "zero_json")]
    pub c: JsonRational,
    pub d: Vec<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constraints: Vec<ConstraintJson>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lower: Vec<u64>,
}

fn zero_json() -> JsonRational {
    JsonRational(Rational::new())
}

impl NahmJson {
    pub fn into_parts(self) -> Result<(NahmData, LatticeFilter), ModelError> {
        let data = NahmData::new(
            self.a.into_iter().map(|r| r.into_iter().map(|x| x.0).collect()).collect(),
            self.b.into_iter().map(|x| x.0).collect(),
            self.c.0,
            self.d,
        )?;
        let constraints = self
            .constraints
            .iter()
            .map(|c| {
                if c.i == 0 {
                    return Err(ModelError::InvalidConstraint("indices are 1-based".into()));
                }
                CongruenceConstraint::new(c.i - 1, c.r, c.s)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let filter = LatticeFilter { constraints, lower: self.lower };
        filter.validate(data.rank())?;
        Ok((data, filter))
    }

    pub fn from_parts(data: &NahmData, filter: &LatticeFilter) -> Self {
        Self {
            schema: Some(1),
            a: data.a.iter().map(|r| r.iter().cloned().map(JsonRational).collect()).collect(),
            b: data.b.iter().cloned().map(JsonRational).collect(),
            c: JsonRational(data.c.clone()),
            d: data.d.clone(),
            constraints: filter
                .constraints
                .iter()
                .map(|c| ConstraintJson { i: c.index + 1, r: c.residue, s: c.modulus })
                .collect(),
            lower: filter.lower.clone(),
        }
    }
}

pub fn parse_nahm_json(text: &str) -> Result<(NahmData, LatticeFilter), ModelError> {
    let j: NahmJson = serde_json::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;
    j.into_parts()
}

pub fn to_nahm_json(data: &NahmData, filter: &LatticeFilter) -> String {
    serde_json::to_string(&NahmJson::from_parts(data, filter)).expect("serializable")
}
