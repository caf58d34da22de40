//! Vector-valued modular transformations of Nahm sums, checked numerically.
//!
//! A system is a set of named vectors `g` whose components are finite sums
//! `Σ q^{s} f_{A,b,c,d;σ}(q)`, together with an `S`-matrix of signed `α_k` and relations
//! `g(−1/τ) = λ·S·h(τ/k)`.

use rayon::prelude::*;
use rug::{Complex, Float, Rational};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::model::{fmt_rational, JsonRational, ModelError, NahmJson};
use crate::qseries::{eval_numeric, QPoint, SeriesError};
use crate::specialfn::num::{cabs, czero, float, frac, pi};
use crate::specialfn::Prec;

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("{label}: exponents {a} and {b} differ modulo 1")]
    InconsistentExponents { label: String, a: String, b: String },
    #[error("{label}: exponents are {found} modulo 1, declared multiplier is {declared}")]
    WrongMultiplier { label: String, found: String, declared: String },
    #[error("bad system: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Term {
    /// Extra factor `q^{shift}`.
    #[serde(default)]
    pub shift: JsonRational,
    pub nahm: NahmJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Component {
    pub label: String,
    /// `r` with `g_j(τ+1) = 𝐞(r) g_j(τ)`.
    pub multiplier: JsonRational,
    pub terms: Vec<Term>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaKind {
    /// `α_k = √s · sin(kπ/n)`
    Sin,
    /// `α_k = 1/(√s · sin(kπ/n))`
    InvSin,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphaForm {
    pub kind: AlphaKind,
    pub scale2: JsonRational,
    pub n: u32,
}

impl AlphaForm {
    pub fn alpha(&self, k: u32, bits: u32) -> Float {
        let ang = pi(bits) * k / self.n;
        let s = ang.sin() * float(bits, &self.scale2.0).sqrt();
        match self.kind {
            AlphaKind::Sin => s,
            AlphaKind::InvSin => s.recip(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Relation {
    pub lhs: String,
    pub rhs: String,
    pub factor: JsonRational,
    /// Argument scaling `τ/k` on the right.
    pub k: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VectorSystem {
    #[serde(default)]
    pub schema: Option<u32>,
    pub name: String,
    pub alpha: AlphaForm,
    /// Entries `±k` stand for `±α_k`, `0` for zero.
    pub s: Vec<Vec<i32>>,
    pub vectors: BTreeMap<String, Vec<Component>>,
    pub relations: Vec<Relation>,
}

pub fn parse_system(text: &str) -> Result<VectorSystem, TransformError> {
    let sys: VectorSystem = serde_json::from_str(text).map_err(|e| TransformError::Invalid(e.to_string()))?;
    let n = sys.s.len();
    if sys.s.iter().any(|r| r.len() != n) {
        return Err(TransformError::Invalid("S must be square".into()));
    }
    for r in &sys.relations {
        for name in [&r.lhs, &r.rhs] {
            match sys.vectors.get(name) {
                Some(v) if v.len() == n => {}
                Some(v) => return Err(TransformError::Invalid(format!("{name} has {} components, S is {n}x{n}", v.len()))),
                None => return Err(TransformError::Invalid(format!("unknown vector {name}"))),
            }
        }
    }
    Ok(sys)
}

/// The four shipped systems: `rr`, `kr`, `b2inv`, `dualpair`.
pub fn preset(name: &str) -> Result<VectorSystem, TransformError> {
    let text = match name {
        "rr" => include_str!("../data/transforms/rr.json"),
        "kr" => include_str!("../data/transforms/kr.json"),
        "b2inv" => include_str!("../data/transforms/b2inv.json"),
        "dualpair" => include_str!("../data/transforms/dualpair.json"),
        other => return Err(TransformError::Invalid(format!("no preset named {other}"))),
    };
    parse_system(text)
}

pub const PRESETS: [&str; 4] = ["rr", "kr", "b2inv", "dualpair"];

impl VectorSystem {
    pub fn s_matrix(&self, bits: u32) -> Vec<Vec<Float>> {
        self.s
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&e| match e {
                        0 => Float::new(bits),
                        e if e > 0 => self.alpha.alpha(e as u32, bits),
                        e => -self.alpha.alpha((-e) as u32, bits),
                    })
                    .collect()
            })
            .collect()
    }

    /// `max |∏ λ_r S − I|` over the relation cycle; a single self-relation is applied twice.
    pub fn matrix_check(&self, bits: u32) -> Float {
        let s = self.s_matrix(bits);
        let n = s.len();
        let mut factors: Vec<Rational> = self.relations.iter().map(|r| r.factor.0.clone()).collect();
        if factors.len() == 1 {
            factors.push(factors[0].clone());
        }
        let mut prod: Vec<Vec<Float>> =
            (0..n).map(|i| (0..n).map(|j| Float::with_val(bits, (i == j) as u32)).collect()).collect();
        for f in &factors {
            let ff = float(bits, f);
            let mut next = vec![vec![Float::new(bits); n]; n];
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        next[i][j] += Float::with_val(bits, &prod[i][k] * &s[k][j]) * &ff;
                    }
                }
            }
            prod = next;
        }
        let mut worst = Float::new(bits);
        for (i, row) in prod.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                let d = Float::with_val(bits, x - (i == j) as u32).abs();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }
}

/// `g_j(τ)` by direct summation of every term.
pub fn eval_component(comp: &Component, tau: &Complex, prec: Prec) -> Result<Complex, TransformError> {
    let bits = prec.bits();
    let qp = QPoint::from_tau(tau);
    let vals: Vec<Result<Complex, TransformError>> = comp
        .terms
        .par_iter()
        .map(|t| {
            let (data, filter) = t.nahm.clone().into_parts()?;
            let v = eval_numeric(&data, &filter, &qp, prec)?;
            Ok(v.value * qp.pow(&t.shift.0, bits))
        })
        .collect();
    let mut out = czero(bits);
    for v in vals {
        out += v?;
    }
    Ok(out)
}

fn eval_vector(comps: &[Component], tau: &Complex, prec: Prec) -> Result<Vec<Complex>, TransformError> {
    comps.par_iter().map(|c| eval_component(c, tau, prec)).collect()
}

/// Exact check that `Q(n) + shift` is constant modulo 1 on each component and equals the
/// declared multiplier. Lattice points with coordinates below `bound` are enumerated.
pub fn verify_t(sys: &VectorSystem, bound: i64) -> Result<Vec<(String, Rational)>, TransformError> {
    let mut out = Vec::new();
    for (name, comps) in &sys.vectors {
        for comp in comps {
            let label = format!("{name}: {}", comp.label);
            let mut seen: Option<Rational> = None;
            for t in &comp.terms {
                let (data, filter) = t.nahm.clone().into_parts()?;
                let n = data.rank();
                let mut k = vec![0i64; n];
                loop {
                    let nn: Vec<u64> = k.iter().map(|&x| x as u64).collect();
                    if filter.admits(&nn) {
                        let v = frac(&(data.quadratic_form_unchecked(&k) + &t.shift.0));
                        match &seen {
                            None => seen = Some(v),
                            Some(s) if *s != v => {
                                return Err(TransformError::InconsistentExponents {
                                    label,
                                    a: fmt_rational(s),
                                    b: fmt_rational(&v),
                                })
                            }
                            _ => {}
                        }
                    }
                    let mut i = 0;
                    while i < n {
                        k[i] += 1;
                        if k[i] < bound {
                            break;
                        }
                        k[i] = 0;
                        i += 1;
                    }
                    if i == n {
                        break;
                    }
                }
            }
            let found = seen.ok_or_else(|| TransformError::Invalid(format!("{label}: no lattice points")))?;
            if found != frac(&comp.multiplier.0) {
                return Err(TransformError::WrongMultiplier {
                    label,
                    found: fmt_rational(&found),
                    declared: fmt_rational(&comp.multiplier.0),
                });
            }
            out.push((label, found));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct TransformRow {
    pub relation: String,
    pub tau: String,
    /// `|lhs_j − rhs_j|` per component.
    pub abs_errors: Vec<f64>,
    /// `max_j |lhs_j − rhs_j| / max_j |lhs_j|`
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransformReport {
    pub schema: u32,
    pub system: String,
    pub rows: Vec<TransformRow>,
    pub max_error: f64,
    /// Deviation of the composed `S`-matrices from the identity.
    pub matrix_check: f64,
}

/// Evaluates both sides of every relation at `τ = it` for each `t`.
pub fn verify_s(sys: &VectorSystem, taus: &[Float], prec: Prec) -> Result<TransformReport, TransformError> {
    let bits = prec.bits();
    let s = sys.s_matrix(bits);
    let mut rows = Vec::new();
    let mut max_error: f64 = 0.0;
    for rel in &sys.relations {
        let lhs_v = &sys.vectors[&rel.lhs];
        let rhs_v = &sys.vectors[&rel.rhs];
        let fac = float(bits, &rel.factor.0);
        for t in taus {
            let inv = Complex::with_val(bits, (0, Float::with_val(bits, t.recip_ref())));
            let scaled = Complex::with_val(bits, (0, Float::with_val(bits, t / rel.k)));
            let lhs = eval_vector(lhs_v, &inv, prec)?;
            let rhs = eval_vector(rhs_v, &scaled, prec)?;
            let mut norm = Float::new(bits);
            let mut errs = Vec::new();
            let mut worst = Float::new(bits);
            for (i, l) in lhs.iter().enumerate() {
                let mut acc = czero(bits);
                for (j, r) in rhs.iter().enumerate() {
                    acc += Complex::with_val(bits, r * &s[i][j]);
                }
                acc *= &fac;
                let e = cabs(&Complex::with_val(bits, l - &acc));
                let a = cabs(l);
                if a > norm {
                    norm = a;
                }
                if e > worst {
                    worst = e.clone();
                }
                errs.push(e.to_f64());
            }
            let error = (worst / norm).to_f64();
            max_error = max_error.max(error);
            rows.push(TransformRow {
                relation: format!("{}(-1/τ) = {}·S·{}(τ/{})", rel.lhs, fmt_rational(&rel.factor.0), rel.rhs, rel.k),
                tau: format!("{}i", t.to_f64()),
                abs_errors: errs,
                error,
            });
        }
    }
    Ok(TransformReport {
        schema: 1,
        system: sys.name.clone(),
        rows,
        max_error,
        matrix_check: sys.matrix_check(bits).to_f64(),
    })
}

/// The default sample `τ ∈ {0.8i, i, 1.3i}`.
pub fn default_taus(bits: u32) -> Vec<Float> {
    [(4, 5), (1, 1), (13, 10)].iter().map(|&(p, q)| float(bits, &Rational::from((p, q)))).collect()
}
