//! The third-difference test and the search for modular candidates.
//!
//! `φ(N) = N log f(e^{−1/N})` is a quadratic polynomial in `N` up to exponentially small
//! terms when `q^c f` is modular, so `Δ³φ` is tiny. The scan enumerates `A`, keeps those
//! with rational `λ`, and tests every `b` on a small rational grid.

use std::collections::BTreeSet;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rug::{Float, Rational};
use serde::{Deserialize, Serialize};

use crate::asymptotics::determine_c;
use crate::model::{fmt_rational, is_positive_definite, lcm_u64, JsonRational, LatticeFilter, Matrix, ModelError, NahmData};
use crate::qseries::{eval_numeric, log_sum_real_f64, QPoint, SeriesError};
use crate::solver::{detect_rational_f64, lambda_f64, solve_nahm_f64};
use crate::specialfn::num::solve_linear_real;
use crate::specialfn::Prec;

pub const DEFAULT_THRESHOLD: f64 = 1e-6;
pub const DEFAULT_N_BASE: u32 = 20;

/// `φ(N) = N log f(e^{−1/N})`.
#[derive(Debug, Clone)]
pub struct PhiSample {
    pub n: u32,
    pub phi: Float,
}

pub fn phi_sample(data: &NahmData, filter: &LatticeFilter, n: u32, prec: Prec) -> Result<PhiSample, SeriesError> {
    let p = prec.plus(5);
    let v = eval_numeric(data, filter, &QPoint::exp_neg_inv(n, p.bits()), p)?;
    let re = v.value.real().clone();
    if re <= 0u32 {
        return Err(SeriesError::PrecisionUnreachable("sum is not positive".into()));
    }
    Ok(PhiSample { n, phi: re.ln() * n })
}

#[derive(Debug, Clone)]
pub struct ThirdDifference {
    pub samples: Vec<PhiSample>,
    /// `φ(N+3) − 3φ(N+2) + 3φ(N+1) − φ(N)`
    pub third_diff: Float,
    pub candidate: bool,
}

fn delta3<T>(v: &[T]) -> T
where
    T: Clone + std::ops::Sub<Output = T> + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    v[3].clone() - v[2].clone() * 3.0 + v[1].clone() * 3.0 - v[0].clone()
}

pub fn third_difference_test(
    data: &NahmData,
    filter: &LatticeFilter,
    n_base: u32,
    prec: Prec,
    threshold: f64,
) -> Result<ThirdDifference, SeriesError> {
    let samples = (0..4u32)
        .into_par_iter()
        .map(|k| phi_sample(data, filter, n_base + k, prec))
        .collect::<Result<Vec<_>, _>>()?;
    let bits = samples[0].phi.prec();
    let mut t = Float::with_val(bits, &samples[3].phi - &samples[0].phi);
    t += Float::with_val(bits, &samples[1].phi - &samples[2].phi) * 3u32;
    let candidate = t.clone().abs() < threshold;
    Ok(ThirdDifference { samples, third_diff: t, candidate })
}

/// The same difference in double precision; good to about `10⁻⁹`.
pub fn third_difference_f64(data: &NahmData, filter: &LatticeFilter, n_base: u32) -> Result<f64, SeriesError> {
    let mut phi = [0.0f64; 4];
    for (k, p) in phi.iter_mut().enumerate() {
        let n = (n_base + k as u32) as f64;
        *p = n * log_sum_real_f64(data, filter, 1.0 / n)?;
    }
    if phi.iter().any(|p| !p.is_finite()) {
        return Err(SeriesError::PrecisionUnreachable("sum is not positive".into()));
    }
    Ok(delta3(&phi))
}

/// Minimax line through `φ(N) − σΛN²` at three points.
#[derive(Debug, Clone)]
pub struct QuadraticFit {
    pub linear: Float,
    pub constant: Float,
    /// Largest deviation from the line; zero for exact quadratics.
    pub residual: Float,
}

pub fn quadratic_fit(samples: &[PhiSample], big_lambda: &Float) -> QuadraticFit {
    assert_eq!(samples.len(), 3, "quadratic_fit takes three samples");
    let bits = samples[0].phi.prec().max(big_lambda.prec());
    let sigma = crate::asymptotics::SIGMA;
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        let n2 = Float::with_val(bits, s.n as u64 * s.n as u64);
        let y = Float::with_val(bits, &s.phi - Float::with_val(bits, big_lambda * sigma) * n2);
        let alt = if i % 2 == 0 { 1 } else { -1 };
        rows.push(vec![Float::with_val(bits, 1), Float::with_val(bits, s.n), Float::with_val(bits, alt)]);
        rhs.push(y);
    }
    let x = solve_linear_real(&rows, &rhs).expect("distinct sample points");
    QuadraticFit { constant: x[0].clone(), linear: x[1].clone(), residual: x[2].clone().abs() }
}

/// `p/q` with `|p| ≤ h`, `1 ≤ q ≤ h`, sorted.
pub fn grid_values(height: u32) -> Vec<Rational> {
    let h = height as i64;
    let mut set = BTreeSet::new();
    for q in 1..=h.max(1) {
        for p in -h..=h {
            set.insert(Rational::from((p, q)));
        }
    }
    set.into_iter().collect()
}

fn in_grid(x: &Rational, height: u32) -> bool {
    x.numer().clone().abs() <= height && *x.denom() <= height.max(1)
}

fn d_permutations(d: &[u32]) -> Vec<Vec<usize>> {
    fn rec(d: &[u32], cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        let i = cur.len();
        if i == d.len() {
            out.push(cur.clone());
            return;
        }
        for j in 0..d.len() {
            if !used[j] && d[j] == d[i] {
                used[j] = true;
                cur.push(j);
                rec(d, cur, used, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(d, &mut Vec::new(), &mut vec![false; d.len()], &mut out);
    out
}

fn flat(a: &Matrix, perm: &[usize]) -> Vec<Rational> {
    let n = perm.len();
    let mut v = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            v.push(a[perm[i]][perm[j]].clone());
        }
    }
    v
}

/// All `A` with entries in [`grid_values`], `AD` symmetric positive definite, one per orbit
/// of the coordinate permutations that fix `d`. `b = 0`, `c = 0`.
pub fn enumerate_candidates(rank: usize, d: &[u32], height: u32) -> Result<Vec<NahmData>, ModelError> {
    if d.len() != rank || !(1..=3).contains(&rank) {
        return Err(ModelError::DimensionMismatch(format!("rank {rank} with d of length {}", d.len())));
    }
    let values = grid_values(height);
    let positive: Vec<Rational> = values.iter().filter(|x| **x > 0).cloned().collect();
    let mut slots = Vec::new();
    for i in 0..rank {
        for j in i..rank {
            slots.push((i, j));
        }
    }
    let perms = d_permutations(d);
    let mut out = Vec::new();
    let mut a = vec![vec![Rational::new(); rank]; rank];
    fill(0, &slots, &values, &positive, d, height, &mut a, &perms, &mut out)?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn fill(
    k: usize,
    slots: &[(usize, usize)],
    values: &[Rational],
    positive: &[Rational],
    d: &[u32],
    height: u32,
    a: &mut Matrix,
    perms: &[Vec<usize>],
    out: &mut Vec<NahmData>,
) -> Result<(), ModelError> {
    if k == slots.len() {
        let ad: Matrix =
            a.iter().map(|row| row.iter().zip(d).map(|(x, &dj)| Rational::from(x * dj)).collect()).collect();
        if !is_positive_definite(&ad) {
            return Ok(());
        }
        let own = flat(a, &perms[0]);
        if perms.iter().any(|p| flat(a, p) < own) {
            return Ok(());
        }
        let n = a.len();
        out.push(NahmData::new(a.clone(), vec![Rational::new(); n], Rational::new(), d.to_vec())?);
        return Ok(());
    }
    let (i, j) = slots[k];
    let choices = if i == j { positive } else { values };
    for x in choices {
        if i != j {
            // AD symmetric: A_ji d_i = A_ij d_j
            let mirror = Rational::from(x * d[j]) / d[i];
            if !in_grid(&mirror, height) {
                continue;
            }
            a[j][i] = mirror;
        }
        a[i][j] = x.clone();
        fill(k + 1, slots, values, positive, d, height, a, perms, out)?;
    }
    Ok(())
}

/// Vectors `b` whose entries have `|numerator| ≤ b_height` and denominator dividing `lcm(d, 2)`.
pub fn b_grid(d: &[u32], b_height: u32) -> Vec<Vec<Rational>> {
    let den = d.iter().fold(2u64, |acc, &x| lcm_u64(acc, x as u64)) as i64;
    let h = b_height as i64;
    let mut set = BTreeSet::new();
    for q in (1..=den).filter(|q| den % q == 0) {
        for p in -h..=h {
            let r = Rational::from((p, q));
            if r.numer().clone().abs() <= h {
                set.insert(r);
            }
        }
    }
    let vals: Vec<Rational> = set.into_iter().collect();
    let mut out = vec![Vec::new()];
    for _ in 0..d.len() {
        out = out
            .into_iter()
            .flat_map(|v| {
                vals.iter().map(move |x| {
                    let mut w = v.clone();
                    w.push(x.clone());
                    w
                })
            })
            .collect();
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Candidate,
    Rejected,
}

#[derive(Debug, Clone)]
pub struct ScanRecord {
    /// `c` is set to `c_est` when that was found.
    pub data: NahmData,
    pub filter: LatticeFilter,
    pub third_diff: f64,
    pub lambda: f64,
    pub lambda_rational: Option<Rational>,
    pub c_est: Option<Rational>,
    /// `max_{k≥2} |ε^k|` of `e^{−c_est ε} S(ε)` relative to `ε⁰`.
    pub c_residual: Option<f64>,
    /// Candidate whose shifted expansion also vanishes past `ε¹`.
    pub confirmed: bool,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanFailure {
    pub a: String,
    pub b: String,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub rank: usize,
    pub d: Vec<u32>,
    pub height: u32,
    pub b_height: u32,
    pub threshold: f64,
    pub prec: Prec,
    pub n_base: u32,
    /// Series order for [`determine_c`].
    pub order: usize,
    /// Also try `n_i ≡ σ (mod 2)` when the full sum fails.
    pub split: bool,
    pub lambda_max_den: u64,
}

impl ScanConfig {
    pub fn new(d: &[u32], height: u32, b_height: u32) -> Self {
        Self {
            rank: d.len(),
            d: d.to_vec(),
            height,
            b_height,
            threshold: DEFAULT_THRESHOLD,
            prec: Prec { digits: 60 },
            n_base: DEFAULT_N_BASE,
            order: 3,
            split: false,
            lambda_max_den: 1000,
        }
    }

    /// Double-precision differences above this skip the full-precision test.
    fn prefilter(&self) -> f64 {
        self.threshold + 1e-8
    }

    /// `10^{−P/3}`
    pub fn confirm_tol(&self) -> f64 {
        10f64.powf(-(self.prec.digits as f64) / 3.0)
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ScanStats {
    pub matrices: usize,
    pub rational_lambda: usize,
    pub tested: usize,
    pub full_precision: usize,
    pub candidates: usize,
    pub confirmed: usize,
}

#[derive(Debug, Clone, Default)]
pub struct ScanOutput {
    /// Every tested `(A, b)` in enumeration order.
    pub records: Vec<ScanRecord>,
    pub failures: Vec<ScanFailure>,
    pub stats: ScanStats,
}

impl ScanOutput {
    pub fn candidates(&self) -> impl Iterator<Item = &ScanRecord> {
        self.records.iter().filter(|r| r.verdict == Verdict::Candidate)
    }

    /// The table: candidates confirmed by the expansion at `q → 1`.
    pub fn table(&self) -> impl Iterator<Item = &ScanRecord> {
        self.candidates().filter(|r| r.confirmed)
    }
}

fn fmt_vec(v: &[Rational]) -> String {
    v.iter().map(fmt_rational).collect::<Vec<_>>().join(" ")
}

fn fmt_matrix(a: &Matrix) -> String {
    a.iter().map(|r| fmt_vec(r)).collect::<Vec<_>>().join("; ")
}

struct Tested {
    record: ScanRecord,
    full: bool,
}

fn test_one(data: &NahmData, filter: &LatticeFilter, cfg: &ScanConfig) -> Result<Tested, String> {
    let pre = third_difference_f64(data, filter, cfg.n_base).map_err(|e| e.to_string())?;
    let mut record = ScanRecord {
        data: data.clone(),
        filter: filter.clone(),
        third_diff: pre,
        lambda: 0.0,
        lambda_rational: None,
        c_est: None,
        c_residual: None,
        confirmed: false,
        verdict: Verdict::Rejected,
    };
    if pre.abs() >= cfg.prefilter() {
        return Ok(Tested { record, full: false });
    }
    let t = third_difference_test(data, filter, cfg.n_base, cfg.prec, cfg.threshold).map_err(|e| e.to_string())?;
    record.third_diff = t.third_diff.to_f64();
    if t.candidate {
        record.verdict = Verdict::Candidate;
        if filter.constraints.is_empty() && filter.lower.is_empty() {
            let est = determine_c(data, cfg.order, cfg.prec).map_err(|e| e.to_string())?;
            let res = est.residual().to_f64();
            record.c_residual = Some(res);
            record.confirmed = res < cfg.confirm_tol() && est.c_rational.is_some();
            if let Some(c) = est.c_rational {
                record.data = data.with_c(c.clone());
                record.c_est = Some(c);
            }
        }
    }
    Ok(Tested { record, full: true })
}

fn scan_matrix(a: &NahmData, bgrid: &[Vec<Rational>], cfg: &ScanConfig) -> (Vec<ScanRecord>, Vec<ScanFailure>, ScanStats) {
    let mut stats = ScanStats { matrices: 1, ..Default::default() };
    let mut records = Vec::new();
    let mut failures = Vec::new();
    let fail = |b: &str, m: String| ScanFailure { a: fmt_matrix(a.a()), b: b.to_string(), message: m };
    let Some(z) = solve_nahm_f64(a) else {
        failures.push(fail("", "Newton iteration did not converge".into()));
        return (records, failures, stats);
    };
    let lambda = lambda_f64(&z, a.d());
    let Some(lr) = detect_rational_f64(lambda, cfg.lambda_max_den, 1e-12) else {
        return (records, failures, stats);
    };
    stats.rational_lambda = 1;
    for b in bgrid {
        let data = match a.with_b(b.clone()) {
            Ok(x) => x,
            Err(e) => {
                failures.push(fail(&fmt_vec(b), e.to_string()));
                continue;
            }
        };
        let mut filters = vec![LatticeFilter::none()];
        let mut i = 0;
        while i < filters.len() {
            stats.tested += 1;
            match test_one(&data, &filters[i], cfg) {
                Ok(t) => {
                    stats.full_precision += t.full as usize;
                    let mut r = t.record;
                    r.lambda = lambda;
                    r.lambda_rational = Some(lr.clone());
                    if r.verdict == Verdict::Candidate {
                        stats.candidates += 1;
                        stats.confirmed += r.confirmed as usize;
                    } else if i == 0 && cfg.split {
                        for k in 0..data.rank() {
                            for s in 0..2 {
                                filters.push(LatticeFilter::congruence(k, s, 2));
                            }
                        }
                    }
                    if i == 0 || r.verdict == Verdict::Candidate {
                        records.push(r);
                    }
                }
                Err(m) => failures.push(fail(&fmt_vec(b), m)),
            }
            i += 1;
        }
    }
    (records, failures, stats)
}

/// Runs the pipeline over every enumerated `A`, in parallel; output order is the enumeration order.
pub fn scan(cfg: &ScanConfig) -> Result<ScanOutput, ModelError> {
    let mats = enumerate_candidates(cfg.rank, &cfg.d, cfg.height)?;
    let bgrid = b_grid(&cfg.d, cfg.b_height);
    let parts: Vec<_> = mats.par_iter().map(|a| scan_matrix(a, &bgrid, cfg)).collect();
    let mut out = ScanOutput::default();
    for (r, f, s) in parts {
        out.records.extend(r);
        out.failures.extend(f);
        out.stats.matrices += s.matrices;
        out.stats.rational_lambda += s.rational_lambda;
        out.stats.tested += s.tested;
        out.stats.full_precision += s.full_precision;
        out.stats.candidates += s.candidates;
        out.stats.confirmed += s.confirmed;
    }
    Ok(out)
}

pub const CSV_HEADER: [&str; 7] = ["A", "b", "c_est", "d", "third_diff", "lambda", "constraint"];

/// A [`ScanRecord`] with every field rendered as text or `f64`.
#[derive(Debug, Clone, Serialize)]
pub struct RecordRow {
    pub a: String,
    pub b: String,
    pub d: String,
    pub constraint: String,
    pub c_est: Option<String>,
    pub third_diff: f64,
    pub lambda: f64,
    pub lambda_rational: Option<String>,
    pub c_residual: Option<f64>,
    pub confirmed: bool,
    pub verdict: Verdict,
}

impl ScanRecord {
    pub fn row(&self) -> RecordRow {
        let d: Vec<String> = self.data.d().iter().map(|x| x.to_string()).collect();
        let constraint = self
            .filter
            .constraints
            .iter()
            .map(|c| format!("n{}={} mod {}", c.index + 1, c.residue, c.modulus))
            .collect::<Vec<_>>()
            .join(" ");
        RecordRow {
            a: fmt_matrix(self.data.a()),
            b: fmt_vec(self.data.b()),
            d: d.join(" "),
            constraint,
            c_est: self.c_est.as_ref().map(fmt_rational),
            third_diff: self.third_diff,
            lambda: self.lambda,
            lambda_rational: self.lambda_rational.as_ref().map(fmt_rational),
            c_residual: self.c_residual,
            confirmed: self.confirmed,
            verdict: self.verdict,
        }
    }
}

/// Confirmed candidates, one row per `(A, b)`.
pub fn write_csv<W: Write>(out: &ScanOutput, w: W) -> Result<(), csv::Error> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(CSV_HEADER)?;
    for r in out.table() {
        let row = r.row();
        wr.write_record([
            row.a,
            row.b,
            row.c_est.unwrap_or_default(),
            row.d,
            format!("{:.3e}", row.third_diff),
            row.lambda_rational.unwrap_or_else(|| format!("{}", row.lambda)),
            row.constraint,
        ])?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableRow {
    pub b: Vec<JsonRational>,
    /// As printed.
    pub c: JsonRational,
    /// Set where the printed `c` disagrees with the value the sum actually has.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corrected_c: Option<JsonRational>,
}

impl TableRow {
    pub fn effective_c(&self) -> &Rational {
        &self.corrected_c.as_ref().unwrap_or(&self.c).0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableBlock {
    pub a: Vec<Vec<JsonRational>>,
    pub d: Vec<u32>,
    pub rows: Vec<TableRow>,
}

impl TableBlock {
    pub fn matrix(&self) -> Matrix {
        self.a.iter().map(|r| r.iter().map(|x| x.0.clone()).collect()).collect()
    }

    /// Row `row` with its effective `c`.
    pub fn data(&self, row: usize) -> Result<NahmData, ModelError> {
        let r = &self.rows[row];
        NahmData::new(self.matrix(), r.b.iter().map(|x| x.0.clone()).collect(), r.effective_c().clone(), self.d.clone())
    }
}

/// Known modular candidates with their `b` and `c`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReferenceTable {
    pub schema: u32,
    pub name: String,
    pub blocks: Vec<TableBlock>,
}

pub const REFERENCE_TABLES: [&str; 3] = ["rank2", "d112", "d221"];

pub fn reference_table(name: &str) -> Result<ReferenceTable, ModelError> {
    let text = match name {
        "rank2" => include_str!("../data/tables/rank2.json"),
        "d112" => include_str!("../data/tables/d112.json"),
        "d221" => include_str!("../data/tables/d221.json"),
        _ => return Err(ModelError::Parse(format!("unknown table {name}"))),
    };
    serde_json::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))
}

/// Rank-2 reference rows with `b` moved off the grid by `k/5`, `k ∈ {±1, ±2}`, in one or both coordinates.
pub fn perturbed_controls(count: usize, seed: u64) -> Vec<NahmData> {
    let table = reference_table("rank2").expect("bundled table");
    let rows: Vec<NahmData> = table
        .blocks
        .iter()
        .flat_map(|b| (0..b.rows.len()).map(move |i| b.data(i).expect("bundled row")))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = [-2i64, -1, 1, 2];
    (0..count)
        .map(|_| {
            let base = &rows[rng.gen_range(0..rows.len())];
            let which = rng.gen_range(0..3usize);
            let b: Vec<Rational> = base
                .b()
                .iter()
                .enumerate()
                .map(|(i, x)| {
                    if which == 2 || which == i {
                        x + Rational::from((steps[rng.gen_range(0..4)], 5))
                    } else {
                        x.clone()
                    }
                })
                .collect();
            base.with_b(b).expect("same shape").with_c(Rational::new())
        })
        .collect()
}

#[cfg(test)]
mod tests;
