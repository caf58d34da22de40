use std::fmt;

use rug::{Integer, Rational};

use crate::model::fmt_rational;

/// Truncated power series in `q^{1/den}`: `Σ_k coeffs[k] q^{offset + k/den}`, exact for
/// every exponent `≤ order`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QSeries {
    den: u64,
    offset: Rational,
    coeffs: Vec<Rational>,
    order: Rational,
}

fn lcm(a: &Integer, b: &Integer) -> Integer {
    Integer::from(a.lcm_ref(b))
}

impl QSeries {
    /// Series on the grid `offset + k/den` known up to `order`; `coeffs` is padded
    /// or truncated to fit.
    pub fn new(den: u64, offset: Rational, mut coeffs: Vec<Rational>, order: Rational) -> Self {
        assert!(den > 0);
        let len = Self::grid_len(den, &offset, &order);
        coeffs.resize(len, Rational::new());
        Self { den, offset, coeffs, order }
    }

    pub fn from_integers(den: u64, offset: Rational, coeffs: Vec<Integer>, order: Rational) -> Self {
        Self::new(den, offset, coeffs.into_iter().map(Rational::from).collect(), order)
    }

    fn grid_len(den: u64, offset: &Rational, order: &Rational) -> usize {
        if order < offset {
            return 0;
        }
        let span = Rational::from(order - offset) * den;
        let fl = Integer::from(span.floor_ref());
        fl.to_usize().expect("series too long") + 1
    }

    pub fn one(order: Rational) -> Self {
        Self::new(1, Rational::new(), vec![Rational::from(1)], order)
    }

    pub fn den(&self) -> u64 {
        self.den
    }
    pub fn offset(&self) -> &Rational {
        &self.offset
    }
    pub fn order(&self) -> &Rational {
        &self.order
    }
    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn exponent(&self, k: usize) -> Rational {
        &self.offset + Rational::from((k as u64, self.den)) 
    }

    /// Coefficient of `q^e`, or `None` beyond the truncation order.
    pub fn coeff(&self, e: &Rational) -> Option<Rational> {
        if *e > self.order {
            return None;
        }
        if *e < self.offset {
            return Some(Rational::new());
        }
        let pos = Rational::from(e - &self.offset) * self.den;
        if *pos.denom() != 1 {
            return Some(Rational::new());
        }
        let k = pos.numer().to_usize()?;
        Some(self.coeffs.get(k).cloned().unwrap_or_default())
    }

    /// Multiply by `q^r`.
    pub fn shift(&self, r: &Rational) -> Self {
        Self {
            den: self.den,
            offset: Rational::from(&self.offset + r),
            coeffs: self.coeffs.clone(),
            order: Rational::from(&self.order + r),
        }
    }

    pub fn scale(&self, s: &Rational) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| Rational::from(c * s)).collect(), ..self.clone() }
    }

    pub fn truncate(&self, order: &Rational) -> Self {
        let order = if *order < self.order { order.clone() } else { self.order.clone() };
        Self::new(self.den, self.offset.clone(), self.coeffs.clone(), order)
    }

    /// Re-express on the grid `base + k/den`; `den` and `base` must be compatible.
    pub fn regrid(&self, den: u64, base: &Rational) -> Self {
        assert!(den.is_multiple_of(self.den), "grid must refine");
        assert!(*base <= self.offset);
        let step = den / self.den;
        let shift = Rational::from(&self.offset - base) * den;
        assert_eq!(*shift.denom(), 1, "incompatible grid");
        let s = shift.numer().to_usize().unwrap();
        let mut out = vec![Rational::new(); Self::grid_len(den, base, &self.order)];
        for (k, c) in self.coeffs.iter().enumerate() {
            let idx = s + k * step as usize;
            if idx < out.len() {
                out[idx] = c.clone();
            }
        }
        Self::new(den, base.clone(), out, self.order.clone())
    }

    fn common_grid(&self, other: &Self) -> (u64, Rational) {
        let d = lcm(&Integer::from(self.den), &Integer::from(other.den));
        let diff = Rational::from(&self.offset - &other.offset);
        let d = lcm(&d, diff.denom()).to_u64().expect("grid");
        let base = if self.offset < other.offset { self.offset.clone() } else { other.offset.clone() };
        (d, base)
    }

    pub fn add(&self, other: &Self) -> Self {
        let (den, base) = self.common_grid(other);
        let order = if self.order < other.order { self.order.clone() } else { other.order.clone() };
        let a = self.regrid(den, &base).truncate(&order);
        let b = other.regrid(den, &base).truncate(&order);
        let coeffs = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| Rational::from(x + y)).collect();
        Self::new(den, base, coeffs, order)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (den, _) = self.common_grid(other);
        let den = if Rational::from(&self.offset + &other.offset).denom() == &1 {
            den
        } else {
            lcm(&Integer::from(den), Rational::from(&self.offset + &other.offset).denom())
                .to_u64()
                .unwrap()
        };
        let a = self.regrid(den, &self.offset);
        let b = other.regrid(den, &other.offset);
        let base = Rational::from(&self.offset + &other.offset);
        let o1 = Rational::from(&self.order + &other.offset);
        let o2 = Rational::from(&other.order + &self.offset);
        let order = if o1 < o2 { o1 } else { o2 };
        let len = Self::grid_len(den, &base, &order);
        let mut out = vec![Rational::new(); len];
        for (i, x) in a.coeffs.iter().enumerate() {
            if *x == 0 {
                continue;
            }
            for (j, y) in b.coeffs.iter().enumerate() {
                if i + j >= len {
                    break;
                }
                out[i + j] += Rational::from(x * y);
            }
        }
        Self::new(den, base, out, order)
    }

    /// `(exponent, coefficient)` for the nonzero terms.
    pub fn terms(&self) -> impl Iterator<Item = (Rational, &Rational)> + '_ {
        self.coeffs.iter().enumerate().filter(|(_, c)| **c != 0).map(|(k, c)| (self.exponent(k), c))
    }

    /// Sum of the known terms at a real point, in double precision.
    pub fn eval_f64(&self, q: f64) -> f64 {
        self.terms().map(|(e, c)| c.to_f64() * q.powf(e.to_f64())).sum()
    }
}

impl fmt::Display for QSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (e, c) in self.terms().take(12) {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{}q^{}", fmt_rational(c), fmt_rational(&e))?;
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " + O(q^{})", fmt_rational(&self.order))
    }
}

/// Outcome of comparing two truncated series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IdentityReport {
    /// Coefficients agree for all exponents up to the given order.
    Equal { verified_to: Rational },
    /// First exponent where they differ.
    Mismatch { exponent: Rational, lhs: Rational, rhs: Rational },
}

impl IdentityReport {
    pub fn is_equal(&self) -> bool {
        matches!(self, IdentityReport::Equal { .. })
    }
}

impl fmt::Display for IdentityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IdentityReport::Equal { verified_to } => write!(f, "verified to q^{}", fmt_rational(verified_to)),
            IdentityReport::Mismatch { exponent, lhs, rhs } => write!(
                f,
                "mismatch at q^{}: {} vs {}",
                fmt_rational(exponent),
                fmt_rational(lhs),
                fmt_rational(rhs)
            ),
        }
    }
}

/// Exact comparison up to the smaller truncation order.
pub fn verify_identity(lhs: &QSeries, rhs: &QSeries) -> IdentityReport {
    let (den, base) = lhs.common_grid(rhs);
    let order = if lhs.order < rhs.order { lhs.order.clone() } else { rhs.order.clone() };
    let a = lhs.regrid(den, &base).truncate(&order);
    let b = rhs.regrid(den, &base).truncate(&order);
    for (k, (x, y)) in a.coeffs.iter().zip(&b.coeffs).enumerate() {
        if x != y {
            return IdentityReport::Mismatch { exponent: a.exponent(k), lhs: x.clone(), rhs: y.clone() };
        }
    }
    IdentityReport::Equal { verified_to: order }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::q;

    fn ints(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| Rational::from(x)).collect()
    }

    #[test]
    fn grid_and_coefficients() {
        let s = QSeries::new(2, q("-1/4"), ints(&[1, 0, 3]), q("1"));
        assert_eq!(s.coeffs().len(), 3);
        assert_eq!(s.coeff(&q("-1/4")), Some(q("1")));
        assert_eq!(s.coeff(&q("3/4")), Some(q("3")));
        assert_eq!(s.coeff(&q("1/2")), Some(q("0")));
        assert_eq!(s.coeff(&q("5/4")), None);
    }

    #[test]
    fn multiplication_respects_truncation() {
        let a = QSeries::new(1, q("0"), ints(&[1, -1]), q("5"));
        let geo = vec![1i64; 6];
        let b = QSeries::new(1, q("0"), ints(&geo), q("5"));
        let p = a.mul(&b);
        assert_eq!(*p.order(), q("5"));
        assert_eq!(p.coeffs(), &ints(&[1, 0, 0, 0, 0, 0])[..]);
        let h = QSeries::new(2, q("1/2"), ints(&[1]), q("3/2"));
        let ph = h.mul(&b);
        assert_eq!(*ph.order(), q("3/2"));
    }

    #[test]
    fn compare_on_common_grid() {
        let a = QSeries::new(1, q("0"), ints(&[1, 1, 2]), q("2"));
        let b = QSeries::new(2, q("0"), ints(&[1, 0, 1, 0, 2]), q("2"));
        assert!(verify_identity(&a, &b).is_equal());
        let c = QSeries::new(2, q("0"), ints(&[1, 0, 1, 1, 2]), q("2"));
        assert_eq!(
            verify_identity(&a, &c),
            IdentityReport::Mismatch { exponent: q("3/2"), lhs: q("0"), rhs: q("1") }
        );
        let shifted = a.shift(&q("-1/3"));
        assert_eq!(shifted.coeff(&q("2/3")), Some(q("1")));
    }
}
