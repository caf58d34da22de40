//! Identity files: a chain of q-series that should all agree.
//!
//! ```json
//! {"name": "rr1", "order": 200,
//!  "sides": [{"nahm": {"A": [[2]], "b": [0], "d": [1]}},
//!            {"single": {"a": 1, "b": 0, "mu": 1, "nu": 0}},
//!            {"product": [{"a": 1, "M": 5, "e": -1}, {"a": 4, "M": 5, "e": -1}]}]}
//! ```
//!
//! The short form `{"name", "nahm", "product", "order"}` is accepted as well. Every side
//! may carry `"shift": "p/q"` meaning multiplication by `q^{p/q}`.

use rug::Rational;
use serde::{Deserialize, Serialize};

use super::nahm::nahm_series;
use super::product::{product_series, single_sum_series, Factor};
use super::series::{verify_identity, IdentityReport, QSeries};
use super::SeriesError;
use crate::model::{fmt_rational, JsonRational, NahmJson};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SingleSum {
    pub a: JsonRational,
    pub b: JsonRational,
    pub mu: u64,
    pub nu: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SideKind {
    Nahm(NahmJson),
    /// `Σ q^{an²+bn}/(q;q)_{μn+ν}`
    Single(SingleSum),
    Product(Vec<Factor>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentitySide {
    #[serde(flatten)]
    pub kind: SideKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<JsonRational>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Identity {
    pub name: String,
    pub order: JsonRational,
    pub sides: Vec<IdentitySide>,
}

#[derive(Deserialize)]
struct RawIdentity {
    name: String,
    order: JsonRational,
    #[serde(default)]
    sides: Vec<IdentitySide>,
    nahm: Option<NahmJson>,
    product: Option<Vec<Factor>>,
}

pub fn load_identity(text: &str) -> Result<Identity, SeriesError> {
    let raw: RawIdentity = serde_json::from_str(text).map_err(|e| SeriesError::Corpus(e.to_string()))?;
    let mut sides = raw.sides;
    if let Some(n) = raw.nahm {
        sides.insert(0, IdentitySide { kind: SideKind::Nahm(n), shift: None });
    }
    if let Some(p) = raw.product {
        sides.push(IdentitySide { kind: SideKind::Product(p), shift: None });
    }
    if sides.len() < 2 {
        return Err(SeriesError::Corpus(format!("{}: an identity needs two sides", raw.name)));
    }
    Ok(Identity { name: raw.name, order: raw.order, sides })
}

impl IdentitySide {
    pub fn label(&self) -> String {
        let base = match &self.kind {
            SideKind::Nahm(n) => {
                let b: Vec<String> = n.b.iter().map(|x| fmt_rational(&x.0)).collect();
                let mut s = format!("nahm b=({})", b.join(","));
                for c in &n.constraints {
                    s += &format!(" n{}≡{} mod {}", c.i, c.r, c.s);
                }
                if n.lower.iter().any(|&x| x > 0) {
                    s += &format!(" n≥{:?}", n.lower);
                }
                s
            }
            SideKind::Single(s) => format!(
                "Σq^({}n²+{}n)/(q;q)_({}n+{})",
                fmt_rational(&s.a.0),
                fmt_rational(&s.b.0),
                s.mu,
                s.nu
            ),
            SideKind::Product(p) => format!("product of {} factors", p.len()),
        };
        match &self.shift {
            Some(r) if r.0 != 0 => format!("q^({})·{}", fmt_rational(&r.0), base),
            _ => base,
        }
    }

    /// Expansion to `order` (in the exponent of the final, shifted series).
    pub fn series(&self, order: &Rational) -> Result<QSeries, SeriesError> {
        let shift = self.shift.as_ref().map(|r| r.0.clone()).unwrap_or_default();
        let inner_order = Rational::from(order - &shift);
        let s = match &self.kind {
            SideKind::Nahm(n) => {
                let (data, filter) = n.clone().into_parts()?;
                nahm_series(&data, &filter, &inner_order)
            }
            SideKind::Single(s) => single_sum_series(&s.a.0, &s.b.0, s.mu, s.nu, &inner_order)?,
            SideKind::Product(p) => product_series(p, &inner_order)?,
        };
        Ok(s.shift(&shift))
    }
}

/// Compare every side with the first one.
pub fn verify_identity_file(
    id: &Identity,
    order: Option<&Rational>,
) -> Result<Vec<(String, IdentityReport)>, SeriesError> {
    let order = order.cloned().unwrap_or_else(|| id.order.0.clone());
    let first = id.sides[0].series(&order)?;
    let mut out = Vec::new();
    for side in &id.sides[1..] {
        let s = side.series(&order)?;
        out.push((format!("{} = {}", id.sides[0].label(), side.label()), verify_identity(&first, &s)));
    }
    Ok(out)
}

/// The identity files shipped with the crate, as `(file name, contents)`.
pub fn bundled() -> Vec<(&'static str, &'static str)> {
    macro_rules! file {
        ($n:literal) => {
            ($n, include_str!(concat!("../../data/identities/", $n)))
        };
    }
    vec![
        file!("rr1.json"),
        file!("rr2.json"),
        file!("kr1.json"),
        file!("kr2.json"),
        file!("kr3.json"),
        file!("double_rr1.json"),
        file!("double_rr2.json"),
        file!("mod20_94.json"),
        file!("mod20_96.json"),
        file!("mod20_98.json"),
        file!("mod20_99.json"),
        file!("capparelli.json"),
        file!("gollnitz_gordon1.json"),
        file!("gollnitz_gordon2.json"),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::q;

    #[test]
    fn short_form_and_wrong_product() {
        let text = r#"{"name":"rr","order":30,"nahm":{"A":[[2]],"b":[0],"d":[1]},
            "product":[{"a":2,"M":5,"e":-1},{"a":3,"M":5,"e":-1}]}"#;
        let id = load_identity(text).unwrap();
        let r = verify_identity_file(&id, None).unwrap();
        match &r[0].1 {
            IdentityReport::Mismatch { exponent, .. } => assert_eq!(*exponent, q("1")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bundled_files_parse() {
        for (name, text) in bundled() {
            let id = load_identity(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(id.sides.len() >= 2);
        }
    }

    #[test]
    fn bundled_low_order() {
        for (name, text) in bundled() {
            let id = load_identity(text).unwrap();
            for (label, rep) in verify_identity_file(&id, Some(&q("40"))).unwrap() {
                assert!(rep.is_equal(), "{name}: {label}: {rep}");
            }
        }
    }
}
