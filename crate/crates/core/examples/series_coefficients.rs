//! Exact q-expansions: a Nahm sum, a restricted sum and the matching products.

use nahm::model::{fmt_rational, q};
use nahm::qseries::{nahm_series, product_series, verify_identity, Factor};
use nahm::{LatticeFilter, NahmData};

fn show(name: &str, s: &nahm::QSeries) {
    let terms: Vec<String> =
        s.terms().filter(|(_, c)| **c != 0).take(12).map(|(e, c)| format!("{}·q^{}", fmt_rational(c), fmt_rational(&e))).collect();
    println!("{name}: {} + O(q^{})", terms.join(" + "), fmt_rational(s.order()));
}

fn main() {
    let order = q("30");
    let kr = NahmData::from_strs(&[&["2", "1"], &["3", "2"]], &["0", "0"], "0", &[1, 3]).unwrap();
    let s = nahm_series(&kr, &LatticeFilter::none(), &order);
    show("kanade-russell", &s);
    // 1/((q,q³,q⁶,q⁸;q⁹)_∞)
    let p = product_series(&[Factor::inv(1, 9), Factor::inv(3, 9), Factor::inv(6, 9), Factor::inv(8, 9)], &order).unwrap();
    show("product", &p);
    println!("{}", verify_identity(&s, &p));

    let b2 = NahmData::from_strs(&[&["1", "1/2"], &["1", "1"]], &["0", "0"], "0", &[1, 2]).unwrap();
    for r in 0..2 {
        let f = LatticeFilter::congruence(0, r, 2);
        show(&format!("inverse B2, n1 ≡ {r} mod 2"), &nahm_series(&b2, &f, &order));
    }
}
