//! Evaluate a Nahm sum numerically and compare with its product side.

use nahm::qseries::{eval_numeric, product_series, Factor, QPoint};
use nahm::specialfn::num::{fmt_complex, fmt_float};
use nahm::{LatticeFilter, NahmData, Prec};
use rug::{Complex, Float, Rational};

fn main() {
    let prec = Prec { digits: 50 };
    let bits = prec.bits();
    let rr = NahmData::from_strs(&[&["2"]], &["0"], "0", &[1]).unwrap();
    for x in ["0.1", "0.5", "0.9"] {
        let qv = Float::with_val(bits, Float::parse(x).unwrap());
        let r = eval_numeric(&rr, &LatticeFilter::none(), &QPoint::real(&qv), prec).unwrap();
        // 1/((q;q⁵)_∞ (q⁴;q⁵)_∞) from its series to a high order
        let order = Rational::from(4000);
        let p = product_series(&[Factor::inv(1, 5), Factor::inv(4, 5)], &order).unwrap();
        println!(
            "q = {x}: sum {}  (bound {}, {} terms)  product series {:.15}",
            fmt_complex(&r.value, 30),
            fmt_float(&r.truncation_bound, 3),
            r.terms,
            p.eval_f64(qv.to_f64())
        );
    }
    // near the cusp on the imaginary axis
    let tau = Complex::with_val(bits, (0, Float::with_val(bits, 0.05)));
    let r = eval_numeric(&rr, &LatticeFilter::none(), &QPoint::from_tau(&tau), prec).unwrap();
    println!("τ = 0.05i: {}  ({} terms)", fmt_complex(&r.value, 30), r.terms);
}
