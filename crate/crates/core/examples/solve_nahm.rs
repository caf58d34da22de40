//! Solve Nahm's equation for a few classical matrices and recognise `λ` as a rational.

use nahm::model::fmt_rational;
use nahm::solver::{compute_lambda, detect_rational, solve_nahm};
use nahm::specialfn::num::{fmt_float, ten_pow};
use nahm::{NahmData, Prec};

fn main() {
    let prec = Prec { digits: 60 };
    let cases: [(&str, &[&[&str]], &[u32]); 4] = [
        ("rogers-ramanujan", &[&["2"]], &[1]),
        ("kanade-russell", &[&["2", "1"], &["3", "2"]], &[1, 3]),
        ("inverse B2", &[&["1", "1/2"], &["1", "1"]], &[1, 2]),
        ("A2 tadpole", &[&["4", "-2"], &["-2", "2"]], &[1, 1]),
    ];
    for (name, a, d) in cases {
        let b = vec!["0"; d.len()];
        let data = NahmData::from_strs(a, &b, "0", d).expect("valid data");
        let sol = solve_nahm(&data, prec).expect("solution");
        let (big, lam) = compute_lambda(&sol, &data).expect("lambda");
        let r = detect_rational(&lam, 1_000_000, &ten_pow(-30, lam.prec()));
        println!("{name}: {data}");
        for (i, z) in sol.z.iter().enumerate() {
            println!("  z{} = {}", i + 1, fmt_float(z, 40));
        }
        println!("  Λ = {}", fmt_float(&big, 40));
        println!("  λ = {}  ({})", fmt_float(&lam, 40), r.as_ref().map(fmt_rational).unwrap_or_else(|| "irrational?".into()));
        println!("  residual {}  after {} Newton steps", fmt_float(&sol.residual, 3), sol.iterations);
    }
}
