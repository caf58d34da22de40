//! Radial asymptotics at roots of unity against direct summation.

use nahm::asymptotics::{compute_u, determine_c, predict_radial, Setup};
use nahm::model::{fmt_rational, q};
use nahm::specialfn::num::fmt_complex;
use nahm::{NahmData, Prec};

fn main() {
    let prec = Prec { digits: 60 };
    let rr = NahmData::from_strs(&[&["2"]], &["0"], "-1/60", &[1]).unwrap();
    let kr = NahmData::from_strs(&[&["2", "1"], &["3", "2"]], &["1", "3"], "5/18", &[1, 3]).unwrap();
    let eps = [q("1/40"), q("1/60"), q("1/80")];
    for (name, data, alphas) in [("rogers-ramanujan", &rr, &["0", "1/2", "1/3", "2/7"][..]), ("kanade-russell", &kr, &["0", "1/2"][..])] {
        for a in alphas {
            let rep = predict_radial(data, &q(a), &eps, 3, prec).unwrap();
            let worst = rep.rows.iter().map(|r| r.rel_err_up_to_phase).fold(0.0, f64::max);
            println!(
                "{name} α={a}: m={} prefactor {} worst relative error {worst:.2e}{}",
                rep.m,
                rep.prefactor,
                if rep.branch_warning { " (branch warning)" } else { "" }
            );
        }
        let setup = Setup::new(data, &q("1/2"), prec).unwrap();
        let u = compute_u(&setup).unwrap();
        println!("{name} u at α=1/2: {}  alternative form {}", fmt_complex(&u.u, 25), fmt_complex(&u.u_alt, 25));
        let est = determine_c(&data.with_c(q("0")), 3, prec).unwrap();
        println!("{name} c from the expansion: {}", est.c_rational.as_ref().map(fmt_rational).unwrap_or_default());
    }
}
