//! Check the S and T transformations of the bundled vector-valued systems.

use nahm::cli::preset_tolerance;
use nahm::transforms::{default_taus, preset, verify_s, verify_t, PRESETS};
use nahm::Prec;

fn main() {
    let prec = Prec { digits: 60 };
    let mut ok = true;
    for name in PRESETS {
        let sys = preset(name).unwrap();
        let t = verify_t(&sys, 200).unwrap();
        let rep = verify_s(&sys, &default_taus(prec.bits()), prec).unwrap();
        let tol = preset_tolerance(name);
        println!("{name}: {} components, T multipliers verified to q^200", t.len());
        for row in &rep.rows {
            println!("  {} at τ={}: {:.2e}", row.relation, row.tau, row.error);
        }
        println!("  max error {:.2e} (tolerance {tol:.0e}), S² check {:.2e}", rep.max_error, rep.matrix_check);
        ok &= rep.max_error < tol;
    }
    std::process::exit(if ok { 0 } else { 1 });
}
