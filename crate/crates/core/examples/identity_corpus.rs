//! Verify every bundled q-series identity to its stated order.

use std::time::Instant;

use nahm::qseries::corpus::{bundled, load_identity, verify_identity_file};

fn main() {
    let mut failures = 0;
    for (file, text) in bundled() {
        let id = load_identity(text).expect("bundled identity parses");
        let start = Instant::now();
        let reports = verify_identity_file(&id, None).expect("expansion");
        for (label, rep) in &reports {
            println!("{file:22} {label}: {rep}");
            if !rep.is_equal() {
                failures += 1;
            }
        }
        println!("{file:22} {:.2}s", start.elapsed().as_secs_f64());
    }
    std::process::exit(if failures == 0 { 0 } else { 1 });
}
