//! A small modularity scan over rank-2 matrices with `d = (1, 2)`.

use std::time::Instant;

use nahm::scanner::{perturbed_controls, scan, third_difference_test, write_csv, ScanConfig};
use nahm::{LatticeFilter, Prec};

fn main() {
    let mut cfg = ScanConfig::new(&[1, 2], 2, 2);
    cfg.prec = Prec { digits: 40 };
    let start = Instant::now();
    let out = scan(&cfg).unwrap();
    println!("{:?} in {:.1}s", out.stats, start.elapsed().as_secs_f64());
    write_csv(&out, std::io::stdout().lock()).unwrap();

    println!("perturbed controls:");
    for data in perturbed_controls(5, 0) {
        let t = third_difference_test(&data, &LatticeFilter::none(), cfg.n_base, cfg.prec, cfg.threshold).unwrap();
        println!("  {data}: Δ³φ = {:.3e}", t.third_diff.to_f64());
    }
}
