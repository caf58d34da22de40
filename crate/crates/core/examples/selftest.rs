//! Run the self-test and print a summary per group. Pass `--quick` for the worked examples only.

use std::collections::BTreeMap;

use nahm::cli::selftest::{run, Config};

fn main() {
    let seed = std::env::args().skip(1).find_map(|s| s.parse().ok()).unwrap_or(0);
    let rep = run(&Config { seed, quick: std::env::args().any(|a| a == "--quick") });
    let mut groups: BTreeMap<&str, (usize, usize, f64)> = BTreeMap::new();
    for c in &rep.checks {
        let e = groups.entry(c.group).or_default();
        e.2 += c.seconds;
        if c.passed {
            e.0 += 1;
        } else {
            e.1 += 1;
        }
    }
    for (g, (p, f, t)) in &groups {
        println!("{g:12} {p:3} passed {f:3} failed {t:7.2}s");
    }
    for c in rep.failures() {
        println!("FAIL {}/{}: {}", c.group, c.name, c.detail);
    }
    std::process::exit(if rep.failed == 0 { 0 } else { 1 });
}
