//! Reference tables against the third-difference test and the expansion at `q → 1`.

use nahm::asymptotics::determine_c;
use nahm::model::{fmt_rational, q, LatticeFilter, NahmData};
use nahm::scanner::{reference_table, third_difference_test, DEFAULT_N_BASE, DEFAULT_THRESHOLD, REFERENCE_TABLES};
use nahm::Prec;
use rayon::prelude::*;

const P: Prec = Prec { digits: 60 };

struct Row {
    table: &'static str,
    data: NahmData,
    printed_c: rug::Rational,
}

fn rows() -> Vec<Row> {
    let mut out = Vec::new();
    for name in REFERENCE_TABLES {
        let t = reference_table(name).unwrap();
        for blk in &t.blocks {
            for (i, r) in blk.rows.iter().enumerate() {
                out.push(Row { table: name, data: blk.data(i).unwrap(), printed_c: r.c.0.clone() });
            }
        }
    }
    out
}

#[test]
fn row_count() {
    let r = rows();
    assert_eq!(r.len(), 174);
    for (name, n) in [("rank2", 38), ("d112", 68), ("d221", 68)] {
        assert_eq!(r.iter().filter(|x| x.table == name).count(), n, "{name}");
    }
}

#[test]
fn every_row_is_a_candidate() {
    let bad: Vec<String> = rows()
        .par_iter()
        .filter_map(|r| {
            let t = third_difference_test(&r.data, &LatticeFilter::none(), DEFAULT_N_BASE, P, DEFAULT_THRESHOLD).unwrap();
            (!t.candidate).then(|| format!("{} {}: {}", r.table, r.data, t.third_diff))
        })
        .collect();
    assert!(bad.is_empty(), "{bad:#?}");
}

/// `c` from the vanishing of the `ε¹` coefficient matches every printed value but one.
#[test]
fn c_values_match_expansion() {
    let mismatches: Vec<String> = rows()
        .par_iter()
        .filter_map(|r| {
            let est = determine_c(&r.data, 3, P).unwrap();
            assert!(est.residual() < 1e-12, "{}: residual {}", r.data, est.residual());
            let c = est.c_rational.expect("rational c");
            assert_eq!(c, *r.data.c(), "{} {}", r.table, r.data);
            (c != r.printed_c).then(|| format!("{} b={:?} printed {}", r.table, r.data.b(), fmt_rational(&r.printed_c)))
        })
        .collect();
    assert_eq!(mismatches.len(), 1, "{mismatches:#?}");
    assert!(mismatches[0].contains("printed -1/24"));
}

/// The printed `c = −1/24` for `A = [[2,1],[2,2]]`, `b = (−1,−1)` leaves a constant `1/12` in `φ`.
#[test]
fn misprinted_row_has_nonzero_fit_constant() {
    use nahm::scanner::quadratic_fit;
    use nahm::solver::{compute_lambda, solve_nahm};
    let data = NahmData::from_strs(&[&["2", "1"], &["2", "2"]], &["-1", "-1"], "-1/24", &[1, 2]).unwrap();
    let t = third_difference_test(&data, &LatticeFilter::none(), DEFAULT_N_BASE, P, 1.0).unwrap();
    let (big, _) = compute_lambda(&solve_nahm(&data, P).unwrap(), &data).unwrap();
    let fit = quadratic_fit(&t.samples[..3], &big);
    assert!((fit.constant.clone() - q("1/12")).abs() < 1e-30, "{}", fit.constant);
    let fixed = quadratic_fit(
        &third_difference_test(&data.with_c(q("1/24")), &LatticeFilter::none(), DEFAULT_N_BASE, P, 1.0).unwrap().samples[..3],
        &big,
    );
    assert!(fixed.constant.clone().abs() < 1e-30);
}
