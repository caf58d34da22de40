//! Special functions: Rogers dilogarithm, cyclic dilogarithm, Dedekind and Gauss sums.

use nahm::model::{fmt_rational, q};
use nahm::specialfn::cyclic::shift_identity_error;
use nahm::specialfn::num::{fmt_complex, fmt_float};
use nahm::specialfn::{bernoulli_poly, cyclic_dilog, dedekind_sum, gauss_sum, rogers_l};
use nahm::{NahmData, RootOfUnity};
use rug::{Complex, Float};

fn main() {
    let bits = 256;
    let golden = (Float::with_val(bits, 5).sqrt() - 1u32) / 2u32;
    let l = rogers_l(&golden).unwrap();
    let pi2 = Float::with_val(bits, rug::float::Constant::Pi).square();
    println!("6·L(φ⁻¹)/π² = {}  (-2/5 expected)", fmt_float(&(l / pi2 * 6u32), 40));

    let x = Complex::with_val(bits, (0.3, 0.2));
    for m in [1, 2, 5] {
        let ctx = RootOfUnity::new(&q(&format!("1/{m}")));
        println!(
            "D_ζ({m}) at 0.3+0.2i = {}  shift identity error {}",
            fmt_complex(&cyclic_dilog(&ctx, &x), 25),
            fmt_float(&shift_identity_error(&ctx, &x), 3)
        );
    }

    for (a, c) in [(1, 5), (2, 7), (5, 13), (7, 100)] {
        println!("s({a},{c}) = {}", fmt_rational(&dedekind_sum(a, c).unwrap()));
    }
    for r in 0..5 {
        println!("B_{r}(1/3) = {}", fmt_rational(&bernoulli_poly(r, &q("1/3"))));
    }

    let rr = NahmData::from_strs(&[&["2"]], &["0"], "0", &[1]).unwrap();
    for alpha in ["1/2", "1/3", "2/7"] {
        println!("gauss sum of A=[[2]] at {alpha}: {}", fmt_complex(&gauss_sum(&rr, &q(alpha), bits).unwrap(), 25));
    }
}
