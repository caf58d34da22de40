//! Arbitrary-precision special functions.

pub mod bernoulli;
pub mod cyclic;
pub mod dedekind;
pub mod gauss;
pub mod num;
pub mod polylog;

use rug::{Complex, Rational};
use thiserror::Error;

pub use bernoulli::{bernoulli_number, bernoulli_poly, bernoulli_poly_float};
pub use cyclic::{cyclic_dilog, poch, qpochhammer, PochLen};
pub use dedekind::{chi_factor, dedekind_sum, saw};
pub use gauss::{gauss_sum, gauss_sum_with_delta, reduce_mod_m};
pub use num::Prec;
pub use polylog::{dilog, polylog_nonpositive, rogers_l};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpecialError {
    #[error("pole at w = 1")]
    PoleAtOne,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{0} and {1} are not coprime")]
    NotCoprime(i64, i64),
    #[error("infinite product diverges for |q| >= 1")]
    Divergent,
}

/// `ζ = 𝐞(α)` for `α = a/m` in lowest terms, `0 ≤ a < m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootOfUnity {
    pub alpha: Rational,
    pub m: u64,
    pub a: i64,
}

impl RootOfUnity {
    pub fn new(alpha: &Rational) -> Self {
        let alpha = num::frac(alpha);
        let m = alpha.denom().to_u64().expect("small order");
        let a = alpha.numer().to_i64().expect("small numerator");
        Self { alpha, m, a }
    }

    pub fn trivial() -> Self {
        Self::new(&Rational::new())
    }

    /// `ζ^k`, computed from the exact exponent `ak/m`.
    pub fn zeta_pow(&self, k: i64, bits: u32) -> Complex {
        num::e_rat(&Rational::from((self.a * k.rem_euclid(self.m as i64), self.m as i64)), bits)
    }

    pub fn zeta(&self, bits: u32) -> Complex {
        self.zeta_pow(1, bits)
    }

    /// Context for `ζ^k`.
    pub fn power(&self, k: i64) -> Self {
        Self::new(&Rational::from(&self.alpha * k))
    }
}
