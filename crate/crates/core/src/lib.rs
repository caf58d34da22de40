//! Nahm sums for symmetrizable matrices.
//!
//! A Nahm sum is `f_Q(q) = Σ_{n ∈ ℕ^N} q^{Q(n)} / ∏ (q^{d_i}; q^{d_i})_{n_i}` with
//! `Q(n) = ½ nᵀADn + nᵀb + c`. This crate evaluates such sums exactly and numerically,
//! solves Nahm's equation, computes the asymptotic expansion at roots of unity, and
//! searches for modular candidates.

pub mod asymptotics;
pub mod cli;
pub mod model;
pub mod qseries;
pub mod scanner;
pub mod solver;
pub mod specialfn;
pub mod transforms;

pub use model::{CongruenceConstraint, LatticeFilter, ModelError, NahmData};
pub use qseries::{QPoint, QSeries};
pub use specialfn::{Prec, RootOfUnity};
