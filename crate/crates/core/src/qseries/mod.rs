//! Exact truncated q-series, Nahm-sum expansion, infinite products and numeric evaluation.

pub mod corpus;
pub mod nahm;
pub mod numeric;
pub mod product;
pub mod series;

use thiserror::Error;

use crate::model::ModelError;

pub use corpus::{load_identity, verify_identity_file, Identity, IdentitySide};
pub use nahm::{certified_lambda_min, nahm_series};
pub use numeric::{eval_numeric, log_sum_real_f64, EvalResult, QPoint};
pub use product::{product_series, single_sum_series, Factor, ProductSide};
pub use series::{verify_identity, IdentityReport, QSeries};

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("invalid product factor: {0}")]
    InvalidFactor(String),
    #[error("precision unreachable: {0}")]
    PrecisionUnreachable(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("identity file: {0}")]
    Corpus(String),
}
