//! Exact computations behind the degree bounds for generic hypersurfaces: the
//! constant-term quantity CA, majorant series, root and degree bounds, and the
//! circle inequalities.

// `!(x > 0.0)` style guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arith;
pub mod bounds;
pub mod cache;
pub mod check;
pub mod circle;
pub mod conjecture;
pub mod error;
pub mod genfun;
pub mod hp;
pub mod report;
pub mod series;

pub use arith::BigRat;
pub use error::{Error, Result};
pub use num_bigint::BigInt;
