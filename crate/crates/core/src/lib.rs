// NaN-rejecting guards are written as !(x > 0.0); quadrature nodes keep their published digits
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod channel;
pub mod error;
pub mod experiment;
pub mod fbl;
pub mod montecarlo;
pub mod quad;
pub mod roots;
pub mod schemes;
pub mod specfun;

pub use error::{Error, Result};
