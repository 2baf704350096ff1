//! First-passage times of Bessel diffusions to a sphere: asymptotic
//! evaluators for the density and distribution, and independent numerical
//! oracles to check them against.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod asymptotics;
pub mod error;
pub mod fpt;
pub mod harness;
pub mod oracles;
pub mod quad;
pub mod specfun;

pub use error::{FptError, Result};
pub use fpt::{
    density, distribution, distribution_estimate, DensityEstimate, EvalOptions, FptQuery, Method,
    Regime,
};
pub use oracles::{InversionConfig, InversionMethod, McConfig};
pub use specfun::{Constants, Order};
