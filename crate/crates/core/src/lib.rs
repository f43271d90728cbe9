//! Alpha-stable moving averages, their spectral measures on semi-norm unit
//! cylinders, and tail-conditional prediction of extreme paths.

// `!(x > 0.0)` style checks reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bivariate;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod seminorm;
pub mod spectral;
pub mod stable;
pub mod tailcond;

pub use error::{Error, Result};
pub use model::{Aggregate, CoefficientKernel, Component, KernelRegistry, TruncationPolicy};
pub use seminorm::SemiNorm;
pub use model::M0;
pub use stable::StableParams;
