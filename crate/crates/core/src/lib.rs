//! Mixed absolute moments E[∏ |X_j|^{α_j}] of centered Gaussian vectors and
//! numerical verification of Gaussian product inequalities.

pub mod bounds;
pub mod error;
pub mod linalg;
pub mod moments;
pub mod quadrature;
pub mod specfun;
pub mod verifier;

pub use error::{GpiError, Result};
