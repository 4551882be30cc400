//! Special functions behind the closed-form moment formulas.

mod gamma;
mod hypergeometric;

pub use gamma::{log_gamma, pochhammer};
pub(crate) use gamma::ln_gamma_pos;
pub use hypergeometric::{
    d_gauss_2f1_dz, gauss_2f1, gauss_2f1_at_one, HyperParams, SERIES_REL_TOL, SERIES_TERM_CAP,
};
