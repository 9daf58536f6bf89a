//! Scalar special functions.

pub mod bessel;
pub mod gamma;
pub mod laguerre;
pub mod marcum;

pub use bessel::{bessel_i, bessel_i_scaled, hyp0f1, ln_bessel_i, ln_hyp0f1};
pub use gamma::{
    binomial, factorial, gamma_p, gamma_q, ln_factorial, lower_incomplete_gamma,
    multivariate_gamma_norm, upper_incomplete_gamma,
};
pub use laguerre::laguerre;
pub use marcum::{ln_nuttall_q, marcum_p, marcum_q, nuttall_q, nuttall_q_series};
