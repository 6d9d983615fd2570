//! Scalar kernels shared by every other module: normal distribution
//! functions, adaptive quadrature and bracketed root finding.

mod normal;
mod quadrature;
mod root;

pub use normal::{
    log_phi, log_phi_upper, normal_cdf, normal_interval, normal_pdf, normal_quantile, phi, phi_upper, upper_quantile,
    LN_SQRT_2PI,
};
pub use quadrature::{integrate, integrate_interval, QuadratureSpec};
pub use root::{find_root, RootSpec};
