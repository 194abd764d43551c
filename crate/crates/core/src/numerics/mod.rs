//! Shared numerical kernels.

pub mod cmat;
pub mod linalg;
pub mod quad;
pub mod special;

pub use cmat::{CMat, C64};
pub use linalg::{op_norm, psd_sqrt, sym_eigen, sym_eigenvalues, trace_sqrt, Eigen, SymMatrix};
pub use quad::{integrate, integrate_breaks, integrate_estimate, integrate_pv, romberg, Estimate, Quadrature};
pub use special::{bessel_j, sine_integral, sphere_area};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("{what} did not converge: {detail}")]
    NonConvergence { what: &'static str, detail: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("principal value point {s} is not interior to ({a}, {b})")]
    SingularityAtEndpoint { s: f64, a: f64, b: f64 },
    #[error("Bessel order {0} is not supported")]
    UnsupportedOrder(f64),
    #[error("eigenvalue {0} is below the clamp threshold")]
    NegativeEigenvalue(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is singular")]
    Singular,
}
