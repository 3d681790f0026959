//! Solvers and a benchmark harness for inverse singular value problems.
//!
//! Given `A(c) = A_0 + Σ c_i A_i` (each `m×n`, `m ≥ n`) and distinct positive
//! targets `σ*_1 > … > σ*_n`, find `c` such that the singular values of `A(c)`
//! are exactly `σ*`.
//!
//! - [`cayley_free`]: the two-step solver that refines singular vector
//!   estimates multiplicatively and never solves a linear system per
//!   iteration.
//! - [`baseline`]: the Cayley-transform two-step method and an exact-SVD
//!   Newton oracle.
//! - [`harness`]: seeded random instances, sweeps, root-rate estimates and
//!   CSV/JSON reports.

pub mod baseline;
pub mod cayley_free;
pub mod error;
pub mod harness;
pub mod instance;
pub mod kernels;
pub mod linalg;
pub mod report;
pub mod svd;

pub use error::{IsvpError, Result};
pub use instance::{build_instance, IsvpInstance, DEFAULT_MIN_GAP};
pub use kernels::{approx_jacobian, generalized_residual_vector, residual_d, IndexRegion};
pub use report::{IterationRecord, SolveReport, SolveStatus, SolverConfig};
pub use svd::{full_svd, SvdFactorization};
