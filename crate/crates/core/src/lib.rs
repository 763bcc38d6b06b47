//! Numeric verification of trapezoid-type Hermite-Hadamard bounds for
//! h-convex functions.
//!
//! The building blocks are an adaptive Gauss-Kronrod integrator
//! ([`quadrature`]), a small catalog of test functions ([`funcat`]),
//! kernels `h` with their moment integrals ([`hkernel`]), grid-based class
//! membership tests ([`classes`]), the bound evaluators ([`bounds`]) and
//! two-point means ([`means`]). [`sweep`] runs them over parameter grids.

pub mod bounds;
pub mod classes;
pub mod error;
pub mod funcat;
pub mod hkernel;
pub mod means;
pub mod numfmt;
pub mod quadrature;
pub mod sweep;

pub use bounds::{BoundOptions, BoundReport, BoundRequest, StatementId, Verifier};
pub use classes::{ClassName, GridCounts, MembershipVerdict};
pub use error::{Error, Result};
pub use funcat::{FunctionSpec, Interval};
pub use hkernel::{HKernel, KernelKind};
pub use means::{mean, prop_bound, MeanKind};
pub use quadrature::{integrate, mean_value, QuadratureResult};
pub use sweep::{run_sweep, SweepConfig, SweepOutcome};
