//! Solvers and diagnostics for the boundary layer of fast horizontally
//! rotating incompressible flow on a half plane.
//!
//! The toolkit couples four pieces: a three-component 2D Euler-type outer
//! solve in vorticity-streamfunction form, a linearized Euler solve forced
//! through its wall-normal boundary value, a Prandtl-like boundary-layer
//! solve with tangential regularization, and diagnostics built on weighted
//! analytic norms with an evolving analyticity radius. A composer assembles
//! the two-term asymptotic approximation and measures the residual of the
//! full rotating system across the Rossby number.

pub mod compose;
pub mod config;
pub mod error;
pub mod euler;
pub mod euler_lin;
pub mod field;
pub mod grid;
pub mod identity;
pub mod io;
pub mod layer;
pub mod layer_u2;
pub mod norms;
pub mod ops;
pub mod pipeline;
pub mod radius;
pub mod residual;
pub mod scenario;
pub(crate) mod spectral;

pub use error::{Error, Result};
pub use field::{Field2D, TraceField};
pub use grid::Grid;
