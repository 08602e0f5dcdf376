//! Numerical tools for Riemannian manifolds with boundary whose
//! boundary-orthogonal geodesics all return orthogonally after a common length.

pub mod catalog;
pub mod error;
pub mod geodesic;
pub mod geometry;
pub mod jacobi;
pub mod ode;
pub mod run;
pub mod verify;

pub use error::{Result, ZollError};
