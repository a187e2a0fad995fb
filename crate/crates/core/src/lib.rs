//! Time-minimal navigation of a unit-speed vehicle in the current generated by a
//! single point vortex of circulation `mu` sitting at the origin.
//!
//! The crate integrates the extremal flow of the maximum principle, solves the
//! two-point shooting problem, classifies the asymptotic fate of every geodesic
//! in closed form, tests for conjugate points, continues splitting curves and
//! assembles wavefronts, spheres and the cut locus.

pub mod classify;
pub mod error;
pub mod flow;
pub mod homotopy;
pub mod jacobi;
pub mod model;
pub mod ode;
pub mod shooting;
pub mod synthesis;

pub use error::{Result, VzError};
pub use model::{CartesianState, PolarState, Tolerances, VortexProblem};
