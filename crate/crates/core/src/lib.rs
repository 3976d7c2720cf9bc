//! Path-parametric geometry and planning.
//!
//! Reference curves with moving frames (Frenet-Serret and parallel
//! transport), projection of Cartesian motion into spatial coordinates,
//! LP-generated Chebyshev corridors, and a spatial-domain minimum-time
//! planner for a planar two-link arm.

pub mod chebyshev;
pub mod corridor;
pub mod curve;
pub mod error;
pub mod experiments;
pub mod frames;
pub mod io;
pub mod jet;
pub mod lp;
pub mod planner;
pub mod quadrature;
pub mod spatial;

pub use error::{Error, Result};
