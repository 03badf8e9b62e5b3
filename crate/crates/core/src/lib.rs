//! Numerical toolkit for Filippov vector fields in R³.
//!
//! A system is a pair of smooth fields `X` (on `f > 0`) and `Y` (on `f < 0`)
//! glued along the switching surface `Σ = f⁻¹(0)`. The crate classifies
//! points of `Σ`, integrates Filippov trajectories, builds the return maps
//! around a fold-regular loop, certifies loops and scans one-parameter
//! unfoldings.
//!
//! Modules, bottom up:
//! - [`autodiff`]: dual numbers and truncated Taylor jets
//! - [`scenarios`]: expression DSL, built-in systems, pushforward
//! - [`geometry`]: fields, Lie derivatives, Σ classification, fold curves
//! - [`integrator`]: Dormand–Prince with event location, Filippov trajectories
//! - [`maps`]: transition, return and fold line maps, Taylor coefficients
//! - [`analysis`]: loop certificates, manifolds, fold-line iteration, basins
//! - [`bifurcation`]: family scans and loop location

pub mod analysis;
pub mod autodiff;
pub mod bifurcation;
pub mod config;
pub mod error;
pub mod geometry;
pub mod integrator;
pub mod maps;
pub mod numeric;
pub mod scenarios;

pub use config::Tolerances;
pub use error::{Error, Result};

/// Point or vector in R³.
pub type Vec3 = nalgebra::Vector3<f64>;
/// Point in a 2D chart.
pub type Pt2 = nalgebra::Vector2<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
pub type Mat2 = nalgebra::Matrix2<f64>;
