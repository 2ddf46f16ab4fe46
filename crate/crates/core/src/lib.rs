//! Minimum-torque periodic gait synthesis for a planar five-link point-foot
//! biped: rigid-body model, impact map, polynomial gaits, walking
//! constraints, hybrid genetic/gradient optimization and step simulation.

pub mod boundary;
pub mod config;
pub mod constraints;
pub mod error;
pub mod impact;
pub mod model;
pub mod optimizer;
pub mod polynomial;
pub mod series;
pub mod simulate;

pub use error::{GaitError, Result};
