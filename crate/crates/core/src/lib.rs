//! Exact and Monte Carlo tools for the open symmetric exclusion process on a
//! finite graph with two reservoirs, and its absorbing dual.

#![no_std]
extern crate alloc;

pub mod closed_forms;
pub mod error;
pub mod exact;
pub mod lattice;
pub mod linalg;
pub mod ninja;
pub mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use lattice::{homogeneous_segment, validate, DualState, Edge, GraphSpec, OccupancyConfig, SiteSet};
