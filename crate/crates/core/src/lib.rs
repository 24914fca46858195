//! Multi-robot coverage path planning.
//!
//! The pipeline turns a geographic mission into per-robot waypoint lists:
//!
//! 1. [`geo`] projects the area and robot starts into a local metric plane.
//! 2. [`discretize`] lays a lattice of camera-footprint cells over the area,
//!    dropping cells inside no-fly zones.
//! 3. [`partition`] clusters the cell perimeter samples with Lloyd's algorithm
//!    and splits cells into dominated and conflicted ones.
//! 4. [`auction`] hands conflicted cells to the least loaded robot, biased by
//!    each robot's distance to its territory.
//! 5. [`pathplan`] orders each robot's cells with a nearest-neighbor chain
//!    over a KD-tree and maps the result back to latitude/longitude.
//!
//! [`sim`] evaluates plans under constant velocity, provides a sweep baseline
//! and the profiling/benchmark harness; [`mission`] holds the mission file
//! schema and the end-to-end driver.

pub mod auction;
pub mod discretize;
pub mod error;
pub mod export;
pub mod geo;
pub mod mission;
pub mod partition;
pub mod pathplan;
pub mod sim;

pub use error::{Error, Result};
