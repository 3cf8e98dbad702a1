//! Random walks in dynamic reversible random environments.
//!
//! The walker moves right with probability `1/2 + eps` on an occupied site
//! and `1/2 - eps` on an empty one. The crate builds the walk in discrete
//! and continuous time, couples a forward walk with a backward walk on one
//! direction field, and checks the antisymmetry `v(-eps) = -v(eps)` both by
//! Monte Carlo and exactly on small rings.

pub mod config;
pub mod coupling;
pub mod environment;
pub mod error;
pub mod estimate;
pub mod io;
pub mod kernel;
pub mod oracle;
pub mod rng;
pub mod stats;
pub mod suites;
pub mod walk;

pub use config::{SimConfig, TimeMode};
pub use environment::{EnvKind, EnvironmentSpec, OccupancyField};
pub use error::{Error, Result};
pub use estimate::SpeedEstimate;
pub use rng::{RandomSource, Stream};
pub use walk::Trajectory;
