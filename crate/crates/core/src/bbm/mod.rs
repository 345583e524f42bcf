//! Exact event-driven branching Brownian motion.
//!
//! Every particle lives an Exp(1) time and moves as a Brownian motion. Its
//! path is realised only at the requested snapshot times inside its lifetime
//! and at its death, by independent Gaussian increments, which is the exact
//! joint law of those positions. At death it is replaced by an offspring
//! count of children started at the death position.

mod continuation;
mod dump;
pub(crate) mod realization;
mod simulate;

use thiserror::Error;

pub use continuation::Continuation;
pub use dump::{write_particles, write_snapshots, PARTICLE_COLUMNS, SNAPSHOT_COLUMNS};
pub use realization::{ParticleRecord, Realization, Snapshot, SnapshotEntry};
pub use simulate::{simulate, Barrier, SimConfig, DEFAULT_PARTICLE_CAP};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("no snapshot was requested at time {0}")]
    MissingSnapshot(f64),
    #[error("particle index {0} is out of range")]
    InvalidParticle(usize),
    #[error("particle {particle} has no ancestor alive at time {time}")]
    NoAncestor { particle: usize, time: f64 },
    #[error("the last common ancestor of a particle with itself is not defined (particle {0})")]
    SameParticle(usize),
}

/// Relative tolerance when matching a requested time against snapshot times.
pub(crate) const TIME_MATCH_TOLERANCE: f64 = 1e-9;

pub(crate) fn same_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIME_MATCH_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}
