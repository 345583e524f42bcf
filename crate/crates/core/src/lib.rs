//! Exact simulation of one-dimensional branching Brownian motion, with the
//! statistics, limit laws and ensemble checks used to verify its
//! closed-form identities and asymptotics numerically.
//!
//! * [`sampling`]: seeded streams and primitive distributions.
//! * [`bbm`]: event-driven simulator and genealogy queries.
//! * [`statistics`]: martingales, extremes and overlaps of one realization.
//! * [`limits`]: limit-law samplers and tail-index estimation.
//! * [`experiments`]: seeded ensembles and the verdict-producing checks.

pub mod bbm;
pub mod experiments;
pub mod inference;
pub mod limits;
pub mod numerics;
pub mod sampling;
pub mod statistics;
