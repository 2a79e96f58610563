//! Energy-aware tour planning for a single UAV collecting data from clustered
//! ground sensors.
//!
//! The problem: partition sensors into clusters, pick one cluster head per
//! cluster, and fly a closed tour from a depot over every cluster head so that
//! a weighted sum of ground-side and UAV-side energy is minimized. Picking a
//! head changes both the ground energy of its cluster and the flight geometry,
//! so head selection and tour order are optimized jointly.
//!
//! Solvers, from exact to learned:
//! - [`exact`]: bitmask dynamic program over (visited clusters, last head),
//!   exact up to ~15 clusters, plus a brute-force cross-check.
//! - [`heuristics`]: nearest-neighbor greedy and ant colony optimization.
//! - [`policy`] + [`training`]: an attention-based sequence model trained
//!   with policy gradients to emit cluster orders, with heads chosen by a
//!   one-step lookahead rule.
//!
//! [`energy`] holds the physical model (air-to-ground path loss, rotor power,
//! intra-cluster radio costs); [`instance`] generates and persists scenarios;
//! [`report`] evaluates solver output into a serializable summary.

pub mod energy;
pub mod exact;
pub mod heuristics;
pub mod instance;
pub mod numerics;
pub mod policy;
pub mod report;
pub mod seeds;
pub mod tour;
pub mod training;
