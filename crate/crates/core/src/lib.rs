//! Maximum-reward motion in stochastic reward fields.
//!
//! A robot moves forward at constant speed and collects i.i.d. rewards from
//! targets it passes over. The crate computes the best achievable reward on
//! the 2-D directed lattice (last-passage percolation) and on planar Poisson
//! target fields, runs receding-horizon planners with limited sensing, and
//! drives the Monte-Carlo experiments that measure how sensing range, agility
//! and computation trade off.

pub mod bayes;
pub mod distribution;
pub mod error;
pub mod harness;
pub mod lattice;
pub mod oracle;
pub mod planning;
pub mod poisson;
pub mod rng;
pub mod stats;

pub use distribution::{Family, Moments, RewardDistribution, TailClass};
pub use error::{Error, Result};
pub use rng::SeededRng;
pub use stats::Estimate;
