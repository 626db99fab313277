//! Exact recovery of network clock offsets from all-pairs synchronization
//! sessions whose faults are whole multiples of a signal period, together
//! with the machinery that computes how many such faults an `N`-node network
//! provably tolerates.

pub mod combinations;
pub mod error;
pub mod linalg;
pub mod model;
pub mod phase;
pub mod rational;
pub mod recovery;
pub mod resilience;

pub use error::{Error, Result};
pub use rational::Rational;
