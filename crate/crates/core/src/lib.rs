//! Deep Q-learning with concurrent training and synchronized execution.
//!
//! The crate contains a small dense network with centered RMSProp
//! ([`nn`]), an experience replay store ([`replay`]), deterministic
//! environments ([`env`]), the learning rules ([`agent`]), the threaded
//! executor with its single-lane oracle ([`executor`]), and a benchmark and
//! analysis layer ([`harness`]).

pub mod agent;
pub mod config;
pub mod env;
pub mod error;
pub mod executor;
pub mod harness;
pub mod nn;
pub mod replay;
pub mod rng;
pub mod spin;

pub use error::{Error, Result};
