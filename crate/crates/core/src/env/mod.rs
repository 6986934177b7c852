//! Deterministic, seedable environments and the evaluation protocol.

mod evaluate;
mod gridworld;
mod synthetic;

use std::fmt;
use std::str::FromStr;

pub use evaluate::{evaluate_policy, EvalStats};
pub use gridworld::{encode_state, gridworld_step, GridAction, GridWorld, Position, GRID_SIZE, GRID_STEP_CAP};
pub use synthetic::{SyntheticConfig, SyntheticLatencyEnv};

use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// Outcome of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub state: Vec<f64>,
    pub reward: f64,
    pub terminal: bool,
}

/// The MDP seen by an agent. Identical seeds and action sequences give
/// identical trajectories; stepping a terminated episode is an error until
/// the next reset.
pub trait Environment: Send {
    fn state_dim(&self) -> usize;
    fn action_count(&self) -> usize;
    fn reset(&mut self, rng: &mut StreamRng) -> Vec<f64>;
    fn step(&mut self, action: usize, rng: &mut StreamRng) -> Result<StepResult>;
}

/// Environment selection, by name in configuration files.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvSpec {
    GridWorld,
    Synthetic(SyntheticConfig),
}

impl EnvSpec {
    pub fn build(&self) -> Box<dyn Environment> {
        match self {
            EnvSpec::GridWorld => Box::new(GridWorld::new()),
            EnvSpec::Synthetic(cfg) => Box::new(SyntheticLatencyEnv::new(cfg.clone())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EnvSpec::GridWorld => "gridworld",
            EnvSpec::Synthetic(_) => "synthetic",
        }
    }

    pub fn state_dim(&self) -> usize {
        match self {
            EnvSpec::GridWorld => GRID_SIZE * GRID_SIZE,
            EnvSpec::Synthetic(cfg) => cfg.state_dim,
        }
    }

    pub fn action_count(&self) -> usize {
        match self {
            EnvSpec::GridWorld => 4,
            EnvSpec::Synthetic(cfg) => cfg.action_count,
        }
    }
}

/// Environment kind without its settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvKind {
    GridWorld,
    Synthetic,
}

impl FromStr for EnvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gridworld" => Ok(EnvKind::GridWorld),
            "synthetic" => Ok(EnvKind::Synthetic),
            other => Err(Error::Config(format!(
                "unknown environment {other:?} (expected gridworld or synthetic)"
            ))),
        }
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnvKind::GridWorld => "gridworld",
            EnvKind::Synthetic => "synthetic",
        })
    }
}
