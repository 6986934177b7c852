//! Environment whose only interesting property is how long a step takes.

use std::time::Duration;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::spin::spin_for;

use super::{Environment, StepResult};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub state_dim: usize,
    pub action_count: usize,
    pub episode_length: u32,
    /// CPU time burned by every `step`.
    pub latency: Duration,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            state_dim: 16,
            action_count: 4,
            episode_length: 200,
            latency: Duration::from_micros(200),
        }
    }
}

/// States and rewards are uniform in `[0, 1)` from the caller's stream; the
/// configured latency affects wall-clock time only, never content.
#[derive(Debug, Clone)]
pub struct SyntheticLatencyEnv {
    cfg: SyntheticConfig,
    steps: u32,
    done: bool,
}

impl SyntheticLatencyEnv {
    pub fn new(cfg: SyntheticConfig) -> Self {
        Self {
            cfg,
            steps: 0,
            done: false,
        }
    }

    fn random_state(&self, rng: &mut StreamRng) -> Vec<f64> {
        (0..self.cfg.state_dim).map(|_| rng.gen::<f64>()).collect()
    }
}

impl Environment for SyntheticLatencyEnv {
    fn state_dim(&self) -> usize {
        self.cfg.state_dim
    }

    fn action_count(&self) -> usize {
        self.cfg.action_count
    }

    fn reset(&mut self, rng: &mut StreamRng) -> Vec<f64> {
        self.steps = 0;
        self.done = false;
        self.random_state(rng)
    }

    fn step(&mut self, action: usize, rng: &mut StreamRng) -> Result<StepResult> {
        if self.done {
            return Err(Error::StepAfterTerminal);
        }
        if action >= self.cfg.action_count {
            return Err(Error::InvalidAction {
                action,
                count: self.cfg.action_count,
            });
        }
        spin_for(self.cfg.latency);
        self.steps += 1;
        self.done = self.steps >= self.cfg.episode_length;
        let reward = rng.gen::<f64>();
        Ok(StepResult {
            state: self.random_state(rng),
            reward,
            terminal: self.done,
        })
    }
}
