use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use crate::env::EnvSpec;
use crate::error::{Error, Result};
use crate::nn::OptConfig;

use super::EpsilonSchedule;

/// Which of the two optimizations are switched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Standard,
    Concurrent,
    Synchronized,
    Both,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Standard, Mode::Concurrent, Mode::Synchronized, Mode::Both];

    pub fn from_flags(concurrent: bool, synchronized: bool) -> Self {
        match (concurrent, synchronized) {
            (false, false) => Mode::Standard,
            (true, false) => Mode::Concurrent,
            (false, true) => Mode::Synchronized,
            (true, true) => Mode::Both,
        }
    }

    pub fn concurrent(self) -> bool {
        matches!(self, Mode::Concurrent | Mode::Both)
    }

    pub fn synchronized(self) -> bool {
        matches!(self, Mode::Synchronized | Mode::Both)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Standard => "standard",
            Mode::Concurrent => "concurrent",
            Mode::Synchronized => "synchronized",
            Mode::Both => "both",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown mode {s:?}")))
    }
}

/// Simulated accelerator costs, charged as CPU time on the calling thread
/// while holding the single shared device.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DeviceCosts {
    /// Fixed cost of one inference transaction.
    pub inference: Duration,
    /// Extra cost per state in an inference transaction.
    pub per_row: Duration,
    /// Cost of one training minibatch.
    pub train: Duration,
}

/// Full run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams {
    /// C: steps between target-network updates (one epoch).
    pub target_update_period: usize,
    /// F: steps per training minibatch.
    pub training_period: usize,
    pub discount: f64,
    /// N: random-policy transitions inserted before learning.
    pub prepopulate: usize,
    /// W: sampler workers.
    pub workers: usize,
    pub batch_size: usize,
    pub concurrent: bool,
    pub synchronized: bool,
    pub total_steps: usize,
    /// Steps between evaluations; 0 disables evaluation.
    pub eval_period: usize,
    pub eval_episodes: usize,
    pub eval_epsilon: f64,
    pub epsilon: EpsilonSchedule,
    pub opt: OptConfig,
    pub replay_capacity: usize,
    pub hidden_width: usize,
    pub seed: u64,
    pub env: EnvSpec,
    pub device: DeviceCosts,
}

impl HyperParams {
    /// Desk-scale defaults for the gridworld.
    pub fn desk() -> Self {
        let total_steps = 200_000;
        Self {
            target_update_period: 500,
            training_period: 4,
            discount: 0.99,
            prepopulate: 500,
            workers: 4,
            batch_size: 32,
            concurrent: true,
            synchronized: true,
            total_steps,
            eval_period: 10_000,
            eval_episodes: 30,
            eval_epsilon: 0.05,
            epsilon: EpsilonSchedule {
                start: 1.0,
                end: 0.1,
                anneal_steps: (total_steps / 50) as u64,
            },
            // Centered RMSProp divides by at least sqrt(kappa), so sparse
            // gridworld gradients need a larger step than the Atari rate.
            opt: OptConfig {
                learning_rate: 1e-2,
                ..OptConfig::default()
            },
            replay_capacity: 10_000,
            hidden_width: 32,
            seed: 0,
            env: EnvSpec::GridWorld,
            device: DeviceCosts::default(),
        }
    }

    /// Values used for the full-scale Atari experiments.
    pub fn atari_paper() -> Self {
        Self {
            target_update_period: 10_000,
            training_period: 4,
            discount: 0.99,
            prepopulate: 50_000,
            workers: 8,
            batch_size: 32,
            concurrent: true,
            synchronized: true,
            total_steps: 50_000_000,
            eval_period: 250_000,
            eval_episodes: 30,
            eval_epsilon: 0.05,
            epsilon: EpsilonSchedule {
                start: 1.0,
                end: 0.1,
                anneal_steps: 1_000_000,
            },
            opt: OptConfig::default(),
            replay_capacity: 1_000_000,
            hidden_width: 32,
            seed: 0,
            env: EnvSpec::GridWorld,
            device: DeviceCosts::default(),
        }
    }

    pub fn mode(&self) -> Mode {
        Mode::from_flags(self.concurrent, self.synchronized)
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.concurrent = mode.concurrent();
        self.synchronized = mode.synchronized();
    }

    pub fn epochs(&self) -> usize {
        self.total_steps / self.target_update_period
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        vec![self.env.state_dim(), self.hidden_width, self.env.action_count()]
    }

    /// Check every structural rule; the message names the violated rule.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.to_string()));
        let c = self.target_update_period;
        if c == 0 {
            return fail("C must be >= 1");
        }
        if self.training_period == 0 {
            return fail("F must be >= 1");
        }
        if self.workers == 0 {
            return fail("W must be >= 1");
        }
        if !c.is_multiple_of(self.training_period) {
            return fail("F must divide C");
        }
        if !c.is_multiple_of(self.workers) {
            return fail("W must divide C");
        }
        if self.synchronized && self.workers < 2 {
            return fail("synchronized execution requires W >= 2");
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return fail("gamma must lie in [0, 1]");
        }
        if self.batch_size == 0 {
            return fail("batch size must be >= 1");
        }
        if !self.total_steps.is_multiple_of(c) {
            return fail("C must divide total_steps");
        }
        if self.eval_period != 0 && !self.eval_period.is_multiple_of(c) {
            return fail("C must divide eval_period");
        }
        if self.eval_period != 0 && self.eval_episodes == 0 {
            return fail("eval_episodes must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.eval_epsilon) {
            return fail("eval epsilon must lie in [0, 1]");
        }
        if self.replay_capacity == 0 {
            return fail("replay capacity must be >= 1");
        }
        if self.prepopulate > self.replay_capacity {
            return fail("N must not exceed replay capacity");
        }
        if self.prepopulate == 0 && self.total_steps > 0 {
            return fail("N must be >= 1 so the first epoch has data to train on");
        }
        if self.hidden_width == 0 {
            return fail("hidden width must be >= 1");
        }
        if let EnvSpec::Synthetic(cfg) = &self.env {
            if cfg.state_dim == 0 || cfg.action_count == 0 || cfg.episode_length == 0 {
                return fail("synthetic environment dimensions must be >= 1");
            }
        }
        self.epsilon.validate()?;
        self.opt.validate()
    }
}
