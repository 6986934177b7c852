//! Decision and learning rules: epsilon schedule, epsilon-greedy action
//! selection, bootstrap targets, one minibatch update, target sync.

mod hyper;

pub use hyper::{DeviceCosts, HyperParams, Mode};

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::{self, OptConfig, OptState, Parameters};
use crate::replay::Transition;
use crate::rng::StreamRng;

/// Linear anneal from `start` to `end` over `anneal_steps`, then constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub anneal_steps: u64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            start: 1.0,
            end: 0.1,
            anneal_steps: 1_000_000,
        }
    }
}

impl EpsilonSchedule {
    /// Fixed exploration rate.
    pub fn constant(epsilon: f64) -> Self {
        Self {
            start: epsilon,
            end: epsilon,
            anneal_steps: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("epsilon_start", self.start), ("epsilon_end", self.end)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1]")));
            }
        }
        if self.end > self.start {
            return Err(Error::Config("epsilon_end must not exceed epsilon_start".into()));
        }
        Ok(())
    }
}

/// Exploration rate at global step `t` (1-based). Equals `start` at `t = 1`
/// and `end` for every `t >= anneal_steps`.
pub fn epsilon_at(t: u64, sched: &EpsilonSchedule) -> f64 {
    if t >= sched.anneal_steps {
        return sched.end;
    }
    let frac = (t.max(1) - 1) as f64 / (sched.anneal_steps - 1) as f64;
    sched.start + frac * (sched.end - sched.start)
}

/// Index of the largest entry; ties go to the lowest index.
pub fn greedy_action(q_row: &[f64]) -> Result<usize> {
    let (first, rest) = q_row.split_first().ok_or(Error::EmptyRow)?;
    let mut best = (0, *first);
    for (i, &v) in rest.iter().enumerate() {
        if v > best.1 {
            best = (i + 1, v);
        }
    }
    Ok(best.0)
}

/// Epsilon-greedy choice. Always consumes one uniform draw to decide
/// whether to explore, and a second draw for the action only when exploring.
pub fn select_action(q_row: &[f64], epsilon: f64, rng: &mut StreamRng) -> Result<usize> {
    if q_row.is_empty() {
        return Err(Error::EmptyRow);
    }
    let u: f64 = rng.gen();
    if u < epsilon {
        Ok(rng.gen_range(0..q_row.len()))
    } else {
        greedy_action(q_row)
    }
}

/// `r` for terminal transitions, otherwise `r + gamma * max_a' Q(s', a'; target)`.
pub fn td_targets(batch: &[&Transition], target: &Parameters, gamma: f64) -> Result<Vec<f64>> {
    let next: Vec<&[f64]> = batch.iter().map(|t| t.next_state.as_slice()).collect();
    let q_next = nn::forward(target, &next)?;
    Ok(batch
        .iter()
        .zip(q_next)
        .map(|(t, q)| {
            if t.terminal {
                t.reward
            } else {
                let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                t.reward + gamma * best
            }
        })
        .collect())
}

/// One gradient update of `theta` on `batch`; `target` is only read.
pub fn train_minibatch(
    theta: &mut Parameters,
    opt: &mut OptState,
    batch: &[&Transition],
    target: &Parameters,
    gamma: f64,
    cfg: &OptConfig,
) -> Result<()> {
    let targets = td_targets(batch, target, gamma)?;
    let states: Vec<&[f64]> = batch.iter().map(|t| t.state.as_slice()).collect();
    let actions: Vec<usize> = batch.iter().map(|t| t.action).collect();
    let grad = nn::gradient(theta, &states, &actions, &targets)?;
    nn::rmsprop_step(opt, cfg, theta, &grad)
}

/// `theta_minus <- theta`.
pub fn target_update(theta: &Parameters) -> Parameters {
    nn::copy_parameters(theta)
}
