use crate::agent::HyperParams;

/// Work assigned to one epoch: the C global steps between two target
/// updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpochPlan {
    pub epoch: usize,
    /// Global steps `first_step ..= last_step`, 1-based.
    pub first_step: u64,
    pub last_step: u64,
    pub per_sampler_steps: usize,
    pub minibatches: usize,
    pub workers: usize,
}

impl EpochPlan {
    /// Assumes `hp` has been validated (F and W divide C).
    pub fn new(hp: &HyperParams, epoch: usize) -> Self {
        let c = hp.target_update_period as u64;
        Self {
            epoch,
            first_step: epoch as u64 * c + 1,
            last_step: (epoch as u64 + 1) * c,
            per_sampler_steps: hp.target_update_period / hp.workers,
            minibatches: hp.target_update_period / hp.training_period,
            workers: hp.workers,
        }
    }

    /// Canonical global step of sampler `j`'s `k`-th step this epoch: the
    /// position it holds in the round-robin lockstep order.
    pub fn step_of(&self, k: usize, j: usize) -> u64 {
        self.first_step + (k * self.workers + j) as u64
    }

    /// Number of multiples of `period` in `(after, upto]`.
    pub fn boundaries(after: u64, upto: u64, period: usize) -> usize {
        let p = period as u64;
        (upto / p - after / p) as usize
    }
}

/// Predicted number of calls into the inference device for `steps` global
/// steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransactionCount {
    pub inference: u64,
    pub training: u64,
}

pub fn transaction_count(hp: &HyperParams, steps: u64) -> TransactionCount {
    let inference = if hp.synchronized {
        steps / hp.workers as u64
    } else {
        steps
    };
    let c = hp.target_update_period as u64;
    let training = steps / c * (c / hp.training_period as u64);
    TransactionCount { inference, training }
}
