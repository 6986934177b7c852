//! Orchestration of W samplers and one trainer over epochs of C steps.
//!
//! Every epoch opens with a full barrier, flushes sampler buffers into the
//! replay memory in owner order and copies theta into the target network.
//! With concurrent training the trainer then runs C/F minibatches against
//! the frozen memory while the samplers act from the target network. Without
//! it, sampling pauses every F steps for one blocking minibatch on theta.
//! With synchronized execution the samplers advance in lockstep groups whose
//! states share one inference transaction.
//!
//! [`run`] is the threaded implementation. [`sequential_reference`] executes
//! the same schedule in one lane and serves as its oracle.

mod device;
mod parallel;
mod plan;
mod record;
mod reference;
mod worker;

pub use device::{batched_inference, DeviceCounters, InferenceDevice, ParamRole};
pub use parallel::run;
pub use plan::{transaction_count, EpochPlan, TransactionCount};
pub use record::{EpisodeReturn, EvalPoint, RunCounters, RunRecord};
pub use reference::sequential_reference;

use std::ops::Range;

use crate::agent::HyperParams;
use crate::env::evaluate_policy;
use crate::error::Result;
use crate::nn::{init_network, Parameters};
use crate::replay::ReplayMemory;
use crate::rng::{stream, stream_seed, Role};

/// Initial theta and the prepopulated replay memory.
fn initial_state(hp: &HyperParams) -> Result<(Parameters, ReplayMemory)> {
    hp.validate()?;
    let theta = init_network(&hp.layer_sizes(), stream_seed(hp.seed, Role::Init, 0))?;
    let mut memory = ReplayMemory::new(hp.replay_capacity)?;
    let mut env = hp.env.build();
    let mut rng = stream(hp.seed, Role::Prepopulate, 0);
    memory.prepopulate(env.as_mut(), hp.prepopulate, &mut rng)?;
    Ok((theta, memory))
}

/// Slices of an epoch, as step indices `k * W + j` within it, after each of
/// which non-concurrent modes flush and train. Concurrent modes use a single
/// slice covering the epoch.
fn epoch_chunks(hp: &HyperParams) -> Vec<Range<usize>> {
    let c = hp.target_update_period;
    let width = match (hp.concurrent, hp.synchronized) {
        (true, _) => c,
        (false, true) => hp.workers,
        (false, false) => hp.training_period,
    };
    (0..c / width).map(|i| i * width..(i + 1) * width).collect()
}

/// Evaluation index and global step if one is due after `epoch`.
fn eval_due(hp: &HyperParams, epoch: usize) -> Option<(u64, u64)> {
    let end = ((epoch + 1) * hp.target_update_period) as u64;
    let period = hp.eval_period as u64;
    (period != 0 && end.is_multiple_of(period)).then(|| (end / period, end))
}

fn evaluate(hp: &HyperParams, params: &Parameters, index: u64, step: u64) -> Result<EvalPoint> {
    let mut env = hp.env.build();
    let stats = evaluate_policy(
        env.as_mut(),
        params,
        hp.eval_epsilon,
        hp.eval_episodes,
        stream_seed(hp.seed, Role::Evaluator, index),
    )?;
    Ok(EvalPoint {
        step,
        mean: stats.mean,
        std: stats.std,
    })
}

fn sort_returns(returns: &mut [EpisodeReturn]) {
    returns.sort_by_key(|r| (r.step, r.sampler));
}
