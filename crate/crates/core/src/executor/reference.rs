use std::time::Instant;

use crate::agent::HyperParams;
use crate::config::describe;
use crate::error::Result;
use crate::nn::{copy_parameters, forward_row};
use crate::replay::{ReplayMemory, SampleBuffer};

use super::record::{EpisodeReturn, RunCounters, RunRecord};
use super::worker::{Learner, Sampler};
use super::{epoch_chunks, eval_due, evaluate, initial_state, sort_returns, EpochPlan};

/// Single-lane execution of the canonical schedule: sampler steps in
/// round-robin owner order, training after sampling within each slice.
pub fn sequential_reference(hp: &HyperParams) -> Result<RunRecord> {
    let started = Instant::now();
    let (theta, mut memory) = initial_state(hp)?;
    let mut samplers: Vec<Sampler> = (0..hp.workers)
        .map(|j| Sampler::new(j, &hp.env, hp.seed, hp.epsilon))
        .collect();
    let mut learner = Learner::new(theta, hp);
    let mut returns = Vec::new();
    let mut evaluations = Vec::new();
    let mut epoch_hashes = Vec::with_capacity(hp.epochs());
    let mut flushed = 0u64;
    let chunks = epoch_chunks(hp);

    for e in 0..hp.epochs() {
        let plan = EpochPlan::new(hp, e);
        flushed += flush(&mut samplers, &mut memory, &mut returns);
        let target = copy_parameters(learner.theta());
        let before = plan.first_step - 1;
        for chunk in &chunks {
            for idx in chunk.clone() {
                let (k, j) = (idx / hp.workers, idx % hp.workers);
                let acting = if hp.concurrent { &target } else { learner.theta() };
                let q = forward_row(acting, samplers[j].state())?;
                samplers[j].act(&q, plan.step_of(k, j))?;
            }
            if hp.concurrent {
                learner.train(&memory, &target, plan.minibatches, None)?;
            } else {
                flushed += flush(&mut samplers, &mut memory, &mut returns);
                let due = EpochPlan::boundaries(
                    before + chunk.start as u64,
                    before + chunk.end as u64,
                    hp.training_period,
                );
                if due > 0 {
                    learner.train(&memory, &target, due, None)?;
                }
            }
        }
        epoch_hashes.push(learner.theta().fingerprint());
        if let Some((index, step)) = eval_due(hp, e) {
            evaluations.push(evaluate(hp, learner.theta(), index, step)?);
        }
    }
    flushed += flush(&mut samplers, &mut memory, &mut returns);
    sort_returns(&mut returns);

    let final_theta = learner.theta().clone();
    Ok(RunRecord {
        config: describe(hp),
        seed: hp.seed,
        epoch_hashes,
        evaluations,
        episode_returns: returns,
        final_theta_hash: final_theta.fingerprint(),
        final_theta,
        counters: RunCounters {
            minibatches: learner.minibatches,
            train_jobs: learner.jobs,
            freeze_violations: learner.freeze_violations,
            flushed_transitions: flushed,
            ..RunCounters::default()
        },
        duration: started.elapsed(),
    })
}

fn flush(samplers: &mut [Sampler], memory: &mut ReplayMemory, returns: &mut Vec<EpisodeReturn>) -> u64 {
    let mut buffers: Vec<SampleBuffer> = Vec::with_capacity(samplers.len());
    for s in samplers.iter_mut() {
        let (buffer, r) = s.drain();
        returns.extend(r);
        buffers.push(buffer);
    }
    let n = buffers.iter().map(|b| b.len() as u64).sum();
    memory.flush(&mut buffers);
    n
}
