//! State owned by each kind of worker. Both the threaded executor and the
//! single-lane reference drive these same types, so the two consume every
//! random stream in the same order.

use crate::agent::{self, epsilon_at, select_action, EpsilonSchedule, HyperParams};
use crate::env::{EnvSpec, Environment};
use crate::error::Result;
use crate::nn::{OptConfig, OptState, Parameters};
use crate::replay::{ReplayMemory, SampleBuffer, Transition};
use crate::rng::{stream, Role, StreamRng};

use super::device::InferenceDevice;
use super::record::EpisodeReturn;

pub(crate) struct Sampler {
    pub id: usize,
    env: Box<dyn Environment>,
    rng: StreamRng,
    state: Vec<f64>,
    episode_return: f64,
    buffer: SampleBuffer,
    returns: Vec<EpisodeReturn>,
    schedule: EpsilonSchedule,
}

impl Sampler {
    pub fn new(id: usize, spec: &EnvSpec, master_seed: u64, schedule: EpsilonSchedule) -> Self {
        let mut rng = stream(master_seed, Role::Sampler, id as u64);
        let mut env = spec.build();
        let state = env.reset(&mut rng);
        Self {
            id,
            env,
            rng,
            state,
            episode_return: 0.0,
            buffer: SampleBuffer::new(id),
            returns: Vec::new(),
            schedule,
        }
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    /// Take one step at global step `t` using precomputed Q-values.
    pub fn act(&mut self, q_row: &[f64], t: u64) -> Result<()> {
        let epsilon = epsilon_at(t, &self.schedule);
        let action = select_action(q_row, epsilon, &mut self.rng)?;
        let step = self.env.step(action, &mut self.rng)?;
        self.episode_return += step.reward;
        let terminal = step.terminal;
        let next_state = if terminal {
            self.returns.push(EpisodeReturn {
                step: t,
                sampler: self.id,
                value: self.episode_return,
            });
            self.episode_return = 0.0;
            self.env.reset(&mut self.rng)
        } else {
            step.state.clone()
        };
        let state = std::mem::replace(&mut self.state, next_state);
        self.buffer.push(Transition {
            state,
            action,
            reward: step.reward,
            next_state: step.state,
            terminal,
        });
        Ok(())
    }

    /// Hand over everything gathered since the last barrier.
    pub fn drain(&mut self) -> (SampleBuffer, Vec<EpisodeReturn>) {
        let buffer = std::mem::replace(&mut self.buffer, SampleBuffer::new(self.id));
        (buffer, std::mem::take(&mut self.returns))
    }
}

/// Trainer-side state: theta, optimizer moments and the minibatch stream.
pub(crate) struct Learner {
    theta: Parameters,
    opt: OptState,
    rng: StreamRng,
    cfg: OptConfig,
    gamma: f64,
    batch_size: usize,
    pub minibatches: u64,
    pub jobs: u64,
    pub freeze_violations: u64,
}

impl Learner {
    pub fn new(theta: Parameters, hp: &HyperParams) -> Self {
        Self {
            opt: OptState::new(&theta),
            theta,
            rng: stream(hp.seed, Role::Trainer, 0),
            cfg: hp.opt,
            gamma: hp.discount,
            batch_size: hp.batch_size,
            minibatches: 0,
            jobs: 0,
            freeze_violations: 0,
        }
    }

    pub fn theta(&self) -> &Parameters {
        &self.theta
    }

    fn train_one(&mut self, memory: &ReplayMemory, target: &Parameters) -> Result<()> {
        let batch = memory.sample(self.batch_size, &mut self.rng)?;
        agent::train_minibatch(&mut self.theta, &mut self.opt, &batch, target, self.gamma, &self.cfg)?;
        self.minibatches += 1;
        Ok(())
    }

    /// `count` minibatches against a store that must not change meanwhile.
    pub fn train(
        &mut self,
        memory: &ReplayMemory,
        target: &Parameters,
        count: usize,
        device: Option<&InferenceDevice>,
    ) -> Result<()> {
        let job_version = memory.version();
        for _ in 0..count {
            let before = memory.version();
            match device {
                Some(d) => d.train(|| self.train_one(memory, target))?,
                None => self.train_one(memory, target)?,
            }
            if memory.version() != before {
                self.freeze_violations += 1;
            }
        }
        if memory.version() != job_version {
            self.freeze_violations += 1;
        }
        self.jobs += 1;
        Ok(())
    }
}
