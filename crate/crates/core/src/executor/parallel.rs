use std::ops::Range;
use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::Arc;
use std::thread;
use std::time::Instant;

use crate::agent::HyperParams;
use crate::config::describe;
use crate::error::{Error, Result};
use crate::nn::{copy_parameters, Parameters};
use crate::replay::{ReplayMemory, SampleBuffer};

use super::device::{batched_inference, InferenceDevice, ParamRole};
use super::record::{EpisodeReturn, EvalPoint, RunCounters, RunRecord};
use super::worker::{Learner, Sampler};
use super::{epoch_chunks, eval_due, evaluate, initial_state, sort_returns, EpochPlan};

enum SamplerCmd {
    /// One lockstep step with Q-values computed by the orchestrator.
    Act { q: Vec<f64>, t: u64 },
    /// Independent steps at the given global step numbers, each with its
    /// own single-state inference transaction.
    Run {
        steps: Vec<u64>,
        acting: Arc<Parameters>,
        role: ParamRole,
    },
    Drain,
}

enum SamplerReply {
    State(Vec<f64>),
    Done,
    Drained(SampleBuffer, Vec<EpisodeReturn>),
}

struct TrainJob {
    memory: ReplayMemory,
    target: Arc<Parameters>,
    count: usize,
}

struct TrainDone {
    memory: ReplayMemory,
    theta: Arc<Parameters>,
}

struct LearnerTotals {
    minibatches: u64,
    jobs: u64,
    freeze_violations: u64,
}

fn disconnected(who: &str) -> Error {
    Error::Worker(format!("{who} worker exited unexpectedly"))
}

fn sampler_loop(
    mut sampler: Sampler,
    device: &InferenceDevice,
    commands: Receiver<SamplerCmd>,
    replies: Sender<Result<SamplerReply>>,
) {
    for cmd in commands {
        let reply = match cmd {
            SamplerCmd::Act { q, t } => sampler
                .act(&q, t)
                .map(|()| SamplerReply::State(sampler.state().to_vec())),
            SamplerCmd::Run { steps, acting, role } => steps
                .into_iter()
                .try_for_each(|t| {
                    let q = device.infer(role, &acting, &[sampler.state()])?;
                    sampler.act(&q[0], t)
                })
                .map(|()| SamplerReply::Done),
            SamplerCmd::Drain => {
                let (buffer, returns) = sampler.drain();
                Ok(SamplerReply::Drained(buffer, returns))
            }
        };
        if replies.send(reply).is_err() {
            return;
        }
    }
}

fn trainer_loop(
    mut learner: Learner,
    device: &InferenceDevice,
    jobs: Receiver<TrainJob>,
    replies: Sender<Result<TrainDone>>,
) -> LearnerTotals {
    for job in jobs {
        let reply = learner
            .train(&job.memory, &job.target, job.count, Some(device))
            .map(|()| TrainDone {
                memory: job.memory,
                theta: Arc::new(copy_parameters(learner.theta())),
            });
        if replies.send(reply).is_err() {
            break;
        }
    }
    LearnerTotals {
        minibatches: learner.minibatches,
        jobs: learner.jobs,
        freeze_violations: learner.freeze_violations,
    }
}

fn evaluator_loop(hp: &HyperParams, requests: Receiver<(u64, u64, Arc<Parameters>)>) -> Result<Vec<EvalPoint>> {
    let mut points = Vec::new();
    for (index, step, params) in requests {
        points.push(evaluate(hp, &params, index, step)?);
    }
    Ok(points)
}

/// Orchestrator-side handles to the sampler workers.
struct Pool {
    commands: Vec<Sender<SamplerCmd>>,
    replies: Vec<Receiver<Result<SamplerReply>>>,
    /// Latest state of every sampler, maintained for lockstep groups.
    states: Vec<Vec<f64>>,
}

impl Pool {
    fn send(&self, j: usize, cmd: SamplerCmd) -> Result<()> {
        self.commands[j].send(cmd).map_err(|_| disconnected("sampler"))
    }

    fn recv(&self, j: usize) -> Result<SamplerReply> {
        self.replies[j].recv().map_err(|_| disconnected("sampler"))?
    }

    /// Collect every buffer and flush into `memory` in owner order.
    fn flush(&self, memory: &mut ReplayMemory, returns: &mut Vec<EpisodeReturn>) -> Result<u64> {
        for j in 0..self.commands.len() {
            self.send(j, SamplerCmd::Drain)?;
        }
        let mut buffers = Vec::with_capacity(self.commands.len());
        for j in 0..self.commands.len() {
            match self.recv(j)? {
                SamplerReply::Drained(buffer, r) => {
                    returns.extend(r);
                    buffers.push(buffer);
                }
                _ => return Err(Error::Worker("sampler answered drain out of order".into())),
            }
        }
        let n = buffers.iter().map(|b| b.len() as u64).sum();
        memory.flush(&mut buffers);
        Ok(n)
    }

    /// Advance through the epoch-relative step indices in `chunk`.
    fn sample(
        &mut self,
        device: &InferenceDevice,
        plan: &EpochPlan,
        chunk: Range<usize>,
        acting: &Arc<Parameters>,
        role: ParamRole,
        synchronized: bool,
    ) -> Result<()> {
        let w = plan.workers;
        if synchronized {
            for k in chunk.start / w..chunk.end / w {
                let rows = batched_inference(device, role, acting, &self.states)?;
                for (j, q) in rows.into_iter().enumerate() {
                    self.send(j, SamplerCmd::Act { q, t: plan.step_of(k, j) })?;
                }
                for j in 0..w {
                    match self.recv(j)? {
                        SamplerReply::State(s) => self.states[j] = s,
                        _ => return Err(Error::Worker("sampler answered act out of order".into())),
                    }
                }
            }
            return Ok(());
        }
        let mut busy = Vec::new();
        for j in 0..w {
            let steps: Vec<u64> = chunk
                .clone()
                .filter(|idx| idx % w == j)
                .map(|idx| plan.step_of(idx / w, j))
                .collect();
            if !steps.is_empty() {
                self.send(
                    j,
                    SamplerCmd::Run {
                        steps,
                        acting: Arc::clone(acting),
                        role,
                    },
                )?;
                busy.push(j);
            }
        }
        for j in busy {
            match self.recv(j)? {
                SamplerReply::Done => {}
                _ => return Err(Error::Worker("sampler answered run out of order".into())),
            }
        }
        Ok(())
    }
}

struct Trainer {
    jobs: Sender<TrainJob>,
    replies: Receiver<Result<TrainDone>>,
}

impl Trainer {
    fn dispatch(&self, memory: ReplayMemory, target: &Arc<Parameters>, count: usize) -> Result<()> {
        self.jobs
            .send(TrainJob {
                memory,
                target: Arc::clone(target),
                count,
            })
            .map_err(|_| disconnected("trainer"))
    }

    fn wait(&self) -> Result<TrainDone> {
        self.replies.recv().map_err(|_| disconnected("trainer"))?
    }
}

/// Threaded run: W sampler threads, one trainer thread, one evaluator
/// thread and this thread as orchestrator. All inference and training goes
/// through a single simulated device configured by `hp.device`.
pub fn run(hp: &HyperParams) -> Result<RunRecord> {
    let started = Instant::now();
    let (theta, memory) = initial_state(hp)?;
    let device = InferenceDevice::new(hp.device);
    let initial_theta = Arc::new(copy_parameters(&theta));

    let samplers: Vec<Sampler> = (0..hp.workers)
        .map(|j| Sampler::new(j, &hp.env, hp.seed, hp.epsilon))
        .collect();
    let states: Vec<Vec<f64>> = samplers.iter().map(|s| s.state().to_vec()).collect();
    let learner = Learner::new(theta, hp);

    thread::scope(|scope| {
        let device = &device;
        let mut pool = Pool {
            commands: Vec::new(),
            replies: Vec::new(),
            states,
        };
        for sampler in samplers {
            let (cmd_tx, cmd_rx) = channel();
            let (reply_tx, reply_rx) = channel();
            scope.spawn(move || sampler_loop(sampler, device, cmd_rx, reply_tx));
            pool.commands.push(cmd_tx);
            pool.replies.push(reply_rx);
        }
        let (job_tx, job_rx) = channel();
        let (done_tx, done_rx) = channel();
        let trainer_handle = scope.spawn(move || trainer_loop(learner, device, job_rx, done_tx));
        let trainer = Trainer {
            jobs: job_tx,
            replies: done_rx,
        };
        let (eval_tx, eval_rx) = channel();
        let evaluator_handle = scope.spawn(move || evaluator_loop(hp, eval_rx));

        let outcome = orchestrate(hp, device, &mut pool, &trainer, &eval_tx, memory, initial_theta);

        // Closing the channels lets every worker fall out of its loop.
        drop(pool);
        drop(trainer);
        drop(eval_tx);
        let totals = trainer_handle
            .join()
            .map_err(|_| Error::Worker("trainer panicked".into()))?;
        let evaluations = evaluator_handle
            .join()
            .map_err(|_| Error::Worker("evaluator panicked".into()))??;
        let mut out = outcome?;

        let device_counters = device.counters();
        out.counters = RunCounters {
            inference_calls: device_counters.inference_calls,
            inference_rows: device_counters.inference_rows,
            device_train_calls: device_counters.train_calls,
            main_inferences: device_counters.main_inferences,
            target_inferences: device_counters.target_inferences,
            minibatches: totals.minibatches,
            train_jobs: totals.jobs,
            freeze_violations: totals.freeze_violations,
            flushed_transitions: out.counters.flushed_transitions,
        };
        out.evaluations = evaluations;
        out.duration = started.elapsed();
        Ok(out)
    })
}

fn orchestrate(
    hp: &HyperParams,
    device: &InferenceDevice,
    pool: &mut Pool,
    trainer: &Trainer,
    evals: &Sender<(u64, u64, Arc<Parameters>)>,
    memory: ReplayMemory,
    mut theta: Arc<Parameters>,
) -> Result<RunRecord> {
    let mut memory = Some(memory);
    let mut returns = Vec::new();
    let mut epoch_hashes = Vec::with_capacity(hp.epochs());
    let mut flushed = 0u64;
    let chunks = epoch_chunks(hp);
    // Epoch whose concurrent training is still running.
    let mut in_flight: Option<usize> = None;

    let mut finish_epoch = |e: usize, theta: &Arc<Parameters>| -> Result<()> {
        epoch_hashes.push(theta.fingerprint());
        if let Some((index, step)) = eval_due(hp, e) {
            evals
                .send((index, step, Arc::clone(theta)))
                .map_err(|_| disconnected("evaluator"))?;
        }
        Ok(())
    };

    for e in 0..hp.epochs() {
        let plan = EpochPlan::new(hp, e);
        if let Some(prev) = in_flight.take() {
            let done = trainer.wait()?;
            memory = Some(done.memory);
            theta = done.theta;
            finish_epoch(prev, &theta)?;
        }
        let mem = memory.as_mut().ok_or_else(|| disconnected("trainer"))?;
        flushed += pool.flush(mem, &mut returns)?;
        let target = Arc::new(copy_parameters(&theta));

        if hp.concurrent {
            let mem = memory.take().ok_or_else(|| disconnected("trainer"))?;
            trainer.dispatch(mem, &target, plan.minibatches)?;
            in_flight = Some(e);
            for chunk in &chunks {
                pool.sample(device, &plan, chunk.clone(), &target, ParamRole::Target, hp.synchronized)?;
            }
            continue;
        }

        let before = plan.first_step - 1;
        for chunk in &chunks {
            pool.sample(device, &plan, chunk.clone(), &theta, ParamRole::Main, hp.synchronized)?;
            let mem = memory.as_mut().ok_or_else(|| disconnected("trainer"))?;
            flushed += pool.flush(mem, &mut returns)?;
            let due = EpochPlan::boundaries(
                before + chunk.start as u64,
                before + chunk.end as u64,
                hp.training_period,
            );
            if due > 0 {
                let mem = memory.take().ok_or_else(|| disconnected("trainer"))?;
                trainer.dispatch(mem, &target, due)?;
                let done = trainer.wait()?;
                memory = Some(done.memory);
                theta = done.theta;
            }
        }
        finish_epoch(e, &theta)?;
    }
    if let Some(prev) = in_flight.take() {
        let done = trainer.wait()?;
        memory = Some(done.memory);
        theta = done.theta;
        finish_epoch(prev, &theta)?;
    }
    let mem = memory.as_mut().ok_or_else(|| disconnected("trainer"))?;
    flushed += pool.flush(mem, &mut returns)?;
    sort_returns(&mut returns);

    Ok(RunRecord {
        config: describe(hp),
        seed: hp.seed,
        epoch_hashes,
        evaluations: Vec::new(),
        episode_returns: returns,
        final_theta_hash: theta.fingerprint(),
        final_theta: (*theta).clone(),
        counters: RunCounters {
            flushed_transitions: flushed,
            ..RunCounters::default()
        },
        duration: Default::default(),
    })
}
