//! Analytical epoch-time model and its micro-benchmark fit.

use std::sync::Barrier;
use std::thread;
use std::time::{Duration, Instant};

use crate::agent::{train_minibatch, HyperParams};
use crate::error::{Error, Result};
use crate::executor::{InferenceDevice, ParamRole};
use crate::nn::{init_network, OptState};
use crate::replay::ReplayMemory;
use crate::rng::{stream, Role};

/// Per-operation costs in seconds.
///
/// Batched inference over `w` states costs `t_inf + batch_row * (w - 1)`;
/// concurrent single-state inference with `w` samplers costs
/// `t_inf * (1 + contention_slope * (w - 1))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingModel {
    pub t_env: f64,
    pub t_inf: f64,
    /// Marginal cost of each extra row in a batched transaction,
    /// `0 <= batch_row <= t_inf`.
    pub batch_row: f64,
    pub t_train: f64,
    /// `0 <= contention_slope <= 1`.
    pub contention_slope: f64,
}

impl TimingModel {
    pub fn validate(&self) -> Result<()> {
        let positive = [("t_env", self.t_env), ("t_inf", self.t_inf), ("t_train", self.t_train)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !(0.0..=self.t_inf).contains(&self.batch_row) {
            return Err(Error::Config("batch_row must lie in [0, t_inf]".into()));
        }
        if !(0.0..=1.0).contains(&self.contention_slope) {
            return Err(Error::Config("contention_slope must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn t_binf(&self, workers: usize) -> f64 {
        self.t_inf + self.batch_row * (workers as f64 - 1.0)
    }

    pub fn contention(&self, workers: usize) -> f64 {
        1.0 + self.contention_slope * (workers as f64 - 1.0)
    }
}

/// Predicted seconds for one epoch of `hp`.
pub fn predict_runtime(model: &TimingModel, hp: &HyperParams) -> Result<f64> {
    model.validate()?;
    let c = hp.target_update_period as f64;
    let w = hp.workers as f64;
    let share = if hp.synchronized {
        model.t_binf(hp.workers) / w
    } else {
        model.t_inf * model.contention(hp.workers)
    };
    let sample = c / w * (model.t_env + share);
    let train = c / hp.training_period as f64 * model.t_train;
    Ok(if hp.concurrent { sample.max(train) } else { sample + train })
}

/// Predicted seconds for a whole run, including random prepopulation.
pub fn predict_run(model: &TimingModel, hp: &HyperParams) -> Result<f64> {
    Ok(hp.prepopulate as f64 * model.t_env + hp.epochs() as f64 * predict_runtime(model, hp)?)
}

/// Median wall time of `samples` calls to `op`.
fn median_time<F: FnMut() -> Result<()>>(samples: usize, mut op: F) -> Result<f64> {
    let mut times = Vec::with_capacity(samples);
    for _ in 0..samples {
        let t = Instant::now();
        op()?;
        times.push(t.elapsed().as_secs_f64());
    }
    Ok(median(&mut times))
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Measure every model cost on this machine using the environment, network
/// and device costs of `hp`. Each cost is the median of `samples` (at least
/// 100) timings.
pub fn fit_timing_model(hp: &HyperParams, samples: usize) -> Result<TimingModel> {
    let samples = samples.max(100);
    let mut rng = stream(hp.seed, Role::Bench, 0);
    let mut env = hp.env.build();
    let mut state = env.reset(&mut rng);
    let t_env = median_time(samples, || {
        let step = env.step(0, &mut rng)?;
        state = if step.terminal { env.reset(&mut rng) } else { step.state };
        Ok(())
    })?;

    let params = init_network(&hp.layer_sizes(), 0)?;
    let device = InferenceDevice::new(hp.device);
    let one = vec![state.clone()];
    let t_inf = median_time(samples, || device.infer(ParamRole::Main, &params, &one).map(drop))?;
    let probe = 8;
    let many = vec![state.clone(); probe];
    let t_many = median_time(samples, || device.infer(ParamRole::Main, &params, &many).map(drop))?;
    let batch_row = ((t_many - t_inf) / (probe - 1) as f64).clamp(0.0, t_inf);

    let mut memory = ReplayMemory::new(hp.replay_capacity)?;
    memory.prepopulate(env.as_mut(), hp.batch_size.max(hp.prepopulate.min(1_000)), &mut rng)?;
    let mut theta = params.clone();
    let target = params.clone();
    let mut opt = OptState::new(&theta);
    let t_train = median_time(samples, || {
        device.train(|| {
            let batch = memory.sample(hp.batch_size, &mut rng)?;
            train_minibatch(&mut theta, &mut opt, &batch, &target, hp.discount, &hp.opt)
        })
    })?;

    let per_step_1 = contended_step(hp, &device, &params, 1, samples)?;
    let per_step_2 = contended_step(hp, &device, &params, 2, samples)?;
    let contention = 1.0 + (per_step_2 - per_step_1) / t_inf;
    Ok(TimingModel {
        t_env,
        t_inf,
        batch_row,
        t_train,
        contention_slope: (contention - 1.0).clamp(0.0, 1.0),
    })
}

/// Median wall time of one environment step plus one single-state inference
/// while `workers` threads do the same.
fn contended_step(
    hp: &HyperParams,
    device: &InferenceDevice,
    params: &crate::nn::Parameters,
    workers: usize,
    samples: usize,
) -> Result<f64> {
    let barrier = Barrier::new(workers);
    let results: Vec<Result<f64>> = thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|j| {
                let barrier = &barrier;
                scope.spawn(move || {
                    let mut rng = stream(hp.seed, Role::Bench, 1 + j as u64);
                    let mut env = hp.env.build();
                    let mut state = env.reset(&mut rng);
                    barrier.wait();
                    median_time(samples, || {
                        let q = device.infer(ParamRole::Main, params, &[&state])?;
                        let step = env.step(crate::agent::greedy_action(&q[0])?, &mut rng)?;
                        state = if step.terminal { env.reset(&mut rng) } else { step.state };
                        Ok(())
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Worker("timing probe panicked".into()))))
            .collect()
    });
    let mut per = results.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(median(&mut per))
}

/// Model with every cost given directly in microseconds.
pub fn model_from_micros(t_env: f64, t_inf: f64, batch_row: f64, t_train: f64, contention_slope: f64) -> Result<TimingModel> {
    let s = |us: f64| Duration::from_nanos((us * 1e3).round().max(0.0) as u64).as_secs_f64();
    let model = TimingModel {
        t_env: s(t_env),
        t_inf: s(t_inf),
        batch_row: s(batch_row),
        t_train: s(t_train),
        contention_slope,
    };
    model.validate()?;
    Ok(model)
}
