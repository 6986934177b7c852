//! The shared "accelerator": one serial resource that answers inference
//! transactions and runs training minibatches.
//!
//! Each call holds the device lock for its whole duration and burns the
//! configured cost as CPU time, so samplers contend for it the way threads
//! contend for a single GPU bus. Counters record every transaction.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Mutex, MutexGuard};

use crate::agent::DeviceCosts;
use crate::error::Result;
use crate::nn::{self, Parameters};
use crate::spin::spin_for;

/// Which parameter instance served an inference call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamRole {
    /// The trained parameters (theta).
    Main,
    /// The target network (theta minus).
    Target,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DeviceCounters {
    pub inference_calls: u64,
    pub inference_rows: u64,
    pub train_calls: u64,
    pub main_inferences: u64,
    pub target_inferences: u64,
}

#[derive(Debug, Default)]
pub struct InferenceDevice {
    lock: Mutex<()>,
    costs: DeviceCosts,
    inference_calls: AtomicU64,
    inference_rows: AtomicU64,
    train_calls: AtomicU64,
    main_inferences: AtomicU64,
    target_inferences: AtomicU64,
}

impl InferenceDevice {
    pub fn new(costs: DeviceCosts) -> Self {
        Self {
            costs,
            ..Self::default()
        }
    }

    fn acquire(&self) -> MutexGuard<'_, ()> {
        self.lock.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// One inference transaction over all `states`.
    pub fn infer<S: AsRef<[f64]>>(
        &self,
        role: ParamRole,
        params: &Parameters,
        states: &[S],
    ) -> Result<Vec<Vec<f64>>> {
        let _guard = self.acquire();
        spin_for(self.costs.inference + self.costs.per_row * states.len() as u32);
        let rows = nn::forward(params, states)?;
        self.inference_calls.fetch_add(1, Ordering::Relaxed);
        self.inference_rows.fetch_add(states.len() as u64, Ordering::Relaxed);
        match role {
            ParamRole::Main => self.main_inferences.fetch_add(1, Ordering::Relaxed),
            ParamRole::Target => self.target_inferences.fetch_add(1, Ordering::Relaxed),
        };
        Ok(rows)
    }

    /// Run one training minibatch on the device.
    pub fn train<R>(&self, work: impl FnOnce() -> R) -> R {
        let _guard = self.acquire();
        spin_for(self.costs.train);
        self.train_calls.fetch_add(1, Ordering::Relaxed);
        work()
    }

    pub fn counters(&self) -> DeviceCounters {
        DeviceCounters {
            inference_calls: self.inference_calls.load(Ordering::Relaxed),
            inference_rows: self.inference_rows.load(Ordering::Relaxed),
            train_calls: self.train_calls.load(Ordering::Relaxed),
            main_inferences: self.main_inferences.load(Ordering::Relaxed),
            target_inferences: self.target_inferences.load(Ordering::Relaxed),
        }
    }
}

/// Q-values for every sampler's current state in a single transaction;
/// row `j` belongs to sampler `j`.
pub fn batched_inference<S: AsRef<[f64]>>(
    device: &InferenceDevice,
    role: ParamRole,
    acting: &Parameters,
    states: &[S],
) -> Result<Vec<Vec<f64>>> {
    device.infer(role, acting, states)
}
