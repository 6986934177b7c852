//! Run results and their CSV form.

use std::fmt::Write as _;
use std::io::Write;
use std::time::Duration;

use crate::error::Result;
use crate::nn::Parameters;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPoint {
    pub step: u64,
    pub mean: f64,
    pub std: f64,
}

/// Undiscounted return of one finished training episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeReturn {
    /// Global step on which the episode ended.
    pub step: u64,
    pub sampler: usize,
    pub value: f64,
}

/// Instrumentation gathered while running. Not part of the CSV.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunCounters {
    pub inference_calls: u64,
    pub inference_rows: u64,
    pub device_train_calls: u64,
    /// Inference calls served by theta / by the target network.
    pub main_inferences: u64,
    pub target_inferences: u64,
    pub minibatches: u64,
    pub train_jobs: u64,
    /// Training jobs or minibatches during which the replay version moved.
    pub freeze_violations: u64,
    pub flushed_transitions: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// Fully resolved configuration, in key order.
    pub config: Vec<(String, String)>,
    pub seed: u64,
    /// Fingerprint of theta at the end of every epoch.
    pub epoch_hashes: Vec<u64>,
    pub evaluations: Vec<EvalPoint>,
    pub episode_returns: Vec<EpisodeReturn>,
    pub final_theta_hash: u64,
    pub final_theta: Parameters,
    pub counters: RunCounters,
    pub duration: Duration,
}

impl RunRecord {
    pub fn best_eval(&self) -> Option<EvalPoint> {
        self.evaluations
            .iter()
            .copied()
            .fold(None, |best: Option<EvalPoint>, e| match best {
                Some(b) if b.mean >= e.mean => Some(b),
                _ => Some(e),
            })
    }

    /// Line-oriented CSV: a `#` header echoing the resolved configuration,
    /// `step,event,value` rows ordered by step, and a `#` summary footer.
    /// Wall-clock duration is deliberately absent, so deterministic runs
    /// produce byte-identical files.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("# fastdqn run record\n");
        let _ = writeln!(out, "# seed={}", self.seed);
        for (k, v) in &self.config {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str("step,event,value\n");

        // (step, rank within step, line)
        let mut rows: Vec<(u64, u8, String)> = Vec::new();
        for r in &self.episode_returns {
            rows.push((r.step, 0, format!("{},episode_return,{}", r.step, r.value)));
        }
        let epoch_len = self.epoch_length();
        for (e, h) in self.epoch_hashes.iter().enumerate() {
            let step = (e as u64 + 1) * epoch_len;
            rows.push((step, 1, format!("{step},theta_hash,{h:#018x}")));
        }
        for ev in &self.evaluations {
            rows.push((ev.step, 2, format!("{},eval_mean,{}", ev.step, ev.mean)));
            rows.push((ev.step, 3, format!("{},eval_std,{}", ev.step, ev.std)));
        }
        rows.sort_by_key(|r| (r.0, r.1));
        for (_, _, line) in rows {
            out.push_str(&line);
            out.push('\n');
        }

        let best = self
            .best_eval()
            .map_or_else(|| "none".to_string(), |b| format!("{}@{}", b.mean, b.step));
        let _ = writeln!(
            out,
            "# summary epochs={} episodes={} evaluations={} best_eval_mean={} final_theta_hash={:#018x}",
            self.epoch_hashes.len(),
            self.episode_returns.len(),
            self.evaluations.len(),
            best,
            self.final_theta_hash
        );
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }

    fn epoch_length(&self) -> u64 {
        self.config
            .iter()
            .find(|(k, _)| k == "target_update_period")
            .and_then(|(_, v)| v.parse().ok())
            .unwrap_or(1)
    }
}
