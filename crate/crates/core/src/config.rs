//! Flat `key = value` configuration with named presets.
//!
//! Resolution order is preset, then file, then command-line overrides; a
//! later source always wins. Unknown keys are rejected. The resolved values
//! are echoed into every output artifact through [`describe`], and the
//! echoed keys parse back to the same configuration.

use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use crate::agent::{DeviceCosts, HyperParams, Mode};
use crate::env::{EnvKind, EnvSpec, SyntheticConfig};
use crate::error::{Error, Result};

pub const PRESETS: [&str; 3] = ["desk", "atari-paper", "bench"];

/// Options that only the benchmark harness reads.
#[derive(Debug, Clone, PartialEq)]
pub struct HarnessOptions {
    pub trials: usize,
    pub worker_counts: Vec<usize>,
    /// Multiplier applied to measured runtimes in the hours-equivalent
    /// table. Both raw and scaled values are always reported.
    pub extrapolation: f64,
}

impl Default for HarnessOptions {
    fn default() -> Self {
        Self {
            trials: 5,
            worker_counts: vec![1, 2, 4, 8],
            extrapolation: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub preset: String,
    pub hp: HyperParams,
    pub harness: HarnessOptions,
}

impl Config {
    /// Resolved `key=value` pairs, preset first.
    pub fn describe(&self) -> Vec<(String, String)> {
        let mut out = vec![("preset".to_string(), self.preset.clone())];
        out.extend(describe(&self.hp));
        out.extend(describe_harness(&self.harness));
        out
    }
}

/// Timing benchmark base: synthetic environment with per-step latency and
/// nonzero device costs, evaluation off.
pub fn bench_preset() -> HyperParams {
    let mut hp = HyperParams::desk();
    hp.target_update_period = 400;
    hp.training_period = 4;
    hp.workers = 1;
    hp.set_mode(Mode::Standard);
    hp.prepopulate = 256;
    hp.total_steps = 4_000;
    hp.eval_period = 0;
    hp.epsilon.anneal_steps = 2_000;
    hp.env = EnvSpec::Synthetic(SyntheticConfig::default());
    hp.device = DeviceCosts {
        inference: Duration::from_micros(100),
        per_row: Duration::from_micros(10),
        train: Duration::from_micros(400),
    };
    hp
}

pub fn preset(name: &str) -> Result<HyperParams> {
    match name {
        "desk" => Ok(HyperParams::desk()),
        "atari-paper" => Ok(HyperParams::atari_paper()),
        "bench" => Ok(bench_preset()),
        other => Err(Error::Config(format!(
            "unknown preset {other:?} (expected one of {})",
            PRESETS.join(", ")
        ))),
    }
}

/// Merge `preset`, an optional file and `overrides` (each `key=value`),
/// then validate.
pub fn parse_config(preset_name: &str, file: Option<&Path>, overrides: &[String]) -> Result<Config> {
    let mut builder = Builder::new(preset(preset_name)?);
    if let Some(path) = file {
        let text = fs::read_to_string(path)?;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = split_pair(line)
                .map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), n + 1)))?;
            builder.apply(k, v)?;
        }
    }
    for o in overrides {
        let (k, v) = split_pair(o).map_err(Error::Config)?;
        builder.apply(k, v)?;
    }
    let (hp, harness) = builder.finish()?;
    Ok(Config {
        preset: preset_name.to_string(),
        hp,
        harness,
    })
}

fn split_pair(s: &str) -> std::result::Result<(&str, &str), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .filter(|(k, _)| !k.is_empty())
        .ok_or_else(|| format!("expected key=value, got {s:?}"))
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

fn micros(key: &str, value: &str) -> Result<Duration> {
    let us: f64 = parse(key, value)?;
    if !(us >= 0.0 && us.is_finite()) {
        return Err(Error::Config(format!("{key} must be a non-negative number of microseconds")));
    }
    Ok(Duration::from_nanos((us * 1e3).round() as u64))
}

fn show_micros(d: Duration) -> String {
    (d.as_nanos() as f64 / 1e3).to_string()
}

struct Builder {
    hp: HyperParams,
    env: EnvKind,
    synthetic: SyntheticConfig,
    harness: HarnessOptions,
}

impl Builder {
    fn new(hp: HyperParams) -> Self {
        let (env, synthetic) = match &hp.env {
            EnvSpec::GridWorld => (EnvKind::GridWorld, SyntheticConfig::default()),
            EnvSpec::Synthetic(cfg) => (EnvKind::Synthetic, cfg.clone()),
        };
        Self {
            hp,
            env,
            synthetic,
            harness: HarnessOptions::default(),
        }
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let hp = &mut self.hp;
        match key {
            "target_update_period" | "C" => hp.target_update_period = parse(key, value)?,
            "training_period" | "F" => hp.training_period = parse(key, value)?,
            "discount" | "gamma" => hp.discount = parse(key, value)?,
            "prepopulate" | "N" => hp.prepopulate = parse(key, value)?,
            "workers" | "W" => hp.workers = parse(key, value)?,
            "batch_size" | "batch" => hp.batch_size = parse(key, value)?,
            "mode" => hp.set_mode(value.parse::<Mode>()?),
            "total_steps" | "steps" => hp.total_steps = parse(key, value)?,
            "eval_period" => hp.eval_period = parse(key, value)?,
            "eval_episodes" => hp.eval_episodes = parse(key, value)?,
            "eval_epsilon" => hp.eval_epsilon = parse(key, value)?,
            "epsilon_start" => hp.epsilon.start = parse(key, value)?,
            "epsilon_end" => hp.epsilon.end = parse(key, value)?,
            "epsilon_anneal_steps" => hp.epsilon.anneal_steps = parse(key, value)?,
            "learning_rate" => hp.opt.learning_rate = parse(key, value)?,
            "rmsprop_decay" => hp.opt.decay = parse(key, value)?,
            "rmsprop_epsilon" => hp.opt.epsilon = parse(key, value)?,
            "replay_capacity" => hp.replay_capacity = parse(key, value)?,
            "hidden_width" => hp.hidden_width = parse(key, value)?,
            "seed" => hp.seed = parse(key, value)?,
            "env" => self.env = value.parse()?,
            "synthetic_state_dim" => self.synthetic.state_dim = parse(key, value)?,
            "synthetic_action_count" => self.synthetic.action_count = parse(key, value)?,
            "synthetic_episode_length" => self.synthetic.episode_length = parse(key, value)?,
            "env_latency_us" => self.synthetic.latency = micros(key, value)?,
            "inference_latency_us" => hp.device.inference = micros(key, value)?,
            "inference_row_latency_us" => hp.device.per_row = micros(key, value)?,
            "train_latency_us" => hp.device.train = micros(key, value)?,
            "trials" => self.harness.trials = parse(key, value)?,
            "worker_counts" => {
                self.harness.worker_counts = value
                    .split(',')
                    .map(|w| parse(key, w.trim()))
                    .collect::<Result<_>>()?
            }
            "extrapolation" => self.harness.extrapolation = parse(key, value)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    fn finish(mut self) -> Result<(HyperParams, HarnessOptions)> {
        self.hp.env = match self.env {
            EnvKind::GridWorld => EnvSpec::GridWorld,
            EnvKind::Synthetic => EnvSpec::Synthetic(self.synthetic),
        };
        self.hp.validate()?;
        let h = &self.harness;
        if h.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if h.worker_counts.is_empty() || h.worker_counts.contains(&0) {
            return Err(Error::Config("worker_counts must list positive integers".into()));
        }
        if !(h.extrapolation > 0.0 && h.extrapolation.is_finite()) {
            return Err(Error::Config("extrapolation must be positive".into()));
        }
        Ok((self.hp, self.harness))
    }
}

/// Canonical `key=value` echo of a run configuration.
pub fn describe(hp: &HyperParams) -> Vec<(String, String)> {
    let mut out: Vec<(&str, String)> = vec![
        ("target_update_period", hp.target_update_period.to_string()),
        ("training_period", hp.training_period.to_string()),
        ("discount", hp.discount.to_string()),
        ("prepopulate", hp.prepopulate.to_string()),
        ("workers", hp.workers.to_string()),
        ("batch_size", hp.batch_size.to_string()),
        ("mode", hp.mode().to_string()),
        ("total_steps", hp.total_steps.to_string()),
        ("eval_period", hp.eval_period.to_string()),
        ("eval_episodes", hp.eval_episodes.to_string()),
        ("eval_epsilon", hp.eval_epsilon.to_string()),
        ("epsilon_start", hp.epsilon.start.to_string()),
        ("epsilon_end", hp.epsilon.end.to_string()),
        ("epsilon_anneal_steps", hp.epsilon.anneal_steps.to_string()),
        ("learning_rate", hp.opt.learning_rate.to_string()),
        ("rmsprop_decay", hp.opt.decay.to_string()),
        ("rmsprop_epsilon", hp.opt.epsilon.to_string()),
        ("replay_capacity", hp.replay_capacity.to_string()),
        ("hidden_width", hp.hidden_width.to_string()),
        ("seed", hp.seed.to_string()),
        ("env", hp.env.name().to_string()),
    ];
    if let EnvSpec::Synthetic(cfg) = &hp.env {
        out.push(("synthetic_state_dim", cfg.state_dim.to_string()));
        out.push(("synthetic_action_count", cfg.action_count.to_string()));
        out.push(("synthetic_episode_length", cfg.episode_length.to_string()));
        out.push(("env_latency_us", show_micros(cfg.latency)));
    }
    out.push(("inference_latency_us", show_micros(hp.device.inference)));
    out.push(("inference_row_latency_us", show_micros(hp.device.per_row)));
    out.push(("train_latency_us", show_micros(hp.device.train)));
    out.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

pub fn describe_harness(h: &HarnessOptions) -> Vec<(String, String)> {
    let counts: Vec<String> = h.worker_counts.iter().map(ToString::to_string).collect();
    vec![
        ("trials".to_string(), h.trials.to_string()),
        ("worker_counts".to_string(), counts.join(",")),
        ("extrapolation".to_string(), h.extrapolation.to_string()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn set(pairs: &[&str]) -> Vec<String> {
        pairs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn atari_preset_resolves() {
        let cfg = parse_config("atari-paper", None, &[]).unwrap();
        let hp = &cfg.hp;
        assert_eq!(hp.target_update_period, 10_000);
        assert_eq!(hp.training_period, 4);
        assert_eq!(hp.batch_size, 32);
        assert_eq!(hp.replay_capacity, 1_000_000);
        assert_eq!(hp.discount, 0.99);
        assert_eq!(hp.prepopulate, 50_000);
    }

    #[test]
    fn desk_preset_resolves() {
        let hp = parse_config("desk", None, &[]).unwrap().hp;
        assert_eq!(
            (hp.target_update_period, hp.training_period, hp.workers, hp.prepopulate),
            (500, 4, 4, 500)
        );
        assert_eq!((hp.replay_capacity, hp.total_steps, hp.batch_size), (10_000, 200_000, 32));
        assert_eq!(hp.discount, 0.99);
    }

    #[test]
    fn invariant_violation_names_rule() {
        let err = parse_config("atari-paper", None, &set(&["C=999"])).unwrap_err();
        assert_eq!(err.to_string(), Error::Config("F must divide C".into()).to_string());
    }

    #[test]
    fn unknown_and_malformed() {
        assert!(parse_config("desk", None, &set(&["colour=blue"])).is_err());
        assert!(parse_config("desk", None, &set(&["C=abc"])).is_err());
        assert!(parse_config("desk", None, &set(&["C"])).is_err());
        assert!(parse_config("nope", None, &[]).is_err());
    }

    #[test]
    fn precedence() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "# comment\nC = 1000\nbatch=16\n").unwrap();
        let cfg = parse_config("desk", Some(file.path()), &set(&["batch=8"])).unwrap();
        assert_eq!(cfg.hp.target_update_period, 1000);
        assert_eq!(cfg.hp.batch_size, 8);
    }

    #[test]
    fn describe_round_trips() {
        for name in PRESETS {
            let cfg = parse_config(name, None, &set(&["seed=9", "trials=3"])).unwrap();
            let echoed: Vec<String> = cfg
                .describe()
                .into_iter()
                .filter(|(k, _)| k != "preset")
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            let other = if name == "desk" { "atari-paper" } else { "desk" };
            let again = parse_config(other, None, &echoed).unwrap();
            assert_eq!(again.hp, cfg.hp);
            assert_eq!(again.harness, cfg.harness);
        }
    }

    #[test]
    fn deterministic() {
        let a = parse_config("desk", None, &set(&["W=2", "mode=concurrent"])).unwrap();
        let b = parse_config("desk", None, &set(&["W=2", "mode=concurrent"])).unwrap();
        assert_eq!(a, b);
    }
}
