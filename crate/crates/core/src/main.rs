//! Command-line entry point.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use fastdqn::config::{parse_config, Config};
use fastdqn::env::evaluate_policy;
use fastdqn::executor::{run, sequential_reference};
use fastdqn::harness::{
    ablation_cells, ablation_grid, fit_timing_model, model_from_micros, predict_run, predict_runtime, read_scores,
    render_csv, render_markdown, score_report, RuntimeStats, RuntimeTable, TimingModel, APPENDIX_SCORES,
};
use fastdqn::nn::Parameters;

#[derive(Parser)]
#[command(name = "fastdqn", version, about = "Deep Q-learning with concurrent training and synchronized execution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent and write its run record.
    Train(TrainArgs),
    /// Time every mode and worker count and emit runtime tables.
    Bench(BenchArgs),
    /// Evaluate a saved parameter file.
    Eval(EvalArgs),
    /// Recompute human-normalized scores from a score CSV.
    Score(ScoreArgs),
    /// Predict runtimes from the analytical timing model.
    Predict(PredictArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Named preset: desk, atari-paper or bench.
    #[arg(long)]
    preset: Option<String>,
    /// Plain-text key=value file applied over the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key; repeatable. Applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = ["standard", "concurrent", "synchronized", "both"])]
    mode: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
    /// Total training steps.
    #[arg(long)]
    steps: Option<usize>,
}

impl ConfigArgs {
    fn resolve(&self, default_preset: &str, extra: &[String]) -> Result<Config> {
        let mut overrides = self.set.clone();
        if let Some(seed) = self.seed {
            overrides.push(format!("seed={seed}"));
        }
        if let Some(mode) = &self.mode {
            overrides.push(format!("mode={mode}"));
        }
        if let Some(w) = self.workers {
            overrides.push(format!("workers={w}"));
        }
        if let Some(steps) = self.steps {
            overrides.push(format!("total_steps={steps}"));
        }
        overrides.extend_from_slice(extra);
        let preset = self.preset.as_deref().unwrap_or(default_preset);
        Ok(parse_config(preset, self.config.as_deref(), &overrides)?)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Markdown,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Run record CSV path; final parameters go next to it with a
    /// `.params` extension. Without it the record goes to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use the single-lane reference schedule instead of worker threads.
    #[arg(long)]
    reference: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, value_enum, default_value = "markdown")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Parameter file written by `train`.
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args)]
struct ScoreArgs {
    /// Score CSV with columns name,random,human,dqn,ours; defaults to the
    /// bundled 49-game table.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "markdown")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Costs in microseconds: t_env,t_inf,batch_row,t_train,contention_slope.
    /// Measured on this machine when omitted.
    #[arg(long, value_name = "LIST")]
    model: Option<String>,
    /// Timings per measured cost.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, value_enum, default_value = "markdown")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, content).with_context(|| format!("writing {}", path.display())),
        None => {
            io::stdout().write_all(content.as_bytes())?;
            Ok(())
        }
    }
}

fn header(pairs: &[(String, String)], format: Format) -> String {
    let body: String = pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
    match format {
        Format::Csv => body.lines().map(|l| format!("# {l}\n")).collect(),
        Format::Markdown => format!("Configuration\n\n```\n{body}```\n\n"),
    }
}

fn train(args: TrainArgs) -> Result<()> {
    let cfg = args.config.resolve("desk", &[])?;
    let record = if args.reference {
        sequential_reference(&cfg.hp)?
    } else {
        run(&cfg.hp)?
    };
    let csv = record.to_csv();
    match &args.out {
        Some(path) => {
            emit(Some(path), &csv)?;
            let params_path = path.with_extension("params");
            let file = File::create(&params_path).with_context(|| format!("creating {}", params_path.display()))?;
            let mut w = BufWriter::new(file);
            record.final_theta.write_to(&mut w)?;
            w.flush()?;
        }
        None => emit(None, &csv)?,
    }
    let best = record
        .best_eval()
        .map_or_else(|| "none".to_string(), |b| format!("{:.3} at step {}", b.mean, b.step));
    eprintln!(
        "trained {} steps in {:.2?} ({} episodes, best eval {best}, theta {:#018x})",
        cfg.hp.total_steps,
        record.duration,
        record.episode_returns.len(),
        record.final_theta_hash
    );
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let extra: Vec<String> = args.trials.map(|t| format!("trials={t}")).into_iter().collect();
    let cfg = args.config.resolve("bench", &extra)?;
    let table = ablation_grid(&cfg.hp, &cfg.harness.worker_counts, cfg.harness.trials)?;
    let body = match args.format {
        Format::Csv => render_csv(&table, cfg.harness.extrapolation)?,
        Format::Markdown => render_markdown(&table, cfg.harness.extrapolation)?,
    };
    emit(args.out.as_deref(), &(header(&cfg.describe(), args.format) + &body))
}

fn eval(args: EvalArgs) -> Result<()> {
    let mut extra = Vec::new();
    if let Some(n) = args.episodes {
        extra.push(format!("eval_episodes={n}"));
    }
    if let Some(e) = args.epsilon {
        extra.push(format!("eval_epsilon={e}"));
    }
    let cfg = args.config.resolve("desk", &extra)?;
    let file = File::open(&args.params).with_context(|| format!("opening {}", args.params.display()))?;
    let params = Parameters::read_from(BufReader::new(file))?;
    let hp = &cfg.hp;
    if params.input_dim() != hp.env.state_dim() || params.output_dim() != hp.env.action_count() {
        bail!(
            "parameter file is {}-in/{}-out but the {} environment needs {}/{}",
            params.input_dim(),
            params.output_dim(),
            hp.env.name(),
            hp.env.state_dim(),
            hp.env.action_count()
        );
    }
    if hp.eval_episodes == 0 {
        bail!("eval_episodes must be >= 1");
    }
    let mut env = hp.env.build();
    let stats = evaluate_policy(env.as_mut(), &params, hp.eval_epsilon, hp.eval_episodes, hp.seed)?;
    print!("{}", header(&cfg.describe(), Format::Csv));
    println!("episodes,epsilon,mean,std");
    println!("{},{},{},{}", hp.eval_episodes, hp.eval_epsilon, stats.mean, stats.std);
    Ok(())
}

fn score(args: ScoreArgs) -> Result<()> {
    let games = match &args.input {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            read_scores(BufReader::new(file))?
        }
        None => read_scores(APPENDIX_SCORES.as_bytes())?,
    };
    let report = score_report(&games)?;
    let source = args
        .input
        .as_ref()
        .map_or_else(|| "bundled".to_string(), |p| p.display().to_string());
    let pairs = vec![("input".to_string(), source)];
    let body = match args.format {
        Format::Csv => report.to_csv(),
        Format::Markdown => report.to_markdown(),
    };
    emit(args.out.as_deref(), &(header(&pairs, args.format) + &body))
}

fn parse_model(list: &str) -> Result<TimingModel> {
    let v: Vec<f64> = list
        .split(',')
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("bad number {s:?} in --model")))
        .collect::<Result<_>>()?;
    if v.len() != 5 {
        bail!("--model needs five values: t_env,t_inf,batch_row,t_train,contention_slope");
    }
    Ok(model_from_micros(v[0], v[1], v[2], v[3], v[4])?)
}

fn predict(args: PredictArgs) -> Result<()> {
    let cfg = args.config.resolve("bench", &[])?;
    let model = match &args.model {
        Some(list) => parse_model(list)?,
        None => fit_timing_model(&cfg.hp, args.samples)?,
    };
    let mut table = RuntimeTable::default();
    let mut epochs = Vec::new();
    for hp in ablation_cells(&cfg.hp, &cfg.harness.worker_counts) {
        hp.validate()?;
        epochs.push((hp.mode(), hp.workers, predict_runtime(&model, &hp)?));
        table
            .cells
            .push(RuntimeStats::from_trials(hp.mode(), hp.workers, vec![predict_run(&model, &hp)?]));
    }
    let mut pairs = cfg.describe();
    let us = |s: f64| s * 1e6;
    pairs.push((
        "model_us".into(),
        format!(
            "t_env={:.3},t_inf={:.3},batch_row={:.3},t_train={:.3},contention_slope={:.4}",
            us(model.t_env),
            us(model.t_inf),
            us(model.batch_row),
            us(model.t_train),
            model.contention_slope
        ),
    ));
    let mut body = match args.format {
        Format::Csv => render_csv(&table, 1.0)?,
        Format::Markdown => render_markdown(&table, 1.0)?,
    };
    body.push_str(match args.format {
        Format::Csv => "# epoch_seconds\n",
        Format::Markdown => "\nPredicted seconds per epoch\n\n",
    });
    for (mode, w, secs) in epochs {
        body.push_str(&match args.format {
            Format::Csv => format!("# {w},{mode},{secs:.6}\n"),
            Format::Markdown => format!("- {mode}/W={w}: {secs:.6}\n"),
        });
    }
    emit(args.out.as_deref(), &(header(&pairs, args.format) + &body))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let outcome = match Cli::parse().command {
        Command::Train(a) => train(a),
        Command::Bench(a) => bench(a),
        Command::Eval(a) => eval(a),
        Command::Score(a) => score(a),
        Command::Predict(a) => predict(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
