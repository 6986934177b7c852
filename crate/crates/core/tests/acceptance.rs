//! Acceptance criteria, one test per criterion. Each prints a single
//! `criterion N: PASS|FAIL ...` line to stderr.

mod common;

use std::io::Write;
use std::sync::{Mutex, MutexGuard};
use std::time::Instant;

use fastdqn::agent::{HyperParams, Mode};
use fastdqn::config::bench_preset;
use fastdqn::executor::{run, sequential_reference, transaction_count};
use fastdqn::harness::{
    ablation_grid, fit_timing_model, predict_run, read_scores, round1, score_report, to_factor, to_percent,
    RuntimeStats, RuntimeTable, APPENDIX_SCORES,
};
use fastdqn::nn::{rmsprop_step, Gradients, OptConfig, OptState, Parameters};

/// Criteria run one at a time so wall-clock measurements are not shared
/// with other work in this process.
static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

/// Written straight to the process's stderr so the lines appear in
/// `cargo test` output even for passing tests.
fn say(line: &str) {
    let _ = writeln!(std::io::stderr().lock(), "{line}");
}

fn report(n: u32, pass: bool, detail: &str, started: Instant) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    say(&format!("criterion {n}: {verdict} {detail} [{:.1?}]", started.elapsed()));
}

#[test]
fn criterion_01_oracle_equivalence() {
    let _serial = serial();
    let started = Instant::now();
    let mut details = Vec::new();
    let mut pass = true;
    for w in [2, 4, 8] {
        let mut hp = HyperParams::desk();
        hp.set_mode(Mode::Both);
        hp.workers = w;
        if !hp.target_update_period.is_multiple_of(w) {
            hp.target_update_period = 1_000;
        }
        hp.total_steps = 20 * hp.target_update_period;
        hp.seed = 2024;
        let threaded = run(&hp).unwrap();
        let reference = sequential_reference(&hp).unwrap();
        let same = threaded.epoch_hashes == reference.epoch_hashes && threaded.epoch_hashes.len() == 20;
        pass &= same;
        details.push(format!("W={w}: {} epochs {}", threaded.epoch_hashes.len(), if same { "match" } else { "DIFFER" }));
    }
    report(1, pass, &details.join(", "), started);
    assert!(pass);
}

#[test]
fn criterion_02_determinism() {
    let _serial = serial();
    let started = Instant::now();
    let mut pass = true;
    let mut details = Vec::new();
    for (mode, w) in [(Mode::Both, 4), (Mode::Concurrent, 4), (Mode::Synchronized, 4), (Mode::Standard, 1), (Mode::Concurrent, 1)] {
        let mut hp = HyperParams::desk();
        hp.set_mode(mode);
        hp.workers = w;
        hp.total_steps = 10_000;
        hp.seed = 77;
        let a = run(&hp).unwrap().to_csv();
        let b = run(&hp).unwrap().to_csv();
        let same = a.as_bytes() == b.as_bytes();
        pass &= same;
        details.push(format!("{mode}/W={w} {}", if same { "identical" } else { "DIFFER" }));
    }
    report(2, pass, &details.join(", "), started);
    assert!(pass);
}

#[test]
fn criterion_03_gradient_correctness() {
    let _serial = serial();
    let started = Instant::now();
    let nets = 25;
    let worst = (0..nets)
        .map(|seed| common::max_gradient_error(&common::gradient_case(1_000 + seed, 1e-3), 1e-5, 1e-6))
        .fold(0.0, f64::max);
    let pass = worst < 1e-5;
    report(3, pass, &format!("{nets} nets, max relative error {worst:.2e} (< 1e-5)"), started);
    assert!(pass);
}

#[test]
fn criterion_04_optimizer_correctness() {
    let _serial = serial();
    let started = Instant::now();
    let cfg = OptConfig::default();
    let mut params = Parameters::from_flat(&[1, 1], vec![0.5, 0.0]).unwrap();
    let mut opt = OptState::new(&params);
    let grad = Gradients::from_flat(&params, vec![1.0, 0.0]).unwrap();
    rmsprop_step(&mut opt, &cfg, &mut params, &grad).unwrap();
    let expected = 0.5 - 2.5e-4 / 0.0575f64.sqrt();
    let err = (params.as_slice()[0] - expected).abs();
    let moments = (opt.mean[0] - 0.05).abs().max((opt.mean_square[0] - 0.05).abs());
    let pass = err <= 1e-12 && moments <= 1e-12 && params.as_slice()[1] == 0.0;
    report(4, pass, &format!("m=0.05 v=0.05, |theta - expected| = {err:.1e}"), started);
    assert!(pass);
}

#[test]
fn criterion_05_learning() {
    let _serial = serial();
    let started = Instant::now();
    let mut solved = 0;
    let mut details = Vec::new();
    for seed in 0..5 {
        let mut hp = HyperParams::desk();
        hp.set_mode(Mode::Both);
        hp.workers = 4;
        hp.seed = seed;
        hp.eval_epsilon = 0.0;
        let rec = run(&hp).unwrap();
        let first = rec.evaluations.iter().find(|e| e.mean == 1.0).map(|e| e.step);
        if first.is_some() {
            solved += 1;
        }
        details.push(format!("seed {seed}: {}", first.map_or("never".into(), |s| format!("step {s}"))));
    }
    let pass = solved >= 4;
    report(5, pass, &format!("{solved}/5 seeds reach mean return 1.0 ({})", details.join(", ")), started);
    assert!(pass);
}

/// Measured grid on the synthetic environment. The qualitative checks only
/// make sense when samplers, trainer and device can actually run in
/// parallel, so the verdict is binding only on machines with at least 8
/// hardware threads; elsewhere the measurements are still taken and printed
/// and the line reports FAIL with the unmet precondition.
#[test]
fn criterion_06_timing_ablation() {
    let _serial = serial();
    let started = Instant::now();
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let base = bench_preset();
    let counts = [1, 2, 4, 8];
    let table = ablation_grid(&base, &counts, 5).unwrap();
    let mean = |m: Mode, w: usize| table.get(m, w).map(|c| c.mean);
    let slack = 1.05;
    let mut violations = Vec::new();
    for w in counts {
        let std = mean(Mode::Standard, w).unwrap();
        let conc = mean(Mode::Concurrent, w).unwrap();
        if conc > slack * std {
            violations.push(format!("W={w}: concurrent {conc:.3}s > standard {std:.3}s"));
        }
        if let (Some(sync), Some(both)) = (mean(Mode::Synchronized, w), mean(Mode::Both, w)) {
            for (lo, lo_name, hi, hi_name) in [
                (both, "both", conc, "concurrent"),
                (both, "both", sync, "synchronized"),
                (sync, "synchronized", std, "standard"),
            ] {
                if lo > slack * hi {
                    violations.push(format!("W={w}: {lo_name} {lo:.3}s > {hi_name} {hi:.3}s"));
                }
            }
        }
    }
    let factor = to_factor(&table).unwrap();
    let speedup = factor.get(Mode::Both, 8).unwrap();
    let percent = to_percent(&table).unwrap();
    for c in &table.cells {
        say(&format!(
            "  {:>14} W={}: {:.3}s +/- {:.3}s  {:.1}%  {:.2}x",
            c.mode.to_string(),
            c.workers,
            c.mean,
            c.std,
            percent.get(c.mode, c.workers).unwrap(),
            factor.get(c.mode, c.workers).unwrap()
        ));
    }

    let model = fit_timing_model(&base, 200).unwrap();
    let base_pred = predict_run(&model, &base).unwrap();
    let base_meas = table.baseline().unwrap().mean;
    let worst_model = table
        .cells
        .iter()
        .map(|c| {
            let mut hp = base.clone();
            hp.workers = c.workers;
            hp.set_mode(c.mode);
            let predicted = predict_run(&model, &hp).unwrap() / base_pred;
            let measured = c.mean / base_meas;
            (predicted / measured - 1.0).abs()
        })
        .fold(0.0, f64::max);
    say(&format!(
        "  timing model fit: t_env={:.1}us t_inf={:.1}us batch_row={:.1}us t_train={:.1}us slope={:.3}; worst ratio error {:.1}% (target 25%)",
        model.t_env * 1e6,
        model.t_inf * 1e6,
        model.batch_row * 1e6,
        model.t_train * 1e6,
        model.contention_slope,
        worst_model * 100.0
    ));

    let ordered = violations.is_empty();
    let fast = speedup >= 1.8;
    let precondition = threads >= 8;
    let pass = precondition && ordered && fast;
    let mut detail = format!(
        "monotone pattern {}, speedup(both, W=8) = {speedup:.2}x (>= 1.8x), {threads} hardware threads",
        if ordered { "holds".to_string() } else { format!("violated: {}", violations.join("; ")) }
    );
    if !precondition {
        detail.push_str(" (precondition unmet: needs >= 8 hardware threads; verdict not binding on this machine)");
    }
    report(6, pass, &detail, started);
    if precondition {
        assert!(pass);
    }
}

#[test]
fn criterion_07_transaction_reduction() {
    let _serial = serial();
    let started = Instant::now();
    let mut pass = true;
    let mut details = Vec::new();
    for w in [2, 4, 8] {
        for concurrent in [true, false] {
            let mut hp = HyperParams::desk();
            hp.target_update_period = 400;
            hp.total_steps = 4_000;
            hp.eval_period = 0;
            hp.workers = w;
            hp.concurrent = concurrent;
            hp.synchronized = true;
            let sync = run(&hp).unwrap().counters.inference_calls;
            hp.synchronized = false;
            let asynchronous = run(&hp).unwrap().counters.inference_calls;
            let ok = sync * w as u64 == asynchronous
                && asynchronous == hp.total_steps as u64
                && transaction_count(&hp, hp.total_steps as u64).inference == asynchronous;
            pass &= ok;
            details.push(format!("W={w}{}: {sync} vs {asynchronous}", if concurrent { " conc" } else { "" }));
        }
    }
    report(7, pass, &format!("sync = async / W ({})", details.join(", ")), started);
    assert!(pass);
}

#[test]
fn criterion_08_score_math() {
    let _serial = serial();
    let started = Instant::now();
    let games = read_scores(APPENDIX_SCORES.as_bytes()).unwrap();
    let report_ = score_report(&games).unwrap();
    let printed = games.iter().filter(|g| g.dqn_norm.is_some()).count()
        + games.iter().filter(|g| g.ours_norm.is_some()).count();
    let breakout = report_.lines.iter().find(|l| l.dqn.name == "Breakout").unwrap();
    let pass = games.len() == 49
        && printed == 98
        && report_.mismatches.is_empty()
        && round1(breakout.dqn.normalized) == 1327.2
        && report_.dqn_human_level == 29
        && report_.ours_human_level == 33;
    report(
        8,
        pass,
        &format!(
            "{} games, {} printed values within 0.05 pp ({} mismatches), Breakout DQN {:.1}%, >= 75%: DQN {} Ours {}",
            games.len(),
            printed,
            report_.mismatches.len(),
            breakout.dqn.normalized,
            report_.dqn_human_level,
            report_.ours_human_level
        ),
        started,
    );
    assert!(pass);
}

#[test]
fn criterion_09_table_derivations() {
    let _serial = serial();
    let started = Instant::now();
    // Measured means in hours, by worker count: standard, concurrent,
    // synchronized, both.
    let hours: [(usize, [Option<f64>; 4]); 4] = [
        (1, [Some(25.08), Some(20.64), None, None]),
        (2, [Some(19.10), Some(14.00), Some(19.32), Some(14.72)]),
        (4, [Some(16.84), Some(12.14), Some(15.74), Some(11.08)]),
        (8, [Some(16.92), Some(11.68), Some(14.60), Some(9.02)]),
    ];
    let percent_expected: [(usize, [Option<f64>; 4]); 4] = [
        (1, [Some(100.0), Some(82.3), None, None]),
        (2, [Some(76.2), Some(55.8), Some(77.0), Some(58.7)]),
        (4, [Some(67.1), Some(48.4), Some(62.8), Some(44.2)]),
        (8, [Some(67.5), Some(46.6), Some(58.2), Some(36.0)]),
    ];
    let factor_expected: [(usize, [Option<f64>; 4]); 4] = [
        (1, [Some(1.00), Some(1.22), None, None]),
        (2, [Some(1.31), Some(1.79), Some(1.30), Some(1.70)]),
        (4, [Some(1.49), Some(2.07), Some(1.59), Some(2.26)]),
        (8, [Some(1.48), Some(2.15), Some(1.72), Some(2.78)]),
    ];
    let mut table = RuntimeTable::default();
    for (w, row) in hours {
        for (mode, h) in Mode::ALL.into_iter().zip(row) {
            if let Some(h) = h {
                table.cells.push(RuntimeStats::from_trials(mode, w, vec![h]));
            }
        }
    }
    let percent = to_percent(&table).unwrap();
    let factor = to_factor(&table).unwrap();
    let mut wrong = Vec::new();
    let mut checked = 0;
    for (derived, expected) in [(&percent, &percent_expected), (&factor, &factor_expected)] {
        for (w, row) in expected {
            for (mode, e) in Mode::ALL.into_iter().zip(row) {
                let got = derived.get(mode, *w);
                checked += usize::from(e.is_some());
                if got != *e {
                    wrong.push(format!("{mode}/W={w}: {got:?} != {e:?}"));
                }
            }
        }
    }
    let pass = wrong.is_empty() && checked == 28;
    report(
        9,
        pass,
        &format!(
            "{checked} cells; both/W=8 {:.1}% {:.2}x, concurrent/W=1 {:.1}%, concurrent/W=8 {:.2}x{}",
            percent.get(Mode::Both, 8).unwrap(),
            factor.get(Mode::Both, 8).unwrap(),
            percent.get(Mode::Concurrent, 1).unwrap(),
            factor.get(Mode::Concurrent, 8).unwrap(),
            if wrong.is_empty() { String::new() } else { format!("; wrong: {}", wrong.join(", ")) }
        ),
        started,
    );
    assert!(pass);
}

#[test]
fn criterion_10_replay_freeze() {
    let _serial = serial();
    let started = Instant::now();
    let mut pass = true;
    let mut details = Vec::new();
    for (mode, w) in [(Mode::Both, 4), (Mode::Concurrent, 4), (Mode::Concurrent, 1), (Mode::Synchronized, 4), (Mode::Standard, 1)] {
        let mut hp = HyperParams::desk();
        hp.target_update_period = 40;
        hp.total_steps = 4_000;
        hp.eval_period = 0;
        hp.set_mode(mode);
        hp.workers = w;
        let rec = run(&hp).unwrap();
        let reference = sequential_reference(&hp).unwrap();
        let c = rec.counters;
        let ok = rec.epoch_hashes.len() == 100
            && c.freeze_violations == 0
            && reference.counters.freeze_violations == 0
            && c.minibatches == (hp.total_steps / hp.training_period) as u64;
        pass &= ok;
        details.push(format!("{mode}/W={w}: {} jobs, {} violations", c.train_jobs, c.freeze_violations));
    }
    report(10, pass, &format!("100 epochs each ({})", details.join(", ")), started);
    assert!(pass);
}
