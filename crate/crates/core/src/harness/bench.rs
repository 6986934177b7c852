//! Wall-clock ablation over modes and worker counts.

use std::fmt::Write as _;

use crate::agent::{HyperParams, Mode};
use crate::error::{Error, Result};
use crate::executor::run;
use crate::rng::{stream_seed, Role};

use super::scores::{round1, round2};
use super::table::markdown;

/// Runtime of one variant over repeated trials, in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeStats {
    pub mode: Mode,
    pub workers: usize,
    pub trials: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (n - 1); 0 when only one trial ran.
    pub std: f64,
    /// True when `std` is a placeholder because n = 1.
    pub single_trial: bool,
}

impl RuntimeStats {
    /// Panics if `trials` is empty.
    pub fn from_trials(mode: Mode, workers: usize, trials: Vec<f64>) -> Self {
        assert!(!trials.is_empty(), "at least one trial");
        let n = trials.len() as f64;
        let mean = trials.iter().sum::<f64>() / n;
        let single_trial = trials.len() == 1;
        let std = if single_trial {
            0.0
        } else {
            (trials.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Self {
            mode,
            workers,
            trials,
            mean,
            std,
            single_trial,
        }
    }

    pub fn label(&self) -> String {
        format!("{}/W={}", self.mode, self.workers)
    }
}

/// Run `hp` once per trial, each with its own derived seed, strictly one
/// after another.
pub fn bench_variant(hp: &HyperParams, trials: usize) -> Result<RuntimeStats> {
    if trials == 0 {
        return Err(Error::Config("trials must be >= 1".into()));
    }
    let mut times = Vec::with_capacity(trials);
    for i in 0..trials {
        let mut trial = hp.clone();
        trial.seed = stream_seed(hp.seed, Role::Trial, i as u64);
        times.push(run(&trial)?.duration.as_secs_f64());
    }
    Ok(RuntimeStats::from_trials(hp.mode(), hp.workers, times))
}

/// Legal (workers, mode) cells in table order: ascending worker count, then
/// standard, concurrent, synchronized, both. Synchronized variants need at
/// least two workers.
pub fn ablation_cells(base: &HyperParams, worker_counts: &[usize]) -> Vec<HyperParams> {
    let mut counts = worker_counts.to_vec();
    counts.sort_unstable();
    counts.dedup();
    let mut cells = Vec::new();
    for w in counts {
        for mode in Mode::ALL {
            if mode.synchronized() && w < 2 {
                continue;
            }
            let mut hp = base.clone();
            hp.workers = w;
            hp.set_mode(mode);
            cells.push(hp);
        }
    }
    cells
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RuntimeTable {
    pub cells: Vec<RuntimeStats>,
}

impl RuntimeTable {
    pub fn get(&self, mode: Mode, workers: usize) -> Option<&RuntimeStats> {
        self.cells.iter().find(|c| c.mode == mode && c.workers == workers)
    }

    pub fn baseline(&self) -> Result<&RuntimeStats> {
        self.get(Mode::Standard, 1).ok_or(Error::MissingBaseline)
    }

    fn worker_counts(&self) -> Vec<usize> {
        let mut w: Vec<usize> = self.cells.iter().map(|c| c.workers).collect();
        w.sort_unstable();
        w.dedup();
        w
    }
}

/// Benchmark every legal cell, sequentially, `trials` times each.
pub fn ablation_grid(base: &HyperParams, worker_counts: &[usize], trials: usize) -> Result<RuntimeTable> {
    let mut table = RuntimeTable::default();
    for hp in ablation_cells(base, worker_counts) {
        let stats = bench_variant(&hp, trials)?;
        log::info!("{}: {:.3} s +/- {:.3}", stats.label(), stats.mean, stats.std);
        table.cells.push(stats);
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivedKind {
    Percent,
    Factor,
}

/// Per-cell values derived from a runtime table, rounded for display.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedTable {
    pub kind: DerivedKind,
    pub cells: Vec<(Mode, usize, f64)>,
}

impl DerivedTable {
    pub fn get(&self, mode: Mode, workers: usize) -> Option<f64> {
        self.cells
            .iter()
            .find(|(m, w, _)| *m == mode && *w == workers)
            .map(|c| c.2)
    }

    fn show(&self, v: f64) -> String {
        match self.kind {
            DerivedKind::Percent => format!("{v:.1}%"),
            DerivedKind::Factor => format!("{v:.2}x"),
        }
    }
}

/// Each mean as a percentage of the baseline mean, to 0.1.
pub fn to_percent(table: &RuntimeTable) -> Result<DerivedTable> {
    let base = table.baseline()?.mean;
    Ok(DerivedTable {
        kind: DerivedKind::Percent,
        cells: table
            .cells
            .iter()
            .map(|c| (c.mode, c.workers, round1(100.0 * c.mean / base)))
            .collect(),
    })
}

/// Speedup of each cell over the baseline, to 0.01.
pub fn to_factor(table: &RuntimeTable) -> Result<DerivedTable> {
    let base = table.baseline()?.mean;
    Ok(DerivedTable {
        kind: DerivedKind::Factor,
        cells: table
            .cells
            .iter()
            .map(|c| (c.mode, c.workers, round2(base / c.mean)))
            .collect(),
    })
}

/// Seconds scaled by `extrapolation` and expressed in hours, to 0.01.
pub fn hours_equivalent(seconds: f64, extrapolation: f64) -> f64 {
    round2(seconds * extrapolation / 3600.0)
}

fn grid<F: Fn(usize, Mode) -> Option<String>>(workers: &[usize], cell: F) -> String {
    let mut header = vec!["Workers".to_string()];
    header.extend(Mode::ALL.iter().map(|m| m.to_string()));
    let rows: Vec<Vec<String>> = workers
        .iter()
        .map(|&w| {
            let mut r = vec![w.to_string()];
            r.extend(Mode::ALL.iter().map(|&m| cell(w, m).unwrap_or_else(|| "---".into())));
            r
        })
        .collect();
    markdown(&header, &rows)
}

/// Markdown rendering of the measured table, its hours-equivalent, the
/// percentage table and the speedup table.
pub fn render_markdown(table: &RuntimeTable, extrapolation: f64) -> Result<String> {
    let workers = table.worker_counts();
    let percent = to_percent(table)?;
    let factor = to_factor(table)?;
    let mut out = String::new();
    out.push_str("Measured runtime (seconds, mean +/- std)\n\n");
    out.push_str(&grid(&workers, |w, m| {
        table.get(m, w).map(|c| {
            let flag = if c.single_trial { " (n=1)" } else { "" };
            format!("{:.3} +/- {:.3}{flag}", c.mean, c.std)
        })
    }));
    let _ = write!(out, "\nHours-equivalent (x{extrapolation})\n\n");
    out.push_str(&grid(&workers, |w, m| {
        table.get(m, w).map(|c| {
            format!(
                "{:.2} +/- {:.2}",
                hours_equivalent(c.mean, extrapolation),
                hours_equivalent(c.std, extrapolation)
            )
        })
    }));
    for (title, t) in [("Percent of baseline runtime", &percent), ("Speedup over baseline", &factor)] {
        let _ = write!(out, "\n{title}\n\n");
        out.push_str(&grid(&workers, |w, m| t.get(m, w).map(|v| t.show(v))));
    }
    Ok(out)
}

/// Long-format CSV with one line per cell.
pub fn render_csv(table: &RuntimeTable, extrapolation: f64) -> Result<String> {
    let percent = to_percent(table)?;
    let factor = to_factor(table)?;
    let mut out =
        String::from("workers,mode,trials,mean_s,std_s,single_trial,hours_equivalent,percent,factor\n");
    for c in &table.cells {
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{:.6},{},{:.2},{:.1},{:.2}",
            c.workers,
            c.mode,
            c.trials.len(),
            c.mean,
            c.std,
            c.single_trial,
            hours_equivalent(c.mean, extrapolation),
            percent.get(c.mode, c.workers).unwrap_or(f64::NAN),
            factor.get(c.mode, c.workers).unwrap_or(f64::NAN),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourteen_cells() {
        let base = HyperParams::desk();
        let cells = ablation_cells(&base, &[8, 1, 4, 2]);
        assert_eq!(cells.len(), 14);
        assert_eq!(ablation_cells(&base, &[1]).len(), 2);
        let order: Vec<(usize, Mode)> = cells.iter().map(|h| (h.workers, h.mode())).collect();
        assert_eq!(order[0], (1, Mode::Standard));
        assert_eq!(order[1], (1, Mode::Concurrent));
        assert_eq!(order[2], (2, Mode::Standard));
        assert_eq!(order[13], (8, Mode::Both));
        for hp in &cells {
            let mut same = hp.clone();
            same.workers = base.workers;
            same.set_mode(base.mode());
            assert_eq!(same, base);
        }
    }

    #[test]
    fn stats_conventions() {
        let one = RuntimeStats::from_trials(Mode::Standard, 1, vec![3.0]);
        assert!(one.single_trial);
        assert_eq!(one.std, 0.0);
        let s = RuntimeStats::from_trials(Mode::Standard, 1, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(s.mean, 3.0);
        assert!((s.std - 2.5f64.sqrt()).abs() < 1e-15);
        let again = RuntimeStats::from_trials(Mode::Standard, 1, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(s, again);
    }

    #[test]
    fn missing_baseline() {
        let table = RuntimeTable {
            cells: vec![RuntimeStats::from_trials(Mode::Concurrent, 1, vec![1.0])],
        };
        assert!(matches!(to_percent(&table), Err(Error::MissingBaseline)));
        assert!(matches!(to_factor(&table), Err(Error::MissingBaseline)));
    }

    #[test]
    fn hours() {
        assert_eq!(hours_equivalent(1806.0, 50.0), 25.08);
    }
}
