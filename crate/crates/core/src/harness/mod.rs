//! Benchmark and analysis: the runtime ablation grid with its derived
//! percentage and speedup tables, the analytical timing model, and
//! human-normalized score reports.

mod bench;
mod scores;
mod table;
mod timing;

pub use bench::{
    ablation_cells, ablation_grid, bench_variant, hours_equivalent, render_csv, render_markdown, to_factor,
    to_percent, DerivedKind, DerivedTable, RuntimeStats, RuntimeTable,
};
pub use scores::{
    normalize_score, read_scores, round1, round2, score_report, Agent, GameScores, Mismatch, ScoreLine,
    ScoreReport, ScoreRow, APPENDIX_SCORES, HUMAN_LEVEL, PRINT_TOLERANCE,
};
pub use table::{csv_field, markdown};
pub use timing::{fit_timing_model, model_from_micros, predict_run, predict_runtime, TimingModel};
