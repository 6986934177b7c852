use std::io;

use thiserror::Error;

/// Errors raised across the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid action index {action} (action count {count})")]
    InvalidAction { action: usize, count: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid network layout: {0}")]
    Layout(String),

    #[error("replay memory is empty")]
    EmptyMemory,

    #[error("prepopulation of {requested} exceeds replay capacity {capacity}")]
    PrepopulationTooLarge { requested: usize, capacity: usize },

    #[error("step called on a terminated episode; reset first")]
    StepAfterTerminal,

    #[error("position ({x}, {y}) is off the grid")]
    OffGrid { x: i64, y: i64 },

    #[error("empty Q-value row")]
    EmptyRow,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing baseline cell (standard, W=1)")]
    MissingBaseline,

    #[error("human and random scores coincide ({0}); normalization undefined")]
    DegenerateScale(f64),

    #[error("malformed file: {0}")]
    Format(String),

    #[error("worker failed: {0}")]
    Worker(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
