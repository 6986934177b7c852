//! 5x5 gridworld: start in one corner, reward 1 for entering the opposite one.

use crate::error::{Error, Result};
use crate::rng::StreamRng;

use super::{Environment, StepResult};

pub const GRID_SIZE: usize = 5;
pub const GRID_STEP_CAP: u32 = 50;

const START: Position = Position { x: 0, y: 0 };
const GOAL: Position = Position { x: 4, y: 4 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Position {
    pub x: i64,
    pub y: i64,
}

impl Position {
    pub fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    fn on_grid(self) -> bool {
        let n = GRID_SIZE as i64;
        (0..n).contains(&self.x) && (0..n).contains(&self.y)
    }
}

/// Action indices: up (+y), down (-y), left (-x), right (+x).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridAction {
    Up = 0,
    Down = 1,
    Left = 2,
    Right = 3,
}

impl GridAction {
    pub const ALL: [GridAction; 4] = [GridAction::Up, GridAction::Down, GridAction::Left, GridAction::Right];

    pub fn from_index(i: usize) -> Result<Self> {
        Self::ALL
            .get(i)
            .copied()
            .ok_or(Error::InvalidAction { action: i, count: 4 })
    }
}

/// One-hot encoding of a cell, index `x + 5 y`.
pub fn encode_state(pos: Position) -> Result<Vec<f64>> {
    if !pos.on_grid() {
        return Err(Error::OffGrid { x: pos.x, y: pos.y });
    }
    let mut v = vec![0.0; GRID_SIZE * GRID_SIZE];
    v[pos.x as usize + GRID_SIZE * pos.y as usize] = 1.0;
    Ok(v)
}

/// Deterministic move with wall clamping. Returns the new cell, the reward
/// (1.0 exactly when entering the goal) and whether the goal was reached.
pub fn gridworld_step(pos: Position, action: GridAction) -> (Position, f64, bool) {
    let (dx, dy) = match action {
        GridAction::Up => (0, 1),
        GridAction::Down => (0, -1),
        GridAction::Left => (-1, 0),
        GridAction::Right => (1, 0),
    };
    let moved = Position::new(pos.x + dx, pos.y + dy);
    let next = if moved.on_grid() { moved } else { pos };
    if next == GOAL && pos != GOAL {
        (next, 1.0, true)
    } else {
        (next, 0.0, false)
    }
}

#[derive(Debug, Clone)]
pub struct GridWorld {
    pos: Position,
    steps: u32,
    done: bool,
}

impl Default for GridWorld {
    fn default() -> Self {
        Self::new()
    }
}

impl GridWorld {
    pub fn new() -> Self {
        Self {
            pos: START,
            steps: 0,
            done: false,
        }
    }

    pub fn position(&self) -> Position {
        self.pos
    }
}

impl Environment for GridWorld {
    fn state_dim(&self) -> usize {
        GRID_SIZE * GRID_SIZE
    }

    fn action_count(&self) -> usize {
        4
    }

    fn reset(&mut self, _rng: &mut StreamRng) -> Vec<f64> {
        *self = Self::new();
        encode_state(self.pos).expect("start is on the grid")
    }

    fn step(&mut self, action: usize, _rng: &mut StreamRng) -> Result<StepResult> {
        if self.done {
            return Err(Error::StepAfterTerminal);
        }
        let action = GridAction::from_index(action)?;
        let (next, reward, at_goal) = gridworld_step(self.pos, action);
        self.pos = next;
        self.steps += 1;
        self.done = at_goal || self.steps >= GRID_STEP_CAP;
        Ok(StepResult {
            state: encode_state(next)?,
            reward,
            terminal: self.done,
        })
    }
}
