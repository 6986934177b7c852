//! Experience replay: a bounded FIFO store with uniform sampling, plus the
//! per-sampler buffers that hold fresh experience until the next epoch
//! barrier.

use std::io::{Read, Write};

use rand::Rng;

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::rng::StreamRng;

const DUMP_MAGIC: &[u8; 8] = b"FDQNREP1";

/// One experience tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
}

/// Ring buffer of transitions. Iteration is oldest-first.
///
/// `version` increments on every insertion; a reader that sees the same
/// version before and after its work knows the store did not change.
#[derive(Debug, Clone)]
pub struct ReplayMemory {
    capacity: usize,
    items: Vec<Transition>,
    cursor: usize,
    version: u64,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay capacity must be >= 1".into()));
        }
        Ok(Self {
            capacity,
            items: Vec::new(),
            cursor: 0,
            version: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    /// Append, evicting the oldest transition once full.
    pub fn push(&mut self, t: Transition) {
        debug_assert_eq!(t.state.len(), t.next_state.len());
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.cursor] = t;
            self.cursor = (self.cursor + 1) % self.capacity;
        }
        self.version += 1;
    }

    /// `i`-th oldest stored transition.
    pub fn get(&self, i: usize) -> Option<&Transition> {
        if i >= self.items.len() {
            return None;
        }
        Some(&self.items[(self.cursor + i) % self.items.len()])
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> + '_ {
        (0..self.items.len()).map(move |i| &self.items[(self.cursor + i) % self.items.len()])
    }

    /// `batch_size` uniform draws with replacement, consuming only `rng`.
    pub fn sample(&self, batch_size: usize, rng: &mut StreamRng) -> Result<Vec<&Transition>> {
        if self.items.is_empty() {
            return Err(Error::EmptyMemory);
        }
        let n = self.items.len();
        Ok((0..batch_size)
            .map(|_| self.get(rng.gen_range(0..n)).expect("index in range"))
            .collect())
    }

    /// Insert `n` transitions collected with uniformly random actions,
    /// resetting the environment at episode ends.
    pub fn prepopulate(&mut self, env: &mut dyn Environment, n: usize, rng: &mut StreamRng) -> Result<()> {
        if n > self.capacity {
            return Err(Error::PrepopulationTooLarge {
                requested: n,
                capacity: self.capacity,
            });
        }
        if n == 0 {
            return Ok(());
        }
        let actions = env.action_count();
        let mut state = env.reset(rng);
        for _ in 0..n {
            let action = rng.gen_range(0..actions);
            let step = env.step(action, rng)?;
            let terminal = step.terminal;
            self.push(Transition {
                state: std::mem::take(&mut state),
                action,
                reward: step.reward,
                next_state: step.state.clone(),
                terminal,
            });
            state = if terminal { env.reset(rng) } else { step.state };
        }
        Ok(())
    }

    /// Move every buffer's contents into the store: ascending owner id,
    /// chronological within a buffer. Buffers are left empty.
    pub fn flush(&mut self, buffers: &mut [SampleBuffer]) {
        let mut order: Vec<usize> = (0..buffers.len()).collect();
        order.sort_by_key(|&i| buffers[i].owner);
        for i in order {
            for t in buffers[i].items.drain(..) {
                self.push(t);
            }
        }
    }

    /// Debug dump. Layout, all little-endian: 8-byte magic `FDQNREP1`,
    /// u64 count, u64 state_dim, then per transition (oldest first) as f64:
    /// state[state_dim], action, reward, next_state[state_dim], terminal (0 or 1).
    pub fn dump<W: Write>(&self, mut w: W) -> Result<()> {
        let dim = self.items.first().map_or(0, |t| t.state.len());
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&(self.items.len() as u64).to_le_bytes())?;
        w.write_all(&(dim as u64).to_le_bytes())?;
        for t in self.iter() {
            for v in t.state.iter().copied().chain([t.action as f64, t.reward]).chain(t.next_state.iter().copied()) {
                w.write_all(&v.to_le_bytes())?;
            }
            w.write_all(&(if t.terminal { 1.0f64 } else { 0.0 }).to_le_bytes())?;
        }
        Ok(())
    }

    /// Read a dump back as an ordered list of transitions.
    pub fn read_dump<R: Read>(mut r: R) -> Result<Vec<Transition>> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != DUMP_MAGIC {
            return Err(Error::Format("not a replay dump (bad magic)".into()));
        }
        let count = read_u64(&mut r)? as usize;
        let dim = read_u64(&mut r)? as usize;
        let mut out = Vec::with_capacity(count.min(1 << 20));
        for _ in 0..count {
            let state = (0..dim).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
            let action = read_f64(&mut r)?;
            let reward = read_f64(&mut r)?;
            let next_state = (0..dim).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
            let terminal = read_f64(&mut r)? != 0.0;
            if action < 0.0 || action.fract() != 0.0 {
                return Err(Error::Format(format!("bad action value {action}")));
            }
            out.push(Transition {
                state,
                action: action as usize,
                reward,
                next_state,
                terminal,
            });
        }
        Ok(out)
    }
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    Ok(u64::from_le_bytes(word))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

/// Experience gathered by one sampler since the last flush.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleBuffer {
    pub owner: usize,
    items: Vec<Transition>,
}

impl SampleBuffer {
    pub fn new(owner: usize) -> Self {
        Self {
            owner,
            items: Vec::new(),
        }
    }

    pub fn push(&mut self, t: Transition) {
        self.items.push(t);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Transition] {
        &self.items
    }
}
