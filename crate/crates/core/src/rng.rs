//! Seeded random streams.
//!
//! Every stochastic actor in a run (prepopulation, each sampler, the
//! trainer, each evaluation, each benchmark trial) draws from its own
//! ChaCha8 stream. A stream seed is the master seed mixed with a role tag
//! and a worker index, so a parallel schedule and a single-lane schedule
//! consume exactly the same numbers per actor.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Who owns a random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Init,
    Prepopulate,
    Sampler,
    Trainer,
    Evaluator,
    Trial,
    Bench,
}

impl Role {
    fn tag(self) -> u64 {
        match self {
            Role::Init => 0x696e_6974,
            Role::Prepopulate => 0x7072_6570,
            Role::Sampler => 0x7361_6d70,
            Role::Trainer => 0x7472_6169,
            Role::Evaluator => 0x6576_616c,
            Role::Trial => 0x7472_6961,
            Role::Bench => 0x6265_6e63,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for the `index`-th stream of `role` under `master`.
pub fn stream_seed(master: u64, role: Role, index: u64) -> u64 {
    let a = splitmix64(master);
    let b = splitmix64(a ^ role.tag());
    splitmix64(b ^ index.wrapping_mul(0xd6e8_feb8_6659_fd93))
}

pub fn stream(master: u64, role: Role, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(stream_seed(master, role, index))
}
