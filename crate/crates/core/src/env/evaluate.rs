use rand::SeedableRng;

use crate::agent::select_action;
use crate::error::{Error, Result};
use crate::nn::{forward_row, Parameters};
use crate::rng::StreamRng;

use super::Environment;

/// Mean and population standard deviation of undiscounted episode returns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalStats {
    pub mean: f64,
    pub std: f64,
}

/// Run `episodes` full episodes of the epsilon-greedy policy derived from
/// `params`, drawing all randomness from a stream seeded with `seed`.
pub fn evaluate_policy(
    env: &mut dyn Environment,
    params: &Parameters,
    epsilon: f64,
    episodes: usize,
    seed: u64,
) -> Result<EvalStats> {
    if episodes == 0 {
        return Err(Error::Config("evaluation needs at least one episode".into()));
    }
    let mut rng = StreamRng::seed_from_u64(seed);
    let mut returns = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut state = env.reset(&mut rng);
        let mut total = 0.0;
        loop {
            let q = forward_row(params, &state)?;
            let action = select_action(&q, epsilon, &mut rng)?;
            let step = env.step(action, &mut rng)?;
            total += step.reward;
            if step.terminal {
                break;
            }
            state = step.state;
        }
        returns.push(total);
    }
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let var = returns.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    Ok(EvalStats { mean, std: var.sqrt() })
}
