//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use fastdqn::nn::{self, Parameters};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random dense net with a random batch whose hidden pre-activations all
/// stay at least `margin` away from the ReLU kink, so small perturbations
/// never cross it.
pub struct GradientCase {
    pub params: Parameters,
    pub states: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    pub targets: Vec<f64>,
}

fn pre_activations(params: &Parameters, state: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    let mut x = state.to_vec();
    for k in 0..params.layer_count() {
        let layer = params.layer(k);
        let z: Vec<f64> = (0..layer.outputs)
            .map(|o| {
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                row.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>() + layer.bias[o]
            })
            .collect();
        if k + 1 < params.layer_count() {
            out.extend(&z);
            x = z.iter().map(|v| v.max(0.0)).collect();
        }
    }
    out
}

pub fn gradient_case(seed: u64, margin: f64) -> GradientCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let depth = rng.gen_range(1..=3);
        let mut sizes = vec![rng.gen_range(1..=6)];
        for _ in 0..depth {
            sizes.push(rng.gen_range(1..=6));
        }
        let len: usize = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        let data: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let params = Parameters::from_flat(&sizes, data).unwrap();
        let batch = rng.gen_range(1..=5);
        let states: Vec<Vec<f64>> = (0..batch)
            .map(|_| (0..sizes[0]).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let clear = states
            .iter()
            .all(|s| pre_activations(&params, s).iter().all(|z| z.abs() > margin));
        if !clear {
            continue;
        }
        let outputs = *sizes.last().unwrap();
        let actions = (0..batch).map(|_| rng.gen_range(0..outputs)).collect();
        let targets = (0..batch).map(|_| rng.gen_range(-3.0..3.0)).collect();
        return GradientCase {
            params,
            states,
            actions,
            targets,
        };
    }
}

/// Largest relative error between the analytic gradient and central finite
/// differences of the loss, with relative errors floored at `floor`.
pub fn max_gradient_error(case: &GradientCase, h: f64, floor: f64) -> f64 {
    let analytic = nn::gradient(&case.params, &case.states, &case.actions, &case.targets).unwrap();
    let base = case.params.as_slice().to_vec();
    let sizes = case.params.sizes().to_vec();
    let loss_at = |data: Vec<f64>| {
        let p = Parameters::from_flat(&sizes, data).unwrap();
        nn::loss(&p, &case.states, &case.actions, &case.targets).unwrap()
    };
    let mut worst: f64 = 0.0;
    for i in 0..base.len() {
        let mut plus = base.clone();
        plus[i] += h;
        let mut minus = base.clone();
        minus[i] -= h;
        let numeric = (loss_at(plus) - loss_at(minus)) / (2.0 * h);
        let a = analytic.as_slice()[i];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
        worst = worst.max(rel);
    }
    worst
}

/// Gridworld dynamics written out independently: 5x5, start (0,0), goal
/// (4,4), actions up/down/left/right as +y/-y/-x/+x, walls clamp, reward 1
/// on entering the goal, which ends the episode.
pub const N: i64 = 5;

pub fn oracle_step(x: i64, y: i64, a: usize) -> ((i64, i64), f64, bool) {
    let (dx, dy) = [(0, 1), (0, -1), (-1, 0), (1, 0)][a];
    let (nx, ny) = (x + dx, y + dy);
    let (nx, ny) = if (0..N).contains(&nx) && (0..N).contains(&ny) { (nx, ny) } else { (x, y) };
    if (nx, ny) == (N - 1, N - 1) {
        ((nx, ny), 1.0, true)
    } else {
        ((nx, ny), 0.0, false)
    }
}

/// Optimal action values by value iteration, indexed `[x + 5y][a]`.
pub fn optimal_q(gamma: f64) -> Vec<[f64; 4]> {
    let cells = (N * N) as usize;
    let mut v = vec![0.0; cells];
    let goal = (N * N - 1) as usize;
    loop {
        let mut next = vec![0.0; cells];
        for s in 0..cells {
            if s == goal {
                continue;
            }
            let (x, y) = (s as i64 % N, s as i64 / N);
            next[s] = (0..4)
                .map(|a| {
                    let ((nx, ny), r, done) = oracle_step(x, y, a);
                    if done {
                        r
                    } else {
                        r + gamma * v[(nx + N * ny) as usize]
                    }
                })
                .fold(f64::NEG_INFINITY, f64::max);
        }
        let delta = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if delta == 0.0 {
            break;
        }
    }
    (0..cells)
        .map(|s| {
            let (x, y) = (s as i64 % N, s as i64 / N);
            let mut q = [0.0; 4];
            for (a, slot) in q.iter_mut().enumerate() {
                let ((nx, ny), r, done) = oracle_step(x, y, a);
                *slot = if done || s == goal { r } else { r + gamma * v[(nx + N * ny) as usize] };
            }
            q
        })
        .collect()
}

/// Linear [25, 4] network whose output for a one-hot cell is that cell's
/// row of `q`.
pub fn tabular_network(q: &[[f64; 4]]) -> Parameters {
    let cells = q.len();
    let mut data = vec![0.0; 4 * cells + 4];
    for (s, row) in q.iter().enumerate() {
        for (a, &value) in row.iter().enumerate() {
            data[a * cells + s] = value;
        }
    }
    Parameters::from_flat(&[cells, 4], data).unwrap()
}
