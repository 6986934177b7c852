//! Dense feed-forward Q-network with exact backpropagation and centered
//! RMSProp.
//!
//! Parameters are stored flat. Layer `k` occupies a contiguous span laid out
//! as its weight matrix (row-major, `out x in`) followed by its bias vector.
//! Hidden layers use a rectifier; the output layer is linear.
//!
//! Every batched routine evaluates each row with the same single-row kernel
//! (loop over output units, inner loop over inputs in index order), so a
//! batched forward pass is bit-identical to running the rows one at a time.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const PARAM_MAGIC: &[u8; 8] = b"FDQNPAR1";

/// Network weights and biases for every layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    sizes: Vec<usize>,
    data: Vec<f64>,
}

/// Gradient of a scalar loss, shaped like [`Parameters`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    sizes: Vec<usize>,
    data: Vec<f64>,
}

/// Borrowed view of one dense layer.
#[derive(Debug, Clone, Copy)]
pub struct Layer<'a> {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: &'a [f64],
    pub bias: &'a [f64],
}

#[derive(Debug)]
pub struct LayerMut<'a> {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: &'a mut [f64],
    pub bias: &'a mut [f64],
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 {
        return Err(Error::Layout(format!(
            "need at least 2 layer sizes, got {}",
            sizes.len()
        )));
    }
    if let Some(pos) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::Layout(format!("layer size at position {pos} is zero")));
    }
    Ok(())
}

fn scalar_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

fn layer_offset(sizes: &[usize], k: usize) -> usize {
    sizes[..=k].windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Parameters {
    /// All-zero network with the given layer sizes.
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        check_sizes(sizes)?;
        Ok(Self {
            sizes: sizes.to_vec(),
            data: vec![0.0; scalar_count(sizes)],
        })
    }

    /// Build from a flat value vector in canonical layer order.
    pub fn from_flat(sizes: &[usize], data: Vec<f64>) -> Result<Self> {
        check_sizes(sizes)?;
        let want = scalar_count(sizes);
        if data.len() != want {
            return Err(Error::Shape(format!(
                "expected {want} parameter values, got {}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("parameters"));
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            data,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("at least two sizes")
    }

    pub fn layer_count(&self) -> usize {
        self.sizes.len() - 1
    }

    /// Number of scalar parameters.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Flat values in canonical layer order.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn layer(&self, k: usize) -> Layer<'_> {
        let (inputs, outputs) = (self.sizes[k], self.sizes[k + 1]);
        let start = layer_offset(&self.sizes, k);
        let (weights, rest) = self.data[start..].split_at(inputs * outputs);
        Layer {
            inputs,
            outputs,
            weights,
            bias: &rest[..outputs],
        }
    }

    pub fn layer_mut(&mut self, k: usize) -> LayerMut<'_> {
        let (inputs, outputs) = (self.sizes[k], self.sizes[k + 1]);
        let start = layer_offset(&self.sizes, k);
        let (weights, rest) = self.data[start..].split_at_mut(inputs * outputs);
        LayerMut {
            inputs,
            outputs,
            weights,
            bias: &mut rest[..outputs],
        }
    }

    /// 64-bit FNV-1a over the little-endian bytes of every value, in layer
    /// order. This is the same byte stream [`Parameters::write_to`] emits
    /// after its header.
    pub fn fingerprint(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        for v in &self.data {
            for b in v.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(PRIME);
            }
        }
        h
    }

    /// Serialize as: 8-byte magic `FDQNPAR1`, u64 size count, u64 sizes,
    /// then every value as a little-endian f64. All integers little-endian.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(PARAM_MAGIC)?;
        w.write_all(&(self.sizes.len() as u64).to_le_bytes())?;
        for &s in &self.sizes {
            w.write_all(&(s as u64).to_le_bytes())?;
        }
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != PARAM_MAGIC {
            return Err(Error::Format("not a parameter file (bad magic)".into()));
        }
        let mut word = [0u8; 8];
        r.read_exact(&mut word)?;
        let count = u64::from_le_bytes(word) as usize;
        if !(2..=64).contains(&count) {
            return Err(Error::Format(format!("implausible layer count {count}")));
        }
        let mut sizes = Vec::with_capacity(count);
        for _ in 0..count {
            r.read_exact(&mut word)?;
            sizes.push(u64::from_le_bytes(word) as usize);
        }
        check_sizes(&sizes)?;
        let n = scalar_count(&sizes);
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut word)?;
            data.push(f64::from_le_bytes(word));
        }
        Self::from_flat(&sizes, data)
    }
}

impl Gradients {
    pub fn zeros_like(params: &Parameters) -> Self {
        Self {
            sizes: params.sizes.clone(),
            data: vec![0.0; params.data.len()],
        }
    }

    /// Gradient values in canonical layer order. Not validated for finiteness.
    pub fn from_flat(params: &Parameters, data: Vec<f64>) -> Result<Self> {
        if data.len() != params.len() {
            return Err(Error::Shape(format!(
                "expected {} gradient values, got {}",
                params.len(),
                data.len()
            )));
        }
        Ok(Self {
            sizes: params.sizes.clone(),
            data,
        })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Random network: weights uniform in `+-sqrt(6 / (fan_in + fan_out))`,
/// biases zero. Same `(sizes, seed)` always yields the same bits.
pub fn init_network(sizes: &[usize], seed: u64) -> Result<Parameters> {
    let mut params = Parameters::zeros(sizes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..params.layer_count() {
        let layer = params.layer_mut(k);
        let limit = (6.0 / (layer.inputs + layer.outputs) as f64).sqrt();
        for w in layer.weights.iter_mut() {
            *w = rng.gen_range(-limit..limit);
        }
    }
    Ok(params)
}

/// Deep, independent copy.
pub fn copy_parameters(source: &Parameters) -> Parameters {
    source.clone()
}

#[inline]
fn affine_into(layer: &Layer<'_>, x: &[f64], out: &mut Vec<f64>) {
    out.clear();
    for o in 0..layer.outputs {
        let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
        let mut acc = 0.0;
        for i in 0..layer.inputs {
            acc += row[i] * x[i];
        }
        out.push(acc + layer.bias[o]);
    }
}

fn check_state(params: &Parameters, state: &[f64], row: usize) -> Result<()> {
    if state.len() != params.input_dim() {
        return Err(Error::Shape(format!(
            "state {row} has length {}, network expects {}",
            state.len(),
            params.input_dim()
        )));
    }
    Ok(())
}

fn forward_unchecked(params: &Parameters, state: &[f64]) -> Vec<f64> {
    let last = params.layer_count() - 1;
    let mut x = state.to_vec();
    let mut y = Vec::new();
    for k in 0..=last {
        affine_into(&params.layer(k), &x, &mut y);
        if k < last {
            for v in y.iter_mut() {
                *v = v.max(0.0);
            }
        }
        std::mem::swap(&mut x, &mut y);
    }
    x
}

/// Q-values for one state.
pub fn forward_row(params: &Parameters, state: &[f64]) -> Result<Vec<f64>> {
    check_state(params, state, 0)?;
    Ok(forward_unchecked(params, state))
}

/// One row of Q-values per input state.
pub fn forward<S: AsRef<[f64]>>(params: &Parameters, states: &[S]) -> Result<Vec<Vec<f64>>> {
    for (j, s) in states.iter().enumerate() {
        check_state(params, s.as_ref(), j)?;
    }
    Ok(states
        .iter()
        .map(|s| forward_unchecked(params, s.as_ref()))
        .collect())
}

fn check_batch<S: AsRef<[f64]>>(
    params: &Parameters,
    states: &[S],
    actions: &[usize],
    targets: &[f64],
) -> Result<()> {
    if states.len() != actions.len() || states.len() != targets.len() {
        return Err(Error::Shape(format!(
            "batch lengths disagree: {} states, {} actions, {} targets",
            states.len(),
            actions.len(),
            targets.len()
        )));
    }
    if states.is_empty() {
        return Err(Error::Shape("empty batch".into()));
    }
    let count = params.output_dim();
    for (j, s) in states.iter().enumerate() {
        check_state(params, s.as_ref(), j)?;
    }
    if let Some(&action) = actions.iter().find(|&&a| a >= count) {
        return Err(Error::InvalidAction { action, count });
    }
    if targets.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite("targets"));
    }
    Ok(())
}

/// Mean over the batch of `0.5 * (target - Q(s, a))^2`.
pub fn loss<S: AsRef<[f64]>>(
    params: &Parameters,
    states: &[S],
    actions: &[usize],
    targets: &[f64],
) -> Result<f64> {
    check_batch(params, states, actions, targets)?;
    let mut total = 0.0;
    for ((s, &a), &t) in states.iter().zip(actions).zip(targets) {
        let q = forward_unchecked(params, s.as_ref());
        let d = t - q[a];
        total += 0.5 * d * d;
    }
    Ok(total / states.len() as f64)
}

/// Exact gradient of [`loss`] with the targets held constant. Only the
/// chosen action's output unit receives an error signal.
pub fn gradient<S: AsRef<[f64]>>(
    params: &Parameters,
    states: &[S],
    actions: &[usize],
    targets: &[f64],
) -> Result<Gradients> {
    check_batch(params, states, actions, targets)?;
    let layers = params.layer_count();
    let scale = 1.0 / states.len() as f64;
    let mut grad = Gradients::zeros_like(params);
    let offsets: Vec<usize> = (0..layers).map(|k| layer_offset(&params.sizes, k)).collect();

    // activations[k] is the input to layer k; pre[k] its pre-activation output.
    let mut activations: Vec<Vec<f64>> = vec![Vec::new(); layers + 1];
    let mut pre: Vec<Vec<f64>> = vec![Vec::new(); layers];

    for ((s, &a), &t) in states.iter().zip(actions).zip(targets) {
        activations[0].clear();
        activations[0].extend_from_slice(s.as_ref());
        for k in 0..layers {
            let (head, tail) = activations.split_at_mut(k + 1);
            affine_into(&params.layer(k), &head[k], &mut pre[k]);
            let next = &mut tail[0];
            next.clear();
            if k + 1 < layers {
                next.extend(pre[k].iter().map(|v| v.max(0.0)));
            } else {
                next.extend_from_slice(&pre[k]);
            }
        }

        let out = &activations[layers];
        let mut delta = vec![0.0; out.len()];
        delta[a] = (out[a] - t) * scale;

        for k in (0..layers).rev() {
            let layer = params.layer(k);
            let input = &activations[k];
            let base = offsets[k];
            let (gw, gb) = grad.data[base..base + layer.inputs * layer.outputs + layer.outputs]
                .split_at_mut(layer.inputs * layer.outputs);
            for o in 0..layer.outputs {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let row = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                for i in 0..layer.inputs {
                    row[i] += d * input[i];
                }
                gb[o] += d;
            }
            if k > 0 {
                let below = &pre[k - 1];
                let mut prev = vec![0.0; layer.inputs];
                for o in 0..layer.outputs {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for i in 0..layer.inputs {
                        prev[i] += row[i] * d;
                    }
                }
                for (p, &z) in prev.iter_mut().zip(below) {
                    if z <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
    }
    Ok(grad)
}

/// Centered RMSProp constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptConfig {
    pub learning_rate: f64,
    pub decay: f64,
    /// Added inside the square root of the denominator.
    pub epsilon: f64,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            learning_rate: 2.5e-4,
            decay: 0.95,
            epsilon: 0.01,
        }
    }
}

impl OptConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning rate must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.decay) {
            return Err(Error::Config("RMSProp decay must lie in [0, 1)".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config("RMSProp epsilon must be > 0".into()));
        }
        Ok(())
    }
}

/// First and second moment accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct OptState {
    pub mean: Vec<f64>,
    pub mean_square: Vec<f64>,
    pub steps: u64,
}

impl OptState {
    pub fn new(params: &Parameters) -> Self {
        Self {
            mean: vec![0.0; params.len()],
            mean_square: vec![0.0; params.len()],
            steps: 0,
        }
    }
}

/// One centered RMSProp update, applied in place:
///
/// ```text
/// m <- rho m + (1 - rho) g
/// v <- rho v + (1 - rho) g^2
/// theta <- theta - alpha g / sqrt(v - m^2 + kappa)
/// ```
///
/// Nothing is modified when the gradient contains a non-finite entry.
pub fn rmsprop_step(
    opt: &mut OptState,
    cfg: &OptConfig,
    params: &mut Parameters,
    grad: &Gradients,
) -> Result<()> {
    if grad.sizes != params.sizes || opt.mean.len() != params.len() || opt.mean_square.len() != params.len() {
        return Err(Error::Shape("optimizer state, parameters and gradient disagree".into()));
    }
    if grad.data.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("gradient"));
    }
    let rho = cfg.decay;
    for (((theta, &g), m), v) in params
        .data
        .iter_mut()
        .zip(&grad.data)
        .zip(opt.mean.iter_mut())
        .zip(opt.mean_square.iter_mut())
    {
        *m = rho * *m + (1.0 - rho) * g;
        *v = rho * *v + (1.0 - rho) * g * g;
        *theta -= cfg.learning_rate * g / (*v - *m * *m + cfg.epsilon).sqrt();
    }
    opt.steps += 1;
    Ok(())
}
