use rand::Rng;

use super::{Normalizer, Sample, State, STATE_DIM};
use crate::error::{Error, Result};
use crate::par::{self, Exec};

/// Layer widths of the standard policy network.
pub const LAYER_DIMS: [usize; 4] = [STATE_DIM, 64, 64, 1];

#[derive(Debug, Clone, PartialEq)]
struct Dense {
    inputs: usize,
    outputs: usize,
    /// `outputs x inputs`, row-major.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.outputs {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            let z = row.iter().zip(x).fold(self.bias[o], |acc, (w, v)| acc + w * v);
            out.push(z);
        }
    }
}

/// Feed-forward network: tanh on hidden layers, linear output.
///
/// Parameters flatten layer by layer, each layer as its weights (row-major,
/// `outputs x inputs`) followed by its biases.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyNet {
    layers: Vec<Dense>,
}

impl PolicyNet {
    /// All-zero network with the given layer widths. The first width must be
    /// the state dimension and the last 1.
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        if dims.len() < 2 || dims[0] != STATE_DIM || *dims.last().unwrap() != 1 || dims.contains(&0) {
            return Err(Error::Config(format!(
                "network dims must run from {STATE_DIM} inputs to 1 output, got {dims:?}"
            )));
        }
        Ok(Self {
            layers: dims.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
        })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(dims: &[usize], rng: &mut impl Rng) -> Result<Self> {
        let mut net = Self::zeros(dims)?;
        for layer in &mut net.layers {
            let limit = (6.0 / (layer.inputs + layer.outputs) as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.random_range(-limit..limit);
            }
        }
        Ok(net)
    }

    pub fn standard(seed: u64) -> Self {
        Self::init(&LAYER_DIMS, &mut crate::rng::rng_from(seed)).expect("standard dims are valid")
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.layers[0].inputs];
        d.extend(self.layers.iter().map(|l| l.outputs));
        d
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Dense::param_count).sum()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn unflatten(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::LengthMismatch {
                expected: self.param_count(),
                got: params.len(),
            });
        }
        let mut rest = params;
        for l in &mut self.layers {
            let (w, tail) = rest.split_at(l.weights.len());
            let (b, tail) = tail.split_at(l.bias.len());
            l.weights.copy_from_slice(w);
            l.bias.copy_from_slice(b);
            rest = tail;
        }
        Ok(())
    }

    pub(super) fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    /// Output for an already-normalized input.
    pub fn predict_normalized(&self, x: &[f64]) -> f64 {
        let mut cur = x.to_vec();
        let mut next = Vec::with_capacity(64);
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            l.apply(&cur, &mut next);
            if i < last {
                next.iter_mut().for_each(|v| *v = v.tanh());
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur[0]
    }

    /// Accumulates `scale * d(output)/d(params)`-weighted gradient of one
    /// sample into `grad` and returns the prediction. `dloss` maps the
    /// prediction to dL/d(output).
    fn accumulate(&self, x: &[f64], grad: &mut [f64], dloss: impl FnOnce(f64) -> f64) -> f64 {
        // activations[0] = input, activations[i] = output of layer i-1 (post-tanh for hidden)
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let mut out = Vec::with_capacity(l.outputs);
            l.apply(&acts[i], &mut out);
            if i < last {
                out.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(out);
        }
        let y = acts[self.layers.len()][0];
        let mut delta = vec![dloss(y)];

        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut off = 0;
        for l in &self.layers {
            offsets.push(off);
            off += l.param_count();
        }
        for (i, l) in self.layers.iter().enumerate().rev() {
            let input = &acts[i];
            let base = offsets[i];
            let (gw, gb) = grad[base..base + l.param_count()].split_at_mut(l.weights.len());
            for o in 0..l.outputs {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                gb[o] += d;
                let row = &mut gw[o * l.inputs..(o + 1) * l.inputs];
                for (g, v) in row.iter_mut().zip(input) {
                    *g += d * v;
                }
            }
            if i > 0 {
                let mut prev = vec![0.0; l.inputs];
                for o in 0..l.outputs {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    let row = &l.weights[o * l.inputs..(o + 1) * l.inputs];
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += d * w;
                    }
                }
                // input of layer i is a tanh output
                for (p, a) in prev.iter_mut().zip(input) {
                    *p *= 1.0 - a * a;
                }
                delta = prev;
            }
        }
        y
    }
}

/// Flat gradient over all network parameters, in flatten order.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector {
    values: Vec<f64>,
}

impl GradientVector {
    pub fn zeros(len: usize) -> Self {
        Self { values: vec![0.0; len] }
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

/// Policy output for a raw (unnormalized) state. Unclamped.
pub fn forward(net: &PolicyNet, norm: &Normalizer, s: &State) -> f64 {
    net.predict_normalized(&norm.apply(s))
}

fn squared_error(net: &PolicyNet, norm: &Normalizer, sample: &Sample) -> f64 {
    let e = forward(net, norm, &sample.s) - sample.a;
    e * e
}

/// Mean squared error over `batch`.
pub fn mse_loss(net: &PolicyNet, norm: &Normalizer, batch: &[Sample]) -> Result<f64> {
    mse_loss_with(Exec::Sequential, net, norm, batch)
}

/// [`mse_loss`] with per-sample predictions under `exec`. The sum is taken in
/// sample order, so the result does not depend on `exec`.
pub fn mse_loss_with(exec: Exec, net: &PolicyNet, norm: &Normalizer, batch: &[Sample]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    Ok(par::map_sum(exec, batch, |s| squared_error(net, norm, s)) / batch.len() as f64)
}

/// Loss and exact gradient of [`mse_loss`].
pub fn backward(net: &PolicyNet, norm: &Normalizer, batch: &[Sample]) -> Result<(f64, GradientVector)> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let n = batch.len() as f64;
    let mut grad = vec![0.0; net.param_count()];
    let mut loss = 0.0;
    for sample in batch {
        let x = norm.apply(&sample.s);
        let mut err = 0.0;
        net.accumulate(&x, &mut grad, |y| {
            err = y - sample.a;
            2.0 * err / n
        });
        loss += err * err;
    }
    Ok((loss / n, GradientVector::from_vec(grad)))
}
