//! Fully connected network `D_in -> 32 -> 32 -> D_out`, leaky ReLU on the
//! hidden layers and a linear output. Parameters live in one flat buffer so
//! the optimizer can treat them as a single dense vector.

use rand::Rng as _;

use crate::rng::{stream_rng, streams};
use crate::{Error, Real, Result};

pub const HIDDEN_WIDTH: usize = 32;
pub const HIDDEN_LAYERS: usize = 2;
pub const LEAKY_SLOPE: f64 = 0.01;

#[inline]
pub fn leaky_relu<T: Real>(x: T) -> T {
    if x >= T::zero() {
        x
    } else {
        x * T::from_f64_lossy(LEAKY_SLOPE)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct LayerShape {
    inputs: usize,
    outputs: usize,
    weights: usize,
    biases: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    shapes: Vec<LayerShape>,
    /// Per layer: row-major `outputs x inputs` weights, then biases.
    pub params: Vec<T>,
}

/// Activations kept from a batched forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    batch: usize,
    /// `acts[0]` is the input; `acts[l+1]` the output of layer `l`.
    acts: Vec<Vec<T>>,
    /// Pre-activations of each layer.
    pre: Vec<Vec<T>>,
}

impl<T> ForwardCache<T> {
    pub fn batch(&self) -> usize {
        self.batch
    }
}

impl<T: Real> Mlp<T> {
    fn shapes_for(sizes: &[usize]) -> Vec<LayerShape> {
        let mut off = 0;
        sizes
            .windows(2)
            .map(|w| {
                let s = LayerShape {
                    inputs: w[0],
                    outputs: w[1],
                    weights: off,
                    biases: off + w[0] * w[1],
                };
                off += w[0] * w[1] + w[1];
                s
            })
            .collect()
    }

    /// Weights uniform in `±sqrt(6 / fan_in)`, biases zero.
    pub fn new(d_in: usize, d_out: usize, seed: u64) -> Result<Self> {
        if d_in == 0 || d_out == 0 {
            return Err(Error::InvalidConfig(format!("MLP needs D_in, D_out >= 1, got {d_in}, {d_out}")));
        }
        let mut sizes = vec![d_in];
        sizes.extend([HIDDEN_WIDTH; HIDDEN_LAYERS]);
        sizes.push(d_out);
        let shapes = Self::shapes_for(&sizes);
        let total = shapes.last().map(|s| s.biases + s.outputs).unwrap_or(0);
        let mut params = vec![T::zero(); total];
        let mut rng = stream_rng(seed, streams::MLP_INIT, 0);
        for s in &shapes {
            let bound = (6.0 / s.inputs as f64).sqrt();
            for w in &mut params[s.weights..s.biases] {
                *w = T::from_f64_lossy(rng.gen_range(-bound..=bound));
            }
        }
        Ok(Mlp { shapes, params })
    }

    pub fn input_width(&self) -> usize {
        self.shapes[0].inputs
    }

    pub fn output_width(&self) -> usize {
        self.shapes.last().expect("layers").outputs
    }

    pub fn layer_count(&self) -> usize {
        self.shapes.len()
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut v = vec![self.input_width()];
        v.extend(self.shapes.iter().map(|s| s.outputs));
        v
    }

    pub fn weights_mut(&mut self, layer: usize) -> &mut [T] {
        let s = self.shapes[layer];
        &mut self.params[s.weights..s.biases]
    }

    pub fn biases_mut(&mut self, layer: usize) -> &mut [T] {
        let s = self.shapes[layer];
        &mut self.params[s.biases..s.biases + s.outputs]
    }

    pub fn weights(&self, layer: usize) -> &[T] {
        let s = self.shapes[layer];
        &self.params[s.weights..s.biases]
    }

    pub fn biases(&self, layer: usize) -> &[T] {
        let s = self.shapes[layer];
        &self.params[s.biases..s.biases + s.outputs]
    }

    fn layer_forward(&self, l: usize, input: &[T], batch: usize, pre: &mut [T], act: &mut [T]) {
        let s = self.shapes[l];
        let w = &self.params[s.weights..s.biases];
        let b = &self.params[s.biases..s.biases + s.outputs];
        let hidden = l + 1 < self.shapes.len();
        for n in 0..batch {
            let x = &input[n * s.inputs..(n + 1) * s.inputs];
            let h = &mut pre[n * s.outputs..(n + 1) * s.outputs];
            for o in 0..s.outputs {
                let row = &w[o * s.inputs..(o + 1) * s.inputs];
                let mut acc = b[o];
                for (wi, xi) in row.iter().zip(x) {
                    acc += *wi * *xi;
                }
                h[o] = acc;
            }
            let a = &mut act[n * s.outputs..(n + 1) * s.outputs];
            for (ai, &hi) in a.iter_mut().zip(h.iter()) {
                *ai = if hidden { leaky_relu(hi) } else { hi };
            }
        }
    }

    /// Batched forward pass; `inputs` is `batch x D_in`, row-major.
    pub fn forward(&self, inputs: &[T], batch: usize) -> Result<(Vec<T>, ForwardCache<T>)> {
        if inputs.len() != batch * self.input_width() {
            return Err(Error::DimensionMismatch(format!(
                "MLP input has {} values, expected {batch} x {}",
                inputs.len(),
                self.input_width()
            )));
        }
        if let Some(i) = inputs.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("MLP input {i} is {}", inputs[i])));
        }
        let mut acts = Vec::with_capacity(self.shapes.len() + 1);
        let mut pre = Vec::with_capacity(self.shapes.len());
        acts.push(inputs.to_vec());
        for l in 0..self.shapes.len() {
            let n = batch * self.shapes[l].outputs;
            let mut h = vec![T::zero(); n];
            let mut a = vec![T::zero(); n];
            self.layer_forward(l, &acts[l], batch, &mut h, &mut a);
            pre.push(h);
            acts.push(a);
        }
        let out = acts.last().expect("output layer").clone();
        Ok((out, ForwardCache { batch, acts, pre }))
    }

    /// Forward pass without keeping a cache.
    pub fn infer(&self, inputs: &[T], batch: usize) -> Result<Vec<T>> {
        self.forward(inputs, batch).map(|(o, _)| o)
    }

    /// Reverse pass. Returns the parameter gradient (same layout as
    /// `params`) and `dL/dinput` (`batch x D_in`).
    pub fn backward(&self, cache: &ForwardCache<T>, dl_dout: &[T]) -> (Vec<T>, Vec<T>) {
        let batch = cache.batch;
        assert_eq!(dl_dout.len(), batch * self.output_width());
        let mut grads = vec![T::zero(); self.params.len()];
        let slope = T::from_f64_lossy(LEAKY_SLOPE);
        let mut delta = dl_dout.to_vec();
        for l in (0..self.shapes.len()).rev() {
            let s = self.shapes[l];
            if l + 1 < self.shapes.len() {
                for (d, &h) in delta.iter_mut().zip(&cache.pre[l]) {
                    if h < T::zero() {
                        *d *= slope;
                    }
                }
            }
            let input = &cache.acts[l];
            let (gw, gb) = grads[s.weights..s.biases + s.outputs].split_at_mut(s.biases - s.weights);
            for n in 0..batch {
                let dn = &delta[n * s.outputs..(n + 1) * s.outputs];
                let xn = &input[n * s.inputs..(n + 1) * s.inputs];
                for (o, &d) in dn.iter().enumerate() {
                    if d == T::zero() {
                        continue;
                    }
                    gb[o] += d;
                    for (g, &x) in gw[o * s.inputs..(o + 1) * s.inputs].iter_mut().zip(xn) {
                        *g += d * x;
                    }
                }
            }
            let w = &self.params[s.weights..s.biases];
            let mut next = vec![T::zero(); batch * s.inputs];
            for n in 0..batch {
                let dn = &delta[n * s.outputs..(n + 1) * s.outputs];
                let out = &mut next[n * s.inputs..(n + 1) * s.inputs];
                for (o, &d) in dn.iter().enumerate() {
                    if d == T::zero() {
                        continue;
                    }
                    for (x, &wi) in out.iter_mut().zip(&w[o * s.inputs..(o + 1) * s.inputs]) {
                        *x += d * wi;
                    }
                }
            }
            delta = next;
        }
        (grads, delta)
    }

    pub fn cast<U: Real>(&self) -> Mlp<U> {
        Mlp {
            shapes: self.shapes.clone(),
            params: self.params.iter().map(|x| U::from_f64_lossy(x.to_f64_lossless())).collect(),
        }
    }
}
