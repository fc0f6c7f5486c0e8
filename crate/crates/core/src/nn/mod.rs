//! Small fully connected networks with hand-written backpropagation.
//!
//! Parameters live in one flat `Vec<f64>`; layer `l` stores its weight matrix
//! row-major as `(out, in)` followed by its bias. Hidden layers use `tanh`,
//! the output layer is affine.

mod adam;
mod categorical;

pub use adam::Adam;
pub use categorical::{entropy_grad, log_prob_and_entropy, log_prob_grad, log_softmax, softmax};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Hidden width used by both actor and critic.
pub const HIDDEN: usize = 64;

pub const HIDDEN_GAIN: f64 = std::f64::consts::SQRT_2;
pub const ACTOR_OUTPUT_GAIN: f64 = 0.01;
pub const CRITIC_OUTPUT_GAIN: f64 = 1.0;

/// Layer widths from input to output, e.g. `[B, 64, 64, 2]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub sizes: Vec<usize>,
    pub activation: String,
    pub initializer: String,
}

impl Architecture {
    pub fn new(sizes: Vec<usize>) -> Self {
        Self {
            sizes,
            activation: "tanh".into(),
            initializer: "orthogonal".into(),
        }
    }

    pub fn actor(input: usize) -> Self {
        Self::new(vec![input, HIDDEN, HIDDEN, 2])
    }

    pub fn critic(input: usize) -> Self {
        Self::new(vec![input, HIDDEN, HIDDEN, 1])
    }

    fn validate(&self) -> Result<()> {
        if self.sizes.len() < 2 || self.sizes.contains(&0) {
            return Err(Error::Shape(format!("invalid layer sizes {:?}", self.sizes)));
        }
        if self.activation != "tanh" {
            return Err(Error::Config(format!(
                "unsupported activation `{}`",
                self.activation
            )));
        }
        Ok(())
    }

    pub fn input(&self) -> usize {
        self.sizes[0]
    }

    pub fn output(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn n_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn n_params(&self) -> usize {
        self.sizes.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct LayerSpan {
    n_in: usize,
    n_out: usize,
    weights: usize,
    bias: usize,
}

fn spans(arch: &Architecture) -> Vec<LayerSpan> {
    let mut offset = 0;
    arch.sizes
        .windows(2)
        .map(|w| {
            let span = LayerSpan {
                n_in: w[0],
                n_out: w[1],
                weights: offset,
                bias: offset + w[0] * w[1],
            };
            offset += w[0] * w[1] + w[1];
            span
        })
        .collect()
}

/// A multilayer perceptron.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    arch: Architecture,
    spans: Vec<LayerSpan>,
    params: Vec<f64>,
}

/// Layer activations retained by [`Mlp::forward`] for [`Mlp::backward`].
#[derive(Debug, Clone, Default)]
pub struct Cache {
    /// `acts[0]` is the input, `acts[l+1]` the output of layer `l`.
    acts: Vec<Vec<f64>>,
}

impl Cache {
    pub fn output(&self) -> &[f64] {
        self.acts.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn input(&self) -> &[f64] {
        self.acts.first().map(Vec::as_slice).unwrap_or(&[])
    }
}

impl Mlp {
    /// All-zero parameters.
    pub fn zeros(arch: Architecture) -> Result<Self> {
        arch.validate()?;
        let spans = spans(&arch);
        let params = vec![0.0; arch.n_params()];
        Ok(Self { arch, spans, params })
    }

    /// Orthogonal weights (gain `sqrt(2)` on hidden layers, `output_gain` on
    /// the last layer) and zero biases.
    pub fn orthogonal<R: Rng + ?Sized>(arch: Architecture, output_gain: f64, rng: &mut R) -> Result<Self> {
        let mut mlp = Self::zeros(arch)?;
        let last = mlp.spans.len() - 1;
        for (l, span) in mlp.spans.clone().into_iter().enumerate() {
            let gain = if l == last { output_gain } else { HIDDEN_GAIN };
            let w = orthogonal_matrix(span.n_out, span.n_in, rng);
            for (dst, src) in mlp.params[span.weights..span.bias].iter_mut().zip(w) {
                *dst = gain * src;
            }
        }
        Ok(mlp)
    }

    pub fn from_params(arch: Architecture, params: Vec<f64>) -> Result<Self> {
        let mut mlp = Self::zeros(arch)?;
        if params.len() != mlp.params.len() {
            return Err(Error::Shape(format!(
                "{} parameters for an architecture needing {}",
                params.len(),
                mlp.params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("network parameter".into()));
        }
        mlp.params = params;
        Ok(mlp)
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    /// Row-major weights of layer `l` as `(rows = out, cols = in)`.
    pub fn weights(&self, l: usize) -> &[f64] {
        let s = self.spans[l];
        &self.params[s.weights..s.bias]
    }

    pub fn bias(&self, l: usize) -> &[f64] {
        let s = self.spans[l];
        &self.params[s.bias..s.bias + s.n_out]
    }

    /// Runs the network, keeping every activation in `cache`.
    pub fn forward(&self, input: &[f64], cache: &mut Cache) -> Result<()> {
        if input.len() != self.arch.input() {
            return Err(Error::Shape(format!(
                "input width {} but network expects {}",
                input.len(),
                self.arch.input()
            )));
        }
        if input.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("network input".into()));
        }
        cache.acts.resize_with(self.spans.len() + 1, Vec::new);
        cache.acts[0].clear();
        cache.acts[0].extend_from_slice(input);
        let last = self.spans.len() - 1;
        for (l, s) in self.spans.iter().enumerate() {
            let (done, rest) = cache.acts.split_at_mut(l + 1);
            let x = &done[l];
            let y = &mut rest[0];
            y.clear();
            let w = &self.params[s.weights..s.bias];
            let b = &self.params[s.bias..s.bias + s.n_out];
            for (row, &bias) in w.chunks_exact(s.n_in).zip(b) {
                let z = dot(row, x) + bias;
                y.push(if l == last { z } else { z.tanh() });
            }
        }
        Ok(())
    }

    /// Convenience forward returning only the output.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        let mut cache = Cache::default();
        self.forward(input, &mut cache)?;
        Ok(cache.output().to_vec())
    }

    /// Accumulates `d loss / d params` into `grads`, given the gradient of the
    /// loss with respect to the network output for the input held in `cache`.
    pub fn backward(&self, cache: &Cache, upstream: &[f64], grads: &mut [f64]) -> Result<()> {
        if grads.len() != self.params.len() {
            return Err(Error::Shape(format!(
                "gradient buffer has {} slots, network has {} parameters",
                grads.len(),
                self.params.len()
            )));
        }
        if cache.acts.len() != self.spans.len() + 1 || cache.acts[0].len() != self.arch.input() {
            return Err(Error::Shape("cache does not match this network".into()));
        }
        if upstream.len() != self.arch.output() {
            return Err(Error::Shape(format!(
                "upstream gradient width {} but network output is {}",
                upstream.len(),
                self.arch.output()
            )));
        }
        let mut delta = upstream.to_vec();
        let mut next = Vec::new();
        for l in (0..self.spans.len()).rev() {
            let s = self.spans[l];
            let x = &cache.acts[l];
            let w = &self.params[s.weights..s.bias];
            let (gw, gb) = grads[s.weights..s.bias + s.n_out].split_at_mut(s.n_in * s.n_out);
            for ((grow, g_b), &d) in gw.chunks_exact_mut(s.n_in).zip(gb.iter_mut()).zip(&delta) {
                *g_b += d;
                if d != 0.0 {
                    for (g, &xi) in grow.iter_mut().zip(x) {
                        *g += d * xi;
                    }
                }
            }
            if l == 0 {
                break;
            }
            // Propagate through W and the tanh of the previous layer.
            next.clear();
            next.resize(s.n_in, 0.0);
            for (row, &d) in w.chunks_exact(s.n_in).zip(&delta) {
                if d != 0.0 {
                    for (n, &wi) in next.iter_mut().zip(row) {
                        *n += wi * d;
                    }
                }
            }
            for (n, &h) in next.iter_mut().zip(x) {
                *n *= 1.0 - h * h;
            }
            std::mem::swap(&mut delta, &mut next);
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// A `rows x cols` row-major matrix with orthonormal rows (if `rows <= cols`)
/// or orthonormal columns (otherwise), from Gram-Schmidt on a Gaussian draw.
pub fn orthogonal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Vec<f64> {
    // Work on the tall orientation: `k` vectors of length `len`, k <= len.
    let (k, len) = if rows >= cols { (cols, rows) } else { (rows, cols) };
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    while basis.len() < k {
        let mut v: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
        // Two passes of modified Gram-Schmidt keep orthogonality near machine precision.
        for _ in 0..2 {
            for q in &basis {
                let proj = dot(q, &v);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm < 1e-10 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        basis.push(v);
    }
    let mut out = vec![0.0; rows * cols];
    if rows >= cols {
        // basis vectors are the columns
        for (c, q) in basis.iter().enumerate() {
            for (r, &val) in q.iter().enumerate() {
                out[r * cols + c] = val;
            }
        }
    } else {
        for (r, q) in basis.iter().enumerate() {
            out[r * cols..(r + 1) * cols].copy_from_slice(q);
        }
    }
    out
}

/// Wire form of an [`Mlp`] for checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpRecord {
    pub architecture: Architecture,
    pub layers: Vec<LayerRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    /// Row-major: one inner array per output unit.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl From<&Mlp> for MlpRecord {
    fn from(mlp: &Mlp) -> Self {
        let layers = mlp
            .spans
            .iter()
            .enumerate()
            .map(|(l, s)| LayerRecord {
                weights: mlp.weights(l).chunks_exact(s.n_in).map(<[f64]>::to_vec).collect(),
                bias: mlp.bias(l).to_vec(),
            })
            .collect();
        Self {
            architecture: mlp.arch.clone(),
            layers,
        }
    }
}

impl TryFrom<MlpRecord> for Mlp {
    type Error = Error;

    fn try_from(rec: MlpRecord) -> Result<Self> {
        let mut mlp = Mlp::zeros(rec.architecture)?;
        if rec.layers.len() != mlp.spans.len() {
            return Err(Error::Shape(format!(
                "{} layers recorded, architecture has {}",
                rec.layers.len(),
                mlp.spans.len()
            )));
        }
        let mut flat = Vec::with_capacity(mlp.n_params());
        for (layer, s) in rec.layers.iter().zip(&mlp.spans) {
            if layer.weights.len() != s.n_out
                || layer.weights.iter().any(|row| row.len() != s.n_in)
                || layer.bias.len() != s.n_out
            {
                return Err(Error::Shape(format!(
                    "layer recorded with wrong shape, expected {}x{}",
                    s.n_out, s.n_in
                )));
            }
            layer.weights.iter().for_each(|row| flat.extend_from_slice(row));
            flat.extend_from_slice(&layer.bias);
        }
        let arch = mlp.arch.clone();
        mlp = Mlp::from_params(arch, flat)?;
        Ok(mlp)
    }
}
