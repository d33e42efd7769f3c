//! Minimal feedforward network engine: affine layers with ELU / sigmoid /
//! linear activations, a forward pass that caches intermediates, reverse-mode
//! vector-Jacobian products, and Adam or plain SGD updates.
//!
//! Parameters are plain `f64` tensors. Flat indexing (`get_flat` /
//! `set_flat`) exists so finite-difference probes can perturb single
//! coordinates.

use crate::error::{Error, Result};
use rand::Rng;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Elu,
    Sigmoid,
    Linear,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Elu => {
                if x > 0.0 {
                    x
                } else {
                    x.exp() - 1.0
                }
            }
            Activation::Sigmoid => sigmoid(x),
            Activation::Linear => x,
        }
    }

    /// Derivative as a function of the pre-activation.
    pub fn deriv(self, pre: f64) -> f64 {
        match self {
            Activation::Elu => {
                if pre > 0.0 {
                    1.0
                } else {
                    pre.exp()
                }
            }
            Activation::Sigmoid => {
                let s = sigmoid(pre);
                s * (1.0 - s)
            }
            Activation::Linear => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Elu => "elu",
            Activation::Sigmoid => "sigmoid",
            Activation::Linear => "linear",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "elu" => Ok(Activation::Elu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "linear" => Ok(Activation::Linear),
            other => Err(Error::InvalidParameter(format!("unknown activation '{other}'"))),
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Layer widths (input first) and one activation per non-input layer.
#[derive(Debug, Clone, PartialEq)]
pub struct NetSpec {
    dims: Vec<usize>,
    acts: Vec<Activation>,
}

impl NetSpec {
    pub fn new(dims: Vec<usize>, acts: Vec<Activation>) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::InvalidParameter("a net needs at least 2 layers".into()));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidParameter("layer dims must be positive".into()));
        }
        if acts.len() != dims.len() - 1 {
            return Err(Error::InvalidParameter(format!(
                "need {} activations for {} dims, got {}",
                dims.len() - 1,
                dims.len(),
                acts.len()
            )));
        }
        Ok(NetSpec { dims, acts })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn acts(&self) -> &[Activation] {
        &self.acts
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.acts.len()
    }
}

/// Weights and biases of one network, shaped by a [`NetSpec`]. The same
/// container doubles as gradient and moment storage.
#[derive(Debug, Clone, PartialEq)]
pub struct NetParams {
    spec: NetSpec,
    /// Per layer, row-major `out x in`.
    w: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
}

impl NetParams {
    pub fn zeros(spec: &NetSpec) -> Self {
        let mut w = Vec::new();
        let mut b = Vec::new();
        for l in 0..spec.num_layers() {
            w.push(vec![0.0; spec.dims[l + 1] * spec.dims[l]]);
            b.push(vec![0.0; spec.dims[l + 1]]);
        }
        NetParams { spec: spec.clone(), w, b }
    }

    /// Scaled-uniform init: weights zero-mean with variance `1/fan_in`,
    /// biases zero.
    pub fn init(spec: &NetSpec, rng: &mut impl Rng) -> Self {
        let mut p = Self::zeros(spec);
        for l in 0..spec.num_layers() {
            let bound = (3.0 / spec.dims[l] as f64).sqrt();
            for w in p.w[l].iter_mut() {
                *w = rng.gen_range(-bound..bound);
            }
        }
        p
    }

    pub fn spec(&self) -> &NetSpec {
        &self.spec
    }

    pub fn weight(&self, layer: usize) -> &[f64] {
        &self.w[layer]
    }

    pub fn bias(&self, layer: usize) -> &[f64] {
        &self.b[layer]
    }

    pub fn weight_mut(&mut self, layer: usize) -> &mut [f64] {
        &mut self.w[layer]
    }

    pub fn bias_mut(&mut self, layer: usize) -> &mut [f64] {
        &mut self.b[layer]
    }

    /// Total number of scalar parameters.
    pub fn flat_len(&self) -> usize {
        self.w.iter().map(Vec::len).sum::<usize>() + self.b.iter().map(Vec::len).sum::<usize>()
    }

    fn locate(&self, index: usize) -> (bool, usize, usize) {
        let mut i = index;
        for l in 0..self.w.len() {
            if i < self.w[l].len() {
                return (true, l, i);
            }
            i -= self.w[l].len();
            if i < self.b[l].len() {
                return (false, l, i);
            }
            i -= self.b[l].len();
        }
        panic!("flat index {index} out of range");
    }

    pub fn get_flat(&self, index: usize) -> f64 {
        let (is_w, l, i) = self.locate(index);
        if is_w {
            self.w[l][i]
        } else {
            self.b[l][i]
        }
    }

    pub fn set_flat(&mut self, index: usize, value: f64) {
        let (is_w, l, i) = self.locate(index);
        if is_w {
            self.w[l][i] = value;
        } else {
            self.b[l][i] = value;
        }
    }

    pub fn iter_flat(&self) -> impl Iterator<Item = f64> + '_ {
        self.w
            .iter()
            .zip(&self.b)
            .flat_map(|(w, b)| w.iter().chain(b.iter()))
            .copied()
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: f64, other: &NetParams) {
        for l in 0..self.w.len() {
            for (a, g) in self.w[l].iter_mut().zip(&other.w[l]) {
                *a += c * g;
            }
            for (a, g) in self.b[l].iter_mut().zip(&other.b[l]) {
                *a += c * g;
            }
        }
    }

    pub fn scale(&mut self, c: f64) {
        for l in 0..self.w.len() {
            self.w[l].iter_mut().for_each(|v| *v *= c);
            self.b[l].iter_mut().for_each(|v| *v *= c);
        }
    }

    pub fn dot(&self, other: &NetParams) -> f64 {
        self.iter_flat()
            .zip(other.iter_flat())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.iter_flat().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.iter_flat().all(|v| v.is_finite())
    }

    /// Text checkpoint: a header with dims and activations, then per layer
    /// the row-major weights and the biases, one line each. Floats use the
    /// shortest round-trip representation.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str("dims");
        for d in &self.spec.dims {
            write!(out, " {d}").unwrap();
        }
        out.push('\n');
        out.push_str("acts");
        for a in &self.spec.acts {
            write!(out, " {}", a.name()).unwrap();
        }
        out.push('\n');
        for l in 0..self.w.len() {
            out.push('W');
            for v in &self.w[l] {
                write!(out, " {v}").unwrap();
            }
            out.push('\n');
            out.push('b');
            for v in &self.b[l] {
                write!(out, " {v}").unwrap();
            }
            out.push('\n');
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        let bad = |msg: &str| Error::InvalidParameter(format!("checkpoint {path:?}: {msg}"));
        let dims_line = lines.next().ok_or_else(|| bad("missing dims line"))?;
        let dims: Vec<usize> = dims_line
            .strip_prefix("dims")
            .ok_or_else(|| bad("expected dims line"))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("bad dim")))
            .collect::<Result<_>>()?;
        let acts_line = lines.next().ok_or_else(|| bad("missing acts line"))?;
        let acts: Vec<Activation> = acts_line
            .strip_prefix("acts")
            .ok_or_else(|| bad("expected acts line"))?
            .split_whitespace()
            .map(Activation::parse)
            .collect::<Result<_>>()?;
        let spec = NetSpec::new(dims, acts)?;
        let mut params = NetParams::zeros(&spec);
        for l in 0..spec.num_layers() {
            for (prefix, dest, len) in [
                ("W", true, spec.dims[l + 1] * spec.dims[l]),
                ("b", false, spec.dims[l + 1]),
            ] {
                let line = lines.next().ok_or_else(|| bad("missing layer line"))?;
                let vals: Vec<f64> = line
                    .strip_prefix(prefix)
                    .ok_or_else(|| bad("bad layer prefix"))?
                    .split_whitespace()
                    .map(|t| t.parse().map_err(|_| bad("bad float")))
                    .collect::<Result<_>>()?;
                if vals.len() != len {
                    return Err(bad(&format!("layer {l} expected {len} values, got {}", vals.len())));
                }
                if dest {
                    params.w[l].copy_from_slice(&vals);
                } else {
                    params.b[l].copy_from_slice(&vals);
                }
            }
        }
        Ok(params)
    }
}

/// Pre- and post-activations retained from one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    input: Vec<f64>,
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.post.last().unwrap()
    }
}

/// Forward pass; returns the output and the cache needed by
/// [`net_backward`].
pub fn net_forward(params: &NetParams, input: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
    let spec = &params.spec;
    if input.len() != spec.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.input_dim(),
            got: input.len(),
            context: "net_forward input",
        });
    }
    let mut pre = Vec::with_capacity(spec.num_layers());
    let mut post = Vec::with_capacity(spec.num_layers());
    let mut cur = input.to_vec();
    for l in 0..spec.num_layers() {
        let (n_out, n_in) = (spec.dims[l + 1], spec.dims[l]);
        let w = &params.w[l];
        let mut z = params.b[l].clone();
        for o in 0..n_out {
            let row = &w[o * n_in..(o + 1) * n_in];
            let mut acc = 0.0;
            for i in 0..n_in {
                acc += row[i] * cur[i];
            }
            z[o] += acc;
        }
        let act = spec.acts[l];
        let a: Vec<f64> = z.iter().map(|&v| act.apply(v)).collect();
        pre.push(z);
        cur = a.clone();
        post.push(a);
    }
    Ok((
        cur,
        ForwardCache {
            input: input.to_vec(),
            pre,
            post,
        },
    ))
}

/// Reverse-mode pass: given the cotangent dS/d(output), returns
/// (dS/d(params), dS/d(input)).
pub fn net_backward(
    params: &NetParams,
    cache: &ForwardCache,
    cotangent: &[f64],
) -> Result<(NetParams, Vec<f64>)> {
    let spec = &params.spec;
    if cache.pre.len() != spec.num_layers()
        || cache.input.len() != spec.input_dim()
        || cache.pre.last().map(Vec::len) != Some(spec.output_dim())
    {
        return Err(Error::StaleCache(
            "cache shape does not match parameters".into(),
        ));
    }
    if cotangent.len() != spec.output_dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.output_dim(),
            got: cotangent.len(),
            context: "net_backward cotangent",
        });
    }
    let mut grads = NetParams::zeros(spec);
    let mut delta: Vec<f64> = cotangent.to_vec();
    for l in (0..spec.num_layers()).rev() {
        let (n_out, n_in) = (spec.dims[l + 1], spec.dims[l]);
        let act = spec.acts[l];
        for (d, &z) in delta.iter_mut().zip(&cache.pre[l]) {
            *d *= act.deriv(z);
        }
        let below: &[f64] = if l == 0 { &cache.input } else { &cache.post[l - 1] };
        let gw = &mut grads.w[l];
        for o in 0..n_out {
            let row = &mut gw[o * n_in..(o + 1) * n_in];
            for i in 0..n_in {
                row[i] = delta[o] * below[i];
            }
        }
        grads.b[l].copy_from_slice(&delta);
        // propagate to the layer below
        let w = &params.w[l];
        let mut next = vec![0.0; n_in];
        for o in 0..n_out {
            let row = &w[o * n_in..(o + 1) * n_in];
            for i in 0..n_in {
                next[i] += row[i] * delta[o];
            }
        }
        delta = next;
    }
    Ok((grads, delta))
}

/// Adam moment accumulators with bias correction.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: NetParams,
    v: NetParams,
    t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(spec: &NetSpec) -> Self {
        AdamState {
            m: NetParams::zeros(spec),
            v: NetParams::zeros(spec),
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// One Adam update of `params` against `grads`.
    pub fn step(&mut self, params: &mut NetParams, grads: &NetParams, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for l in 0..params.w.len() {
            for side in 0..2 {
                let (p, g, m, v) = if side == 0 {
                    (&mut params.w[l], &grads.w[l], &mut self.m.w[l], &mut self.v.w[l])
                } else {
                    (&mut params.b[l], &grads.b[l], &mut self.m.b[l], &mut self.v.b[l])
                };
                for i in 0..p.len() {
                    m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                    v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                    let mh = m[i] / c1;
                    let vh = v[i] / c2;
                    p[i] -= lr * mh / (vh.sqrt() + self.eps);
                }
            }
        }
    }
}

/// Plain stochastic gradient descent step.
pub fn sgd_step(params: &mut NetParams, grads: &NetParams, lr: f64) {
    params.axpy(-lr, grads);
}
