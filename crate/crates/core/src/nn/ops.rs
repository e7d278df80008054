//! Forward and backward kernels. The tape in [`super::tape`] records these;
//! the free functions here are also usable on their own.

use serde::{Deserialize, Serialize};

use super::tensor::{matmul, Tensor};
use crate::data::Edge;
use crate::error::{Error, Result};

pub const SELU_LAMBDA: f64 = 1.050_700_987_355_480_5;
pub const SELU_ALPHA: f64 = 1.673_263_242_354_377_2;
pub const LEAKY_SLOPE: f64 = 0.2;
/// Width of the per-edge relation flags appended to attention inputs.
pub const EDGE_FLAGS: usize = 4;

pub fn selu_scalar(x: f64) -> f64 {
    if x > 0.0 {
        SELU_LAMBDA * x
    } else {
        SELU_LAMBDA * SELU_ALPHA * x.exp_m1()
    }
}

pub fn selu_derivative(x: f64) -> f64 {
    if x > 0.0 {
        SELU_LAMBDA
    } else {
        SELU_LAMBDA * SELU_ALPHA * x.exp()
    }
}

pub fn selu(x: &Tensor) -> Tensor {
    x.map(selu_scalar)
}

fn leaky_relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        LEAKY_SLOPE * x
    }
}

fn leaky_relu_derivative(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        LEAKY_SLOPE
    }
}

/// Adds `bias` (1 × cols) to every row of `x`.
pub fn add_row_bias(x: &Tensor, bias: &Tensor) -> Result<Tensor> {
    if bias.rows() != 1 || bias.cols() != x.cols() {
        return Err(Error::Shape(format!(
            "bias {:?} for input {:?}",
            bias.shape(),
            x.shape()
        )));
    }
    let mut out = x.clone();
    for i in 0..out.rows() {
        for (o, b) in out.row_mut(i).iter_mut().zip(bias.data()) {
            *o += b;
        }
    }
    Ok(out)
}

/// `x · w + b`; activation is applied by the caller.
pub fn fc_forward(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    add_row_bias(&matmul(x, w)?, b)
}

/// Averages each run of `window` consecutive channels.
pub fn mean_pool_channels(h: &Tensor, window: usize) -> Result<Tensor> {
    if window == 0 || h.cols() % window != 0 {
        return Err(Error::Shape(format!("width {} not divisible by window {window}", h.cols())));
    }
    let out_cols = h.cols() / window;
    let mut out = Tensor::zeros(h.rows(), out_cols);
    let inv = 1.0 / window as f64;
    for i in 0..h.rows() {
        let src = h.row(i);
        for (k, o) in out.row_mut(i).iter_mut().enumerate() {
            *o = src[k * window..(k + 1) * window].iter().sum::<f64>() * inv;
        }
    }
    Ok(out)
}

pub(crate) fn mean_pool_channels_backward(grad: &Tensor, window: usize) -> Tensor {
    let mut out = Tensor::zeros(grad.rows(), grad.cols() * window);
    let inv = 1.0 / window as f64;
    for i in 0..grad.rows() {
        let g = grad.row(i).to_vec();
        for (c, o) in out.row_mut(i).iter_mut().enumerate() {
            *o = g[c / window] * inv;
        }
    }
    out
}

/// Column means over all rows (graph readout).
pub fn global_mean_pool(h: &Tensor) -> Result<Tensor> {
    if h.rows() == 0 {
        return Err(Error::InvalidInput("mean pool over zero nodes".into()));
    }
    let mut out = vec![0.0; h.cols()];
    for i in 0..h.rows() {
        for (o, x) in out.iter_mut().zip(h.row(i)) {
            *o += x;
        }
    }
    let n = h.rows() as f64;
    out.iter_mut().for_each(|o| *o /= n);
    Ok(Tensor::row_vector(out))
}

pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// `max(0, 1 - (s_correct - s_other))` for a two-class score vector.
pub fn hinge_loss(scores: &[f64], class: usize) -> Result<f64> {
    if scores.len() != 2 || class > 1 {
        return Err(Error::Shape(format!("hinge needs 2 scores and class 0/1, got {} / {class}", scores.len())));
    }
    let margin = scores[class] - scores[1 - class];
    Ok((1.0 - margin).max(0.0))
}

/// Neighbourhoods with relation flags oriented from the receiving node:
/// entry `(j, f)` in the list of `i` carries `flags_ij`. Every list starts
/// with the self loop, whose flags are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionGraph {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    flags: Vec<[f64; EDGE_FLAGS]>,
}

impl AttentionGraph {
    pub fn new(num_nodes: usize, edges: &[Edge]) -> Result<Self> {
        let mut lists: Vec<Vec<(usize, [f64; EDGE_FLAGS])>> =
            (0..num_nodes).map(|i| vec![(i, [0.0; EDGE_FLAGS])]).collect();
        for e in edges {
            if e.i == e.j || e.i >= num_nodes || e.j >= num_nodes {
                return Err(Error::InvalidInput(format!(
                    "edge ({}, {}) invalid for {num_nodes} nodes",
                    e.i, e.j
                )));
            }
            lists[e.i].push((e.j, e.flags.to_array()));
            lists[e.j].push((e.i, e.flags.reversed().to_array()));
        }
        let mut offsets = Vec::with_capacity(num_nodes + 1);
        let mut neighbors = Vec::new();
        let mut flags = Vec::new();
        offsets.push(0);
        for list in &mut lists {
            list[1..].sort_by_key(|&(j, _)| j);
            if list[1..].windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::InvalidInput("duplicate edge".into()));
            }
            for &(j, f) in list.iter() {
                neighbors.push(j);
                flags.push(f);
            }
            offsets.push(neighbors.len());
        }
        Ok(Self {
            offsets,
            neighbors,
            flags,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn neighborhood(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn neighbor(&self, slot: usize) -> usize {
        self.neighbors[slot]
    }

    pub fn flags(&self, slot: usize) -> &[f64; EDGE_FLAGS] {
        &self.flags[slot]
    }
}

/// Per-slot pre-activation scores and attention weights from the forward pass.
#[derive(Debug, Clone)]
pub struct AttentionCache {
    pub scores: Vec<f64>,
    pub alpha: Vec<f64>,
}

fn check_attention_shapes(z: &Tensor, a: &Tensor, graph: &AttentionGraph) -> Result<()> {
    if z.rows() != graph.num_nodes() {
        return Err(Error::Shape(format!("{} rows for {} nodes", z.rows(), graph.num_nodes())));
    }
    if a.len() != 2 * z.cols() + EDGE_FLAGS {
        return Err(Error::Shape(format!(
            "attention vector of {} for width {}",
            a.len(),
            z.cols()
        )));
    }
    Ok(())
}

/// `out_i = Σ_j α_ij z_j` with `α_ij = softmax_j(leaky_relu(a·[z_i ‖ z_j ‖ flags_ij]))`.
pub fn attention_forward(z: &Tensor, a: &Tensor, graph: &AttentionGraph) -> Result<(Tensor, AttentionCache)> {
    check_attention_shapes(z, a, graph)?;
    let f = z.cols();
    let av = a.data();
    let (a_src, rest) = av.split_at(f);
    let (a_dst, a_flag) = rest.split_at(f);
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    let src_term: Vec<f64> = (0..z.rows()).map(|i| dot(a_src, z.row(i))).collect();
    let dst_term: Vec<f64> = (0..z.rows()).map(|i| dot(a_dst, z.row(i))).collect();

    let slots = graph.neighbors.len();
    let mut scores = vec![0.0; slots];
    let mut alpha = vec![0.0; slots];
    let mut out = Tensor::zeros(z.rows(), f);
    for i in 0..graph.num_nodes() {
        let range = graph.neighborhood(i);
        let mut max = f64::NEG_INFINITY;
        for s in range.clone() {
            let j = graph.neighbor(s);
            let pre = src_term[i] + dst_term[j] + dot(a_flag, graph.flags(s));
            scores[s] = pre;
            max = max.max(leaky_relu(pre));
        }
        let mut total = 0.0;
        for s in range.clone() {
            alpha[s] = (leaky_relu(scores[s]) - max).exp();
            total += alpha[s];
        }
        let row = out.row_mut(i);
        for s in range {
            alpha[s] /= total;
            for (o, x) in row.iter_mut().zip(z.row(graph.neighbor(s))) {
                *o += alpha[s] * x;
            }
        }
    }
    Ok((out, AttentionCache { scores, alpha }))
}

/// Gradients of [`attention_forward`] with respect to `z` and `a`.
pub(crate) fn attention_backward(
    z: &Tensor,
    a: &Tensor,
    graph: &AttentionGraph,
    cache: &AttentionCache,
    grad_out: &Tensor,
) -> (Tensor, Tensor) {
    let f = z.cols();
    let av = a.data();
    let (a_src, rest) = av.split_at(f);
    let (a_dst, _) = rest.split_at(f);
    let mut dz = Tensor::zeros(z.rows(), f);
    let mut da = vec![0.0; a.len()];
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();

    let mut d_alpha = Vec::new();
    for i in 0..graph.num_nodes() {
        let range = graph.neighborhood(i);
        let g_i = grad_out.row(i);
        d_alpha.clear();
        let mut weighted = 0.0;
        for s in range.clone() {
            let j = graph.neighbor(s);
            let d = dot(g_i, z.row(j));
            weighted += cache.alpha[s] * d;
            d_alpha.push(d);
            for (dst, g) in dz.row_mut(j).iter_mut().zip(g_i) {
                *dst += cache.alpha[s] * g;
            }
        }
        let mut d_src_term = 0.0;
        for (k, s) in range.enumerate() {
            let j = graph.neighbor(s);
            let d_score = cache.alpha[s] * (d_alpha[k] - weighted) * leaky_relu_derivative(cache.scores[s]);
            if d_score == 0.0 {
                continue;
            }
            d_src_term += d_score;
            for (dst, x) in da[f..2 * f].iter_mut().zip(z.row(j)) {
                *dst += d_score * x;
            }
            for (dst, x) in da[2 * f..].iter_mut().zip(graph.flags(s)) {
                *dst += d_score * x;
            }
            for (dst, w) in dz.row_mut(j).iter_mut().zip(a_dst) {
                *dst += d_score * w;
            }
        }
        for (dst, x) in da[..f].iter_mut().zip(z.row(i)) {
            *dst += d_src_term * x;
        }
        for (dst, w) in dz.row_mut(i).iter_mut().zip(a_src) {
            *dst += d_src_term * w;
        }
    }
    (dz, Tensor::row_vector(da))
}

/// Parameters of one graph-attention convolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatParams {
    /// `F_in × F_out` projection.
    pub w: Tensor,
    /// `1 × (2·F_out + 4)`: source part, neighbour part, edge-flag part.
    pub a: Tensor,
    /// `1 × F_out`.
    pub bias: Tensor,
}

/// One head of graph attention: project, attend over `N(i) ∪ {i}`, add bias.
pub fn gat_forward(h: &Tensor, graph: &AttentionGraph, params: &GatParams) -> Result<Tensor> {
    if h.cols() != params.w.rows() {
        return Err(Error::Shape(format!(
            "input width {} vs projection {:?}",
            h.cols(),
            params.w.shape()
        )));
    }
    let z = matmul(h, &params.w)?;
    let (out, _) = attention_forward(&z, &params.a, graph)?;
    add_row_bias(&out, &params.bias)
}
