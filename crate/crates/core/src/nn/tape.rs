//! Reverse-mode differentiation over a linear tape.
//!
//! Every operation appends a node holding its value; [`Tape::backward`]
//! walks the tape once in reverse. A tape can be differentiated only once;
//! record a new forward pass to differentiate again.

use super::ops::{self, AttentionCache, AttentionGraph};
use super::tensor::{matmul, matmul_nt, matmul_tn, Tensor};
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

enum Op<'g> {
    Leaf,
    MatMul(Var, Var),
    AddBias(Var, Var),
    Selu(Var),
    PoolChannels(Var, usize),
    GlobalMean(Var),
    Attention {
        z: Var,
        a: Var,
        graph: &'g AttentionGraph,
        cache: AttentionCache,
    },
    Hinge {
        scores: Var,
        class: usize,
    },
}

struct Node<'g> {
    value: Tensor,
    op: Op<'g>,
    requires_grad: bool,
}

#[derive(Default)]
pub struct Tape<'g> {
    nodes: Vec<Node<'g>>,
    consumed: bool,
}

/// Gradients indexed by [`Var`]; `None` for values that need none.
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// The gradient of `v`, or zeros of the given shape when nothing flowed.
    pub fn take_or_zeros(&mut self, v: Var, rows: usize, cols: usize) -> Tensor {
        self.grads
            .get_mut(v.0)
            .and_then(Option::take)
            .unwrap_or_else(|| Tensor::zeros(rows, cols))
    }
}

fn accumulate(slot: &mut Option<Tensor>, g: Tensor) {
    match slot {
        Some(acc) => acc.add_assign(&g),
        None => *slot = Some(g),
    }
}

impl<'g> Tape<'g> {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, value: Tensor, op: Op<'g>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// A trainable leaf.
    pub fn param(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf, true)
    }

    /// A leaf that receives no gradient (inputs, features).
    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = matmul(self.value(a), self.value(b))?;
        let rg = self.needs(&[a, b]);
        Ok(self.push(value, Op::MatMul(a, b), rg))
    }

    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let value = ops::add_row_bias(self.value(x), self.value(bias))?;
        let rg = self.needs(&[x, bias]);
        Ok(self.push(value, Op::AddBias(x, bias), rg))
    }

    pub fn selu(&mut self, x: Var) -> Var {
        let value = ops::selu(self.value(x));
        let rg = self.needs(&[x]);
        self.push(value, Op::Selu(x), rg)
    }

    pub fn mean_pool_channels(&mut self, x: Var, window: usize) -> Result<Var> {
        let value = ops::mean_pool_channels(self.value(x), window)?;
        let rg = self.needs(&[x]);
        Ok(self.push(value, Op::PoolChannels(x, window), rg))
    }

    pub fn global_mean_pool(&mut self, x: Var) -> Result<Var> {
        let value = ops::global_mean_pool(self.value(x))?;
        let rg = self.needs(&[x]);
        Ok(self.push(value, Op::GlobalMean(x), rg))
    }

    pub fn attention(&mut self, z: Var, a: Var, graph: &'g AttentionGraph) -> Result<Var> {
        let (value, cache) = ops::attention_forward(self.value(z), self.value(a), graph)?;
        let rg = self.needs(&[z, a]);
        Ok(self.push(value, Op::Attention { z, a, graph, cache }, rg))
    }

    /// `x · w + b`.
    pub fn affine(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let xw = self.matmul(x, w)?;
        self.add_bias(xw, b)
    }

    pub fn hinge(&mut self, scores: Var, class: usize) -> Result<Var> {
        let loss = ops::hinge_loss(self.value(scores).data(), class)?;
        let rg = self.needs(&[scores]);
        Ok(self.push(Tensor::scalar(loss), Op::Hinge { scores, class }, rg))
    }

    /// Gradients of the scalar `loss` with respect to every recorded value.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients> {
        if self.consumed {
            return Err(Error::TapeConsumed);
        }
        if self.value(loss).len() != 1 {
            return Err(Error::Shape(format!("loss must be scalar, got {:?}", self.value(loss).shape())));
        }
        self.consumed = true;

        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::scalar(1.0));
        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad || matches!(node.op, Op::Leaf) {
                continue;
            }
            // intermediate gradients are released once propagated
            let Some(g) = grads[idx].take() else { continue };
            let wants = |v: Var| self.nodes[v.0].requires_grad;
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    if wants(*a) {
                        accumulate(&mut grads[a.0], matmul_nt(&g, self.value(*b)));
                    }
                    if wants(*b) {
                        accumulate(&mut grads[b.0], matmul_tn(self.value(*a), &g));
                    }
                }
                Op::AddBias(x, b) => {
                    if wants(*b) {
                        let mut db = vec![0.0; g.cols()];
                        for i in 0..g.rows() {
                            for (d, v) in db.iter_mut().zip(g.row(i)) {
                                *d += v;
                            }
                        }
                        accumulate(&mut grads[b.0], Tensor::row_vector(db));
                    }
                    if wants(*x) {
                        accumulate(&mut grads[x.0], g);
                    }
                }
                Op::Selu(x) => {
                    let input = self.value(*x);
                    let mut dx = g;
                    for (d, &xi) in dx.data_mut().iter_mut().zip(input.data()) {
                        *d *= ops::selu_derivative(xi);
                    }
                    accumulate(&mut grads[x.0], dx);
                }
                Op::PoolChannels(x, window) => {
                    accumulate(&mut grads[x.0], ops::mean_pool_channels_backward(&g, *window));
                }
                Op::GlobalMean(x) => {
                    let input = self.value(*x);
                    let inv = 1.0 / input.rows() as f64;
                    let mut dx = Tensor::zeros(input.rows(), input.cols());
                    for i in 0..input.rows() {
                        for (d, v) in dx.row_mut(i).iter_mut().zip(g.data()) {
                            *d = v * inv;
                        }
                    }
                    accumulate(&mut grads[x.0], dx);
                }
                Op::Attention { z, a, graph, cache } => {
                    let (dz, da) = ops::attention_backward(self.value(*z), self.value(*a), graph, cache, &g);
                    if wants(*z) {
                        accumulate(&mut grads[z.0], dz);
                    }
                    if wants(*a) {
                        accumulate(&mut grads[a.0], da);
                    }
                }
                Op::Hinge { scores, class } => {
                    let s = self.value(*scores).data();
                    let margin = s[*class] - s[1 - *class];
                    let mut ds = vec![0.0; 2];
                    // subgradient zero at margin == 1
                    if 1.0 - margin > 0.0 {
                        ds[*class] = -g.data()[0];
                        ds[1 - *class] = g.data()[0];
                    }
                    accumulate(&mut grads[scores.0], Tensor::row_vector(ds));
                }
            }
        }
        Ok(Gradients { grads })
    }
}
