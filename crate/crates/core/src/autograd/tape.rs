use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ops::conv::{conv2d_backward, conv2d_forward};
use crate::ops::elementwise::split_channels;
use crate::ops::svf::spatially_variant_filter_backward;
use crate::ops::{self, ConvGeom, ResizePlan};
use crate::tensor::{compensated_sum, Element, Shape4, Tensor4};

static NEXT_TAPE: AtomicU64 = AtomicU64::new(1);

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var {
    tape: u64,
    idx: usize,
}

impl Var {
    pub fn index(&self) -> usize {
        self.idx
    }
}

enum Op<T> {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, T),
    Relu(Var),
    Sigmoid(Var),
    Conv {
        input: Var,
        weight: Var,
        bias: Option<Var>,
        geom: ConvGeom,
    },
    Svf {
        hidden: Var,
        filters: Var,
        k: usize,
    },
    Resize(Var, Arc<ResizePlan>),
    Shuffle(Var, usize),
    Unshuffle(Var, usize),
    Concat(Vec<Var>),
    Sum(Var),
    Charbonnier {
        x: Var,
        y: Var,
        eps: T,
    },
}

struct Node<T> {
    value: Tensor4<T>,
    requires_grad: bool,
    op: Op<T>,
}

pub struct Tape<T> {
    id: u64,
    nodes: Vec<Node<T>>,
}

impl<T: Element> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Element> Tape<T> {
    pub fn new() -> Self {
        Self {
            id: NEXT_TAPE.fetch_add(1, Ordering::Relaxed),
            nodes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn check(&self, v: Var) -> Result<&Node<T>> {
        if v.tape != self.id {
            return Err(Error::Usage(format!(
                "value from tape {} used on tape {}",
                v.tape, self.id
            )));
        }
        self.nodes
            .get(v.idx)
            .ok_or_else(|| Error::Usage(format!("unknown node {}", v.idx)))
    }

    fn push(&mut self, value: Tensor4<T>, op: Op<T>, inputs: &[Var]) -> Var {
        let requires_grad = inputs.iter().any(|v| self.nodes[v.idx].requires_grad);
        self.nodes.push(Node {
            value,
            requires_grad,
            op,
        });
        Var {
            tape: self.id,
            idx: self.nodes.len() - 1,
        }
    }

    /// Record an input. Gradients are only produced for leaves created with
    /// `requires_grad`.
    pub fn leaf(&mut self, value: Tensor4<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            requires_grad,
            op: Op::Leaf,
        });
        Var {
            tape: self.id,
            idx: self.nodes.len() - 1,
        }
    }

    pub fn constant(&mut self, value: Tensor4<T>) -> Var {
        self.leaf(value, false)
    }

    pub fn variable(&mut self, value: Tensor4<T>) -> Var {
        self.leaf(value, true)
    }

    pub fn value(&self, v: Var) -> &Tensor4<T> {
        assert_eq!(v.tape, self.id, "value from a different tape");
        &self.nodes[v.idx].value
    }

    pub fn shape(&self, v: Var) -> Shape4 {
        self.value(v).shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.value(v);
        self.nodes[v.idx].requires_grad
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = ops::add(&self.check(a)?.value, &self.check(b)?.value)?;
        Ok(self.push(out, Op::Add(a, b), &[a, b]))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = ops::sub(&self.check(a)?.value, &self.check(b)?.value)?;
        Ok(self.push(out, Op::Sub(a, b), &[a, b]))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = ops::mul(&self.check(a)?.value, &self.check(b)?.value)?;
        Ok(self.push(out, Op::Mul(a, b), &[a, b]))
    }

    pub fn scale(&mut self, a: Var, s: T) -> Result<Var> {
        let out = self.check(a)?.value.map(|v| v * s);
        Ok(self.push(out, Op::Scale(a, s), &[a]))
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        let out = ops::relu(&self.check(a)?.value);
        Ok(self.push(out, Op::Relu(a), &[a]))
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        let out = ops::sigmoid(&self.check(a)?.value);
        Ok(self.push(out, Op::Sigmoid(a), &[a]))
    }

    /// Convolution; `bias` is any tensor holding `out_c` values.
    pub fn conv2d(&mut self, input: Var, weight: Var, bias: Option<Var>, geom: ConvGeom) -> Result<Var> {
        let x = &self.check(input)?.value;
        let w = &self.check(weight)?.value;
        let b = match bias {
            Some(b) => Some(self.check(b)?.value.data()),
            None => None,
        };
        let out = conv2d_forward(x, w, b, geom)?;
        let mut inputs = vec![input, weight];
        inputs.extend(bias);
        Ok(self.push(
            out,
            Op::Conv {
                input,
                weight,
                bias,
                geom,
            },
            &inputs,
        ))
    }

    pub fn spatially_variant_filter(&mut self, hidden: Var, filters: Var, k: usize) -> Result<Var> {
        let out = ops::spatially_variant_filter(&self.check(hidden)?.value, &self.check(filters)?.value, k)?;
        Ok(self.push(out, Op::Svf { hidden, filters, k }, &[hidden, filters]))
    }

    pub fn resize(&mut self, input: Var, plan: Arc<ResizePlan>) -> Result<Var> {
        let out = plan.apply(&self.check(input)?.value)?;
        Ok(self.push(out, Op::Resize(input, plan), &[input]))
    }

    pub fn pixel_shuffle(&mut self, input: Var, r: usize) -> Result<Var> {
        let out = ops::pixel_shuffle(&self.check(input)?.value, r)?;
        Ok(self.push(out, Op::Shuffle(input, r), &[input]))
    }

    pub fn pixel_unshuffle(&mut self, input: Var, r: usize) -> Result<Var> {
        let out = ops::pixel_unshuffle(&self.check(input)?.value, r)?;
        Ok(self.push(out, Op::Unshuffle(input, r), &[input]))
    }

    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let mut values = Vec::with_capacity(parts.len());
        for &p in parts {
            values.push(&self.check(p)?.value);
        }
        let out = ops::concat_channels(&values)?;
        Ok(self.push(out, Op::Concat(parts.to_vec()), parts))
    }

    /// Sum of all elements as a `(1, 1, 1, 1)` value.
    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let out = Tensor4::scalar(self.check(a)?.value.sum());
        Ok(self.push(out, Op::Sum(a), &[a]))
    }

    /// Mean over elements of `sqrt((x - y)^2 + eps^2)`.
    pub fn charbonnier(&mut self, x: Var, y: Var, eps: T) -> Result<Var> {
        let xv = &self.check(x)?.value;
        let yv = &self.check(y)?.value;
        let out = Tensor4::scalar(charbonnier_value(xv, yv, eps)?);
        Ok(self.push(out, Op::Charbonnier { x, y, eps }, &[x, y]))
    }

    /// Reverse sweep from a scalar node.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        let node = self.check(loss)?;
        if node.value.shape() != Shape4::scalar() {
            return Err(Error::Usage(format!(
                "backward needs a scalar loss, got shape {}",
                node.value.shape()
            )));
        }
        let mut grads: Vec<Option<Tensor4<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.idx] = Some(Tensor4::ones(Shape4::scalar()));
        for idx in (0..=loss.idx).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad || matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            self.backward_node(node, &g, &mut grads)?;
            grads[idx] = Some(g);
        }
        for (node, g) in self.nodes.iter().zip(grads.iter_mut()) {
            if node.requires_grad && g.is_none() {
                *g = Some(Tensor4::zeros(node.value.shape()));
            }
        }
        Ok(Gradients { tape: self.id, grads })
    }

    fn wants(&self, v: Var) -> bool {
        self.nodes[v.idx].requires_grad
    }

    fn backward_node(&self, node: &Node<T>, g: &Tensor4<T>, grads: &mut [Option<Tensor4<T>>]) -> Result<()> {
        let val = |v: Var| &self.nodes[v.idx].value;
        match &node.op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                if self.wants(*a) {
                    accumulate(grads, *a, g.clone());
                }
                if self.wants(*b) {
                    accumulate(grads, *b, g.clone());
                }
            }
            Op::Sub(a, b) => {
                if self.wants(*a) {
                    accumulate(grads, *a, g.clone());
                }
                if self.wants(*b) {
                    accumulate(grads, *b, g.map(|v| -v));
                }
            }
            Op::Mul(a, b) => {
                if self.wants(*a) {
                    accumulate(grads, *a, ops::mul(g, val(*b))?);
                }
                if self.wants(*b) {
                    accumulate(grads, *b, ops::mul(g, val(*a))?);
                }
            }
            Op::Scale(a, s) => accumulate(grads, *a, g.map(|v| v * *s)),
            Op::Relu(a) => {
                let ga = val(*a).zip_map(g, "relu_backward", |x, gv| if x > T::zero() { gv } else { T::zero() })?;
                accumulate(grads, *a, ga);
            }
            Op::Sigmoid(a) => {
                let ga = node
                    .value
                    .zip_map(g, "sigmoid_backward", |s, gv| gv * s * (T::one() - s))?;
                accumulate(grads, *a, ga);
            }
            Op::Conv {
                input,
                weight,
                bias,
                geom,
            } => {
                let cg = conv2d_backward(val(*input), val(*weight), g, *geom, self.wants(*input))?;
                if let Some(gx) = cg.input {
                    accumulate(grads, *input, gx);
                }
                if self.wants(*weight) {
                    accumulate(grads, *weight, cg.weight);
                }
                if let Some(b) = bias.filter(|b| self.wants(*b)) {
                    accumulate(grads, b, Tensor4::from_vec(val(b).shape(), cg.bias)?);
                }
            }
            Op::Svf { hidden, filters, k } => {
                let (gh, gf) = spatially_variant_filter_backward(val(*hidden), val(*filters), *k, g)?;
                if self.wants(*hidden) {
                    accumulate(grads, *hidden, gh);
                }
                if self.wants(*filters) {
                    accumulate(grads, *filters, gf);
                }
            }
            Op::Resize(a, plan) => accumulate(grads, *a, plan.apply_transpose(g)?),
            Op::Shuffle(a, r) => accumulate(grads, *a, ops::pixel_unshuffle(g, *r)?),
            Op::Unshuffle(a, r) => accumulate(grads, *a, ops::pixel_shuffle(g, *r)?),
            Op::Concat(parts) => {
                let widths: Vec<usize> = parts.iter().map(|p| val(*p).shape().c).collect();
                for (p, gp) in parts.iter().zip(split_channels(g, &widths)?) {
                    if self.wants(*p) {
                        accumulate(grads, *p, gp);
                    }
                }
            }
            Op::Sum(a) => {
                let gv = g.item()?;
                accumulate(grads, *a, Tensor4::full(val(*a).shape(), gv));
            }
            Op::Charbonnier { x, y, eps } => {
                let gv = g.item()?;
                let (xv, yv) = (val(*x), val(*y));
                let n = T::from_usize(xv.numel());
                let e2 = *eps * *eps;
                let gx = xv.zip_map(yv, "charbonnier_backward", |a, b| {
                    let d = a - b;
                    gv * d / ((d * d + e2).sqrt() * n)
                })?;
                if self.wants(*y) {
                    accumulate(grads, *y, gx.map(|v| -v));
                }
                if self.wants(*x) {
                    accumulate(grads, *x, gx);
                }
            }
        }
        Ok(())
    }
}

fn accumulate<T: Element>(grads: &mut [Option<Tensor4<T>>], v: Var, g: Tensor4<T>) {
    match &mut grads[v.idx] {
        Some(existing) => {
            for (e, x) in existing.data_mut().iter_mut().zip(g.data()) {
                *e += *x;
            }
        }
        slot @ None => *slot = Some(g),
    }
}

pub(crate) fn charbonnier_value<T: Element>(x: &Tensor4<T>, y: &Tensor4<T>, eps: T) -> Result<T> {
    if x.shape() != y.shape() {
        return Err(Error::dim("charbonnier", x.shape(), y.shape()));
    }
    let e2 = eps.as_f64() * eps.as_f64();
    let terms = x.data().iter().zip(y.data()).map(|(&a, &b)| {
        let d = a.as_f64() - b.as_f64();
        (d * d + e2).sqrt()
    });
    Ok(T::from_f64(compensated_sum(terms) / x.numel() as f64))
}

/// Result of [`Tape::backward`].
pub struct Gradients<T> {
    tape: u64,
    grads: Vec<Option<Tensor4<T>>>,
}

impl<T: Element> Gradients<T> {
    /// Gradient of the loss with respect to `v`; `None` for values that do
    /// not depend on any gradient-requiring leaf.
    pub fn get(&self, v: Var) -> Option<&Tensor4<T>> {
        if v.tape != self.tape {
            return None;
        }
        self.grads.get(v.idx).and_then(Option::as_ref)
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor4<T>> {
        if v.tape != self.tape {
            return None;
        }
        self.grads.get_mut(v.idx).and_then(Option::take)
    }
}
