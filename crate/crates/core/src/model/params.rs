use rand::Rng;

use crate::error::{Error, Result};
use crate::tensor::{Element, Shape4, Tensor4};

/// Ordered, named collection of learnable tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamStore<T> {
    names: Vec<String>,
    tensors: Vec<Tensor4<T>>,
}

impl<T: Element> Default for ParamStore<T> {
    fn default() -> Self {
        Self {
            names: Vec::new(),
            tensors: Vec::new(),
        }
    }
}

impl<T: Element> ParamStore<T> {
    pub fn push(&mut self, name: impl Into<String>, tensor: Tensor4<T>) -> usize {
        self.names.push(name.into());
        self.tensors.push(tensor);
        self.tensors.len() - 1
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn get(&self, i: usize) -> &Tensor4<T> {
        &self.tensors[i]
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor4<T>] {
        &self.tensors
    }

    pub fn by_name(&self, name: &str) -> Option<&Tensor4<T>> {
        self.names.iter().position(|n| n == name).map(|i| &self.tensors[i])
    }

    /// Replace tensor `i`, keeping its shape.
    pub fn set(&mut self, i: usize, tensor: Tensor4<T>) -> Result<()> {
        if tensor.shape() != self.tensors[i].shape() {
            return Err(Error::dim("ParamStore::set", self.tensors[i].shape(), tensor.shape()));
        }
        self.tensors[i] = tensor;
        Ok(())
    }

    pub(crate) fn tensor_mut(&mut self, i: usize) -> &mut Tensor4<T> {
        &mut self.tensors[i]
    }

    pub fn scalar_count(&self) -> usize {
        self.tensors.iter().map(Tensor4::numel).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor4<T>)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }
}

/// Indices of a convolution's weight and bias in a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvLayer {
    pub weight: usize,
    pub bias: usize,
}

/// Name and shape of every parameter, in store order.
#[derive(Clone, Debug, Default)]
pub(crate) struct ParamSpecs {
    pub specs: Vec<(String, Shape4)>,
}

impl ParamSpecs {
    /// Register a square `k x k` convolution.
    pub fn conv(&mut self, name: &str, out_c: usize, in_c: usize, k: usize) -> ConvLayer {
        let weight = self.specs.len();
        self.specs.push((format!("{name}.weight"), Shape4::new(out_c, in_c, k, k)));
        self.specs.push((format!("{name}.bias"), Shape4::new(1, out_c, 1, 1)));
        ConvLayer { weight, bias: weight + 1 }
    }

    /// Uniform weights in `+-1/sqrt(fan_in)`, zero biases.
    pub fn init<T: Element>(&self, rng: &mut impl Rng) -> ParamStore<T> {
        let mut store = ParamStore::default();
        for (name, shape) in &self.specs {
            let t = if name.ends_with(".bias") {
                Tensor4::zeros(*shape)
            } else {
                let fan_in = (shape.c * shape.h * shape.w) as f64;
                let bound = fan_in.sqrt().recip();
                Tensor4::uniform(*shape, -bound, bound, rng)
            };
            store.push(name.clone(), t);
        }
        store
    }

    pub fn zeros<T: Element>(&self) -> ParamStore<T> {
        let mut store = ParamStore::default();
        for (name, shape) in &self.specs {
            store.push(name.clone(), Tensor4::zeros(*shape));
        }
        store
    }

    pub fn matches<T: Element>(&self, store: &ParamStore<T>) -> Result<()> {
        if store.len() != self.specs.len() {
            return Err(Error::Usage(format!(
                "parameter count mismatch: model expects {} tensors, got {}",
                self.specs.len(),
                store.len()
            )));
        }
        for ((name, shape), (got_name, t)) in self.specs.iter().zip(store.iter()) {
            if name != got_name || *shape != t.shape() {
                return Err(Error::Usage(format!(
                    "parameter {got_name} {} does not match expected {name} {shape}",
                    t.shape()
                )));
            }
        }
        Ok(())
    }
}
