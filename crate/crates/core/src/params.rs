use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tape::{Gradients, Tape, Var};
use crate::tensor::Tensor;

/// Named learnable tensors in a fixed order. The position of a tensor is the
/// key it is registered under on a [`Tape`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamStore {
    names: Vec<String>,
    values: Vec<Tensor>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, value: Tensor) -> usize {
        self.names.push(name.into());
        self.values.push(value);
        self.values.len() - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.names[idx]
    }

    pub fn get(&self, idx: usize) -> &Tensor {
        &self.values[idx]
    }

    pub fn get_mut(&mut self, idx: usize) -> &mut Tensor {
        &mut self.values[idx]
    }

    pub fn by_name(&self, name: &str) -> Option<&Tensor> {
        self.index_of(name).map(|i| &self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.values)
    }

    pub fn values(&self) -> &[Tensor] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Tensor] {
        &mut self.values
    }

    pub fn num_scalars(&self) -> usize {
        self.values.iter().map(Tensor::len).sum()
    }

    /// Registers every tensor on `tape` under its index.
    pub fn bind(&self, tape: &mut Tape) -> Vec<Var> {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| tape.param(i, v.clone()))
            .collect()
    }

    pub fn zeros_like(&self) -> Vec<Tensor> {
        self.values
            .iter()
            .map(|v| Tensor::zeros(v.rows(), v.cols()))
            .collect()
    }

    /// Gradients aligned with this store, zero where the tape had none.
    pub fn align(&self, grads: &Gradients) -> Result<Vec<Tensor>> {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| match grads.get(i) {
                Some(g) if g.shape() == v.shape() => Ok(g.clone()),
                Some(g) => Err(Error::shape(
                    "align",
                    format!("gradient {:?} for {} {:?}", g.shape(), self.names[i], v.shape()),
                )),
                None => Ok(Tensor::zeros(v.rows(), v.cols())),
            })
            .collect()
    }
}
