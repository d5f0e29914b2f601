//! Named parameter tensors and aligned gradient sets.

use adequa_autodiff::{Gradients, Tape, Tensor, Var};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};

/// Ordered collection of named tensors.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) -> usize {
        let name = name.into();
        assert!(self.index_of(&name).is_none(), "duplicate parameter {name}");
        self.names.push(name);
        self.tensors.push(tensor);
        self.tensors.len() - 1
    }

    /// Register a tensor with entries drawn uniformly from `[-scale, scale]`.
    pub fn insert_uniform(&mut self, name: impl Into<String>, shape: &[usize], scale: f64, rng: &mut impl Rng) -> usize {
        let n = shape.iter().product();
        let vals = (0..n).map(|_| rng.gen_range(-scale..=scale)).collect();
        self.insert(name, Tensor::new(shape.to_vec(), vals).expect("valid parameter shape"))
    }

    pub fn insert_zeros(&mut self, name: impl Into<String>, shape: &[usize]) -> usize {
        self.insert(name, Tensor::zeros(shape))
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.index_of(name).map(|i| &self.tensors[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.index_of(name).map(|i| &mut self.tensors[i])
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    pub fn num_values(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(Tensor::is_finite)
    }

    /// Every value identical down to the bit pattern.
    pub fn bit_identical(&self, other: &ParamSet) -> bool {
        self.names == other.names
            && self.tensors.iter().zip(&other.tensors).all(|(a, b)| {
                a.shape() == b.shape()
                    && a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits())
            })
    }

    /// Flatten all values in parameter order.
    pub fn flat(&self) -> Vec<f64> {
        self.tensors.iter().flat_map(|t| t.values().iter().copied()).collect()
    }

    pub fn set_flat(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.num_values());
        let mut off = 0;
        for t in &mut self.tensors {
            let n = t.len();
            t.values_mut().copy_from_slice(&values[off..off + n]);
            off += n;
        }
    }

    /// Register every tensor on `tape`.
    pub fn bind(&self, tape: &mut Tape, trainable: bool) -> Result<Bound> {
        let vars = self
            .tensors
            .iter()
            .map(|t| tape.leaf(t.clone(), trainable))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Bound {
            vars,
            names: self.names.clone(),
        })
    }

    /// `theta <- theta - lr * update`.
    pub fn descend(&mut self, update: &GradSet, lr: f64) {
        assert_eq!(update.0.len(), self.tensors.len());
        for (t, g) in self.tensors.iter_mut().zip(&update.0) {
            for (v, d) in t.values_mut().iter_mut().zip(g.values()) {
                *v -= lr * d;
            }
        }
    }
}

/// Parameters registered on one tape.
#[derive(Debug, Clone)]
pub struct Bound {
    vars: Vec<Var>,
    names: Vec<String>,
}

impl Bound {
    pub fn var(&self, name: &str) -> Result<Var> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.vars[i])
            .ok_or_else(|| contract(format!("unknown parameter {name}")))
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    /// Gradients for each bound parameter, aligned with the parameter set.
    pub fn collect(&self, grads: &Gradients, params: &ParamSet) -> GradSet {
        GradSet(
            self.vars
                .iter()
                .zip(params.tensors())
                .map(|(&v, t)| grads.get(v).cloned().unwrap_or_else(|| Tensor::zeros(t.shape())))
                .collect(),
        )
    }
}

/// One tensor per parameter, in parameter order.
#[derive(Debug, Clone, PartialEq)]
pub struct GradSet(pub Vec<Tensor>);

impl GradSet {
    pub fn zeros_like(params: &ParamSet) -> Self {
        Self(params.tensors().iter().map(|t| Tensor::zeros(t.shape())).collect())
    }

    pub fn add_assign(&mut self, other: &GradSet) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            for (x, y) in a.values_mut().iter_mut().zip(b.values()) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, c: f64) {
        for t in &mut self.0 {
            t.values_mut().iter_mut().for_each(|v| *v *= c);
        }
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(Tensor::squared_norm).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|t| t.values().iter().all(|&v| v == 0.0))
    }

    /// Rescale to global norm `max_norm` if larger; returns the norm before clipping.
    pub fn clip(&mut self, max_norm: f64) -> f64 {
        let n = self.norm();
        if max_norm > 0.0 && n > max_norm {
            self.scale(max_norm / n);
        }
        n
    }

    pub fn flat(&self) -> Vec<f64> {
        self.0.iter().flat_map(|t| t.values().iter().copied()).collect()
    }
}
