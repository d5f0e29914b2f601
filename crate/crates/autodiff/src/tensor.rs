use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Result};

/// Dense row-major tensor of `f64` values.
///
/// Extents are always positive and their product equals `data.len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.iter().any(|&d| d == 0) {
            return Err(shape_err(
                "tensor",
                format!("extents must be positive, got {shape:?}"),
            ));
        }
        let n: usize = shape.iter().product();
        if n != values.len() {
            return Err(shape_err(
                "tensor",
                format!("shape {shape:?} holds {n} values but {} given", values.len()),
            ));
        }
        Ok(Self { shape, values })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Self::new(shape.to_vec(), vec![0.0; n]).expect("zeros: invalid shape")
    }

    pub fn filled(shape: &[usize], value: f64) -> Self {
        let n = shape.iter().product();
        Self::new(shape.to_vec(), vec![value; n]).expect("filled: invalid shape")
    }

    /// A single-element tensor of shape `[1]`.
    pub fn scalar(value: f64) -> Self {
        Self {
            shape: vec![1],
            values: vec![value],
        }
    }

    /// A `[1, n]` row vector.
    pub fn row(values: Vec<f64>) -> Self {
        let n = values.len();
        Self::new(vec![1, n], values).expect("row: empty vector")
    }

    pub fn matrix(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        Self::new(vec![rows, cols], values)
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(&[n, n]);
        for i in 0..n {
            t.values[i * n + i] = 1.0;
        }
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_scalar(&self) -> bool {
        self.values.len() == 1
    }

    /// Value of a single-element tensor.
    ///
    /// Panics if the tensor holds more than one value.
    pub fn item(&self) -> f64 {
        assert!(self.is_scalar(), "item() on tensor of shape {:?}", self.shape);
        self.values[0]
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    /// Column count of a 2-D tensor, or 1 for a 1-D tensor.
    pub fn cols(&self) -> usize {
        if self.shape.len() >= 2 {
            self.shape[1]
        } else {
            1
        }
    }

    pub fn get2(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.shape[1] + c]
    }

    /// Borrow row `r` of a 2-D tensor.
    pub fn row_slice(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.values[r * c..(r + 1) * c]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn squared_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}
