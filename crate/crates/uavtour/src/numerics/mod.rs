//! Dense f64 tensors with reverse-mode differentiation and an Adam optimizer.
//!
//! The tape is rebuilt per rollout (decode length varies with the number of
//! clusters), so graphs are dynamic: operations append nodes to a [`Tape`],
//! `backward` walks the nodes in reverse, and gradients of parameter leaves
//! are harvested into [`Param`] buffers afterwards.
//!
//! Everything is 64-bit. There is no broadcasting beyond scalar * tensor;
//! shape coercions (e.g. replicating a column across columns) are written as
//! explicit matrix products so shape bugs surface as dimension errors.

mod adam;
mod tape;

pub use adam::AdamState;
pub use tape::{Tape, Var};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },
    #[error("backward requires a scalar loss, got {numel} elements")]
    NonScalarLoss { numel: usize },
    #[error("softmax input has no finite entries (all masked)")]
    AllMasked,
    #[error("log of non-positive probability {value} at index {index}")]
    NonPositiveLog { index: usize, value: f64 },
    #[error("non-finite gradient encountered during optimizer step")]
    NonFiniteGradient,
    #[error("invalid tensor: {0}")]
    InvalidTensor(String),
}

pub type Result<T> = std::result::Result<T, NumericsError>;

/// Row-major dense tensor of f64 values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(NumericsError::InvalidTensor(format!(
                "shape {:?} implies {} elements, data has {}",
                shape,
                numel,
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let numel = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; numel],
        }
    }

    pub fn scalar(value: f64) -> Self {
        Self {
            shape: vec![1],
            data: vec![value],
        }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Self {
            shape: vec![data.len()],
            data,
        }
    }

    /// A `rows x cols` matrix from row-major data.
    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(vec![rows, cols], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_scalar(&self) -> bool {
        self.numel() == 1
    }

    /// Rows when interpreted as a matrix (1 for vectors/scalars).
    pub fn rows(&self) -> usize {
        match self.shape.len() {
            2 => self.shape[0],
            _ => 1,
        }
    }

    /// Columns when interpreted as a matrix.
    pub fn cols(&self) -> usize {
        match self.shape.len() {
            2 => self.shape[1],
            1 => self.shape[0],
            _ => 1,
        }
    }

    pub fn get2(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols() + col]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// A learnable tensor: value plus an accumulated gradient of the same shape.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Param {
    pub value: Tensor,
    #[serde(skip, default = "Tensor::default_grad")]
    pub grad: Tensor,
}

impl Tensor {
    fn default_grad() -> Tensor {
        Tensor::zeros(vec![0])
    }
}

impl Param {
    pub fn new(value: Tensor) -> Self {
        let grad = Tensor::zeros(value.shape().to_vec());
        Self { value, grad }
    }

    pub fn zero_grad(&mut self) {
        for g in self.grad.data_mut() {
            *g = 0.0;
        }
    }

    pub fn accumulate_grad(&mut self, g: &[f64]) {
        debug_assert_eq!(g.len(), self.grad.numel());
        for (dst, src) in self.grad.data_mut().iter_mut().zip(g) {
            *dst += src;
        }
    }

    /// Restores the grad buffer after deserialization (grads are not persisted).
    pub fn reset_grad_shape(&mut self) {
        if self.grad.shape() != self.value.shape() {
            self.grad = Tensor::zeros(self.value.shape().to_vec());
        }
    }
}
