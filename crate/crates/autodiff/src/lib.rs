//! Tape-based reverse-mode automatic differentiation over dense `f64` tensors.
//!
//! Build a [`Tape`], register inputs with [`Tape::param`] or
//! [`Tape::constant`], compose ops, then call [`Tape::backward`] on a
//! single-element loss:
//!
//! ```
//! use adequa_autodiff::{Tape, Tensor};
//!
//! let mut tape = Tape::new();
//! let w = tape.param(Tensor::row(vec![2.0])).unwrap();
//! let x = tape.constant(Tensor::row(vec![3.0])).unwrap();
//! let t = tape.constant(Tensor::row(vec![5.0])).unwrap();
//! let wx = tape.mul(w, x).unwrap();
//! let loss = tape.squared_error(wx, t).unwrap();
//! let grads = tape.backward(loss).unwrap();
//! assert_eq!(grads.get(w).unwrap().values(), &[6.0]);
//! ```
//!
//! A tape is single-use: after `backward` it must be [`Tape::reset`].

mod error;
pub mod gradcheck;
mod tape;
mod tensor;

pub use error::{AutodiffError, Result};
pub use tape::{log_sigmoid, log_sum_exp, sigmoid, softmax_into, Gradients, Tape, Var};
pub use tensor::Tensor;
