//! Attention-based translation models trained toward adequacy.
//!
//! A recurrent encoder-decoder generator is trained by maximum likelihood,
//! by policy gradient against coverage-difference, BLEU, chrF3 or learned
//! discriminator rewards, or by minimum risk training. Everything runs on
//! the small tape-based autodiff engine in `adequa-autodiff`.

pub mod checkpoint;
pub mod corpus;
pub mod discriminator;
pub mod error;
pub mod eval;
pub mod generator;
pub mod metrics;
pub mod nn;
pub mod optim;
pub mod params;
pub mod train;
pub mod vocab;

pub use error::{CoreError, Result};
pub use generator::{AttentionMatrix, Generator, GeneratorConfig, TranslationResult};
pub use vocab::{TokenId, Vocabulary};
