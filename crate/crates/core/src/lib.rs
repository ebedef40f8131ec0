//! Latent Attention classifiers for translating natural-language If-Then
//! recipe descriptions into trigger/action function labels.
//!
//! The crate is organized bottom-up:
//!
//! - [`corpus`]: recipe ingestion, tokenization, vocabulary, fixed-length
//!   encoding and the skewed/rebalanced one-shot datasets.
//! - [`tensor`]: dense 64-bit kernels, parameter stores, checkpoints and a
//!   central-difference gradient checker.
//! - [`embeddings`]: dictionary and bidirectional-LSTM token embeddings.
//! - [`models`]: the six classifiers ({dictionary, BDLSTM} x {no attention,
//!   standard attention, Latent Attention}) with hand-written backward passes.
//! - [`training`]: Adam, gradient clipping, minibatch training and two-step
//!   training with frozen attention parameters.
//! - [`eval`]: metrics, ensembling, argument prediction and the synthetic
//!   corpus generator.

pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod models;
pub mod rng;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
