//! Learning which discrete sequences are valid.
//!
//! A single-layer LSTM with per-character sigmoid heads estimates, for every
//! prefix, the probability that a uniformly random completion is a valid
//! arithmetic expression. Dropout masks double as posterior samples, which
//! drives an information-gain active learner for generating training data.

pub mod acquisition;
pub mod alphabet;
pub mod crosscheck;
pub mod error;
pub mod expr;
pub mod harness;
pub mod metrics;
pub mod oracle;
pub mod rng;
pub mod rnn;
pub mod sampling;
pub mod strategies;

pub use alphabet::{Alphabet, Sequence, DEFAULT_CHARS};
pub use error::{Error, Result};
