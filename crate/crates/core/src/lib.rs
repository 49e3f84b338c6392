//! Evidential sound-event early detection.
//!
//! A small recurrent model maps streaming log-mel segments to per-class Beta
//! evidence. Subjective-logic opinions derived from that evidence drive
//! online decisions: a class fires only when belief exceeds disbelief and
//! vacuity (lack of evidence) is below a threshold. Optional forward context
//! ("backtrack" windows) trades latency for accuracy, and the metrics module
//! scores the result with event-level early-detection F1 and onset delay.
//!
//! Module map:
//!
//! - [`opinion`]: Beta evidence, binomial opinions, the mapping rule.
//! - [`specfun`]: log-gamma, digamma and trigamma.
//! - [`frontend`]: resampling, STFT, mel filterbank, streaming segments.
//! - [`model`]: the evidential recurrent network, Beta loss, Adam training.
//! - [`stream`]: the online detector and its decision rules.
//! - [`metrics`]: event matching, onset delay, early F1, parameter sweeps.
//! - [`synthgen`]: deterministic synthetic corpora with strong labels.

pub mod error;
pub mod frontend;
pub mod matrix;
pub mod metrics;
pub mod model;
pub mod opinion;
pub mod seed;
pub mod specfun;
pub mod stream;
pub mod synthgen;

#[cfg(any(test, feature = "oracles"))]
pub mod oracle;

pub use error::{Error, Result};
pub use opinion::{BetaEvidence, BinomialOpinion};
