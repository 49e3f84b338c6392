//! The evidential predictor: a GRU encoder over a feature window whose linear
//! head emits, per class, non-negative positive and negative evidence.
//!
//! Evidence is `max(0, raw)`, and the Beta parameters are evidence plus one,
//! so the zero-evidence state is exactly `(1, 1)` with vacuity 1. Training
//! minimises the Bayes risk of binary cross-entropy under the predicted Beta
//! distribution (see [`loss`]) with Adam.

mod checkpoint;
mod labels;
pub mod loss;
mod network;
mod params;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_MAGIC};
pub use labels::rasterize_labels;
pub use loss::{beta_loss, beta_loss_grad, beta_loss_term, beta_loss_term_grad};
pub use network::{backprop, forward, forward_frames, Predictor};
pub use params::{Gradients, ModelShape, PENetParams, TensorId};
pub use train::{
    input_statistics, train, window_dataset, AdamState, LabeledClip, TrainOutcome, TrainState, ADAM_BETA1, ADAM_BETA2,
    ADAM_EPSILON,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontend::N_MELS;
use crate::opinion::BetaEvidence;

/// Hyperparameters of the predictor and its training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PENetConfig {
    pub num_classes: usize,
    pub mel_bins: usize,
    pub gru_hidden: usize,
    /// Backward context in segments.
    pub context: usize,
    /// Forward context in segments.
    pub forward: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for PENetConfig {
    fn default() -> Self {
        Self {
            num_classes: 4,
            mel_bins: N_MELS,
            gru_hidden: 32,
            context: 3,
            forward: 0,
            learning_rate: 1e-3,
            epochs: 12,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl PENetConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field, reason: &str| {
            Err(Error::Config {
                field,
                reason: reason.to_string(),
            })
        };
        if self.num_classes == 0 {
            return bad("num_classes", "must be at least 1");
        }
        if self.gru_hidden == 0 {
            return bad("gru_hidden", "must be at least 1");
        }
        if self.mel_bins != N_MELS {
            return bad("mel_bins", "must be 128");
        }
        if self.batch_size == 0 {
            return bad("batch_size", "must be at least 1");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate", "must be a finite non-negative number");
        }
        Ok(())
    }

    pub fn shape(&self) -> ModelShape {
        ModelShape {
            num_classes: self.num_classes,
            hidden: self.gru_hidden,
            mel_bins: self.mel_bins,
        }
    }
}

/// Per-class Beta evidence for one segment.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceOutput {
    pub evidence: Vec<BetaEvidence>,
}

impl EvidenceOutput {
    pub fn num_classes(&self) -> usize {
        self.evidence.len()
    }
}
