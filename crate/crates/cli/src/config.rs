//! Run configuration: defaults, overlaid by an optional JSON file, overlaid
//! by command-line flags.
//!
//! ```json
//! {
//!   "seed": 0,
//!   "synth": { "clips": 200, "snr_db": [-15.0, -5.0], ... },
//!   "model": { "gru_hidden": 32, "learning_rate": 1e-3, "epochs": 12, ... },
//!   "split": { "train_fraction": 0.75 },
//!   "detect": { "rule": "vacuity", "threshold": 0.9, "context": null, "forward": null },
//!   "eval": { "tolerance": -0.25, "strict_eq8": false },
//!   "sweep": { "vacuity_grid": [0.5, 0.6, 0.7, 0.8, 0.9, 1.0], "backtrack_grid": [0, 2, 4, 6] }
//! }
//! ```
//!
//! `synth.seed` and `model.seed` are not read from the file: both derive from
//! the top-level `seed` through the named sub-streams `gen` and `train`.

use std::path::Path;

use evidet::metrics::{MatchConfig, DEFAULT_TOLERANCE};
use evidet::model::PENetConfig;
use evidet::seed::derive_seed;
use evidet::stream::{DecisionRule, DEFAULT_PROBABILITY_THRESHOLD, DEFAULT_UNCERTAINTY_THRESHOLD};
use evidet::synthgen::SynthConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub synth: SynthConfig,
    pub model: PENetConfig,
    pub split: SplitConfig,
    pub detect: DetectConfig,
    pub eval: EvalConfig,
    pub sweep: SweepConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    /// Leading fraction of the manifest used for training; the rest is the
    /// evaluation split.
    pub train_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { train_fraction: 0.75 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RuleKind {
    Vacuity,
    Probability,
    Entropy,
}

impl RuleKind {
    pub fn with_threshold(self, t: f64) -> DecisionRule {
        match self {
            RuleKind::Vacuity => DecisionRule::Vacuity(t),
            RuleKind::Probability => DecisionRule::Probability(t),
            RuleKind::Entropy => DecisionRule::Entropy(t),
        }
    }

    fn default_threshold(self) -> f64 {
        match self {
            RuleKind::Probability => DEFAULT_PROBABILITY_THRESHOLD,
            _ => DEFAULT_UNCERTAINTY_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectConfig {
    pub rule: RuleKind,
    /// Defaults to 0.9 for vacuity and entropy, 0.5 for probability.
    pub threshold: Option<f64>,
    pub class_thresholds: Option<Vec<f64>>,
    /// Backward context; defaults to the value the model was trained with.
    pub context: Option<usize>,
    /// Forward context; defaults to the value the model was trained with.
    pub forward: Option<usize>,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            rule: RuleKind::Vacuity,
            threshold: None,
            class_thresholds: None,
            context: None,
            forward: None,
        }
    }
}

impl DetectConfig {
    pub fn rule(&self) -> DecisionRule {
        self.rule
            .with_threshold(self.threshold.unwrap_or(self.rule.default_threshold()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub tolerance: f64,
    pub strict_eq8: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            strict_eq8: false,
        }
    }
}

impl EvalConfig {
    pub fn matching(&self) -> MatchConfig {
        MatchConfig {
            tolerance: self.tolerance,
            strict: self.strict_eq8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub vacuity_grid: Vec<f64>,
    pub backtrack_grid: Vec<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            vacuity_grid: vec![0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
            backtrack_grid: vec![0, 2, 4, 6],
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    /// Derives the per-command seeds from the top-level seed.
    pub fn resolve_seeds(&mut self) {
        self.synth.seed = derive_seed(self.seed, "gen");
        self.model.seed = derive_seed(self.seed, "train");
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.synth.validate().map_err(usage)?;
        self.model.validate().map_err(usage)?;
        let f = self.split.train_fraction;
        if !(f > 0.0 && f <= 1.0) {
            return Err(CliError::Usage(format!(
                "split.train_fraction must be in (0, 1], got {f}"
            )));
        }
        self.detect.rule().validate().map_err(usage)?;
        if let Some(ts) = &self.detect.class_thresholds {
            for &t in ts {
                self.detect.rule.with_threshold(t).validate().map_err(usage)?;
            }
        }
        if !(self.eval.tolerance <= 0.0 && self.eval.tolerance.is_finite()) {
            return Err(CliError::Usage(format!(
                "eval.tolerance must be <= 0, got {}",
                self.eval.tolerance
            )));
        }
        if self.sweep.vacuity_grid.is_empty() || self.sweep.backtrack_grid.is_empty() {
            return Err(CliError::Usage("sweep grids must not be empty".into()));
        }
        Ok(())
    }

    /// Threshold grids are only meaningful for the rule being swept, so they
    /// are checked by the sweep rather than by every command.
    pub fn validate_threshold_grid(&self) -> Result<(), CliError> {
        for &v in &self.sweep.vacuity_grid {
            self.detect.rule.with_threshold(v).validate().map_err(usage)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises") + "\n"
    }
}

fn usage(e: evidet::Error) -> CliError {
    CliError::Usage(e.to_string())
}
