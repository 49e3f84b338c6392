use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::opinion::{BetaEvidence, DEFAULT_BASE_RATE};

/// Threshold used for vacuity and entropy gating unless configured otherwise.
pub const DEFAULT_UNCERTAINTY_THRESHOLD: f64 = 0.9;
pub const DEFAULT_PROBABILITY_THRESHOLD: f64 = 0.5;

/// How per-class evidence becomes a binary decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "threshold", rename_all = "lowercase")]
pub enum DecisionRule {
    /// Fire when belief exceeds disbelief and vacuity is below `V`.
    Vacuity(f64),
    /// Fire when the projected probability exceeds `τ`.
    Probability(f64),
    /// Fire when `p > 0.5` and normalised binary entropy is below `Hmax`.
    Entropy(f64),
}

impl Default for DecisionRule {
    fn default() -> Self {
        DecisionRule::Vacuity(DEFAULT_UNCERTAINTY_THRESHOLD)
    }
}

impl DecisionRule {
    pub fn threshold(&self) -> f64 {
        match *self {
            DecisionRule::Vacuity(t) | DecisionRule::Probability(t) | DecisionRule::Entropy(t) => t,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DecisionRule::Vacuity(_) => "vacuity",
            DecisionRule::Probability(_) => "probability",
            DecisionRule::Entropy(_) => "entropy",
        }
    }

    /// Same rule with a different threshold.
    pub fn with_threshold(&self, t: f64) -> Self {
        match self {
            DecisionRule::Vacuity(_) => DecisionRule::Vacuity(t),
            DecisionRule::Probability(_) => DecisionRule::Probability(t),
            DecisionRule::Entropy(_) => DecisionRule::Entropy(t),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.threshold();
        let ok = match self {
            DecisionRule::Vacuity(_) | DecisionRule::Entropy(_) => t > 0.0 && t <= 1.0,
            DecisionRule::Probability(_) => t > 0.0 && t < 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config {
                field: "threshold",
                reason: format!("{} threshold {t} is out of range", self.name()),
            })
        }
    }

    pub fn decide(&self, ev: BetaEvidence) -> bool {
        match *self {
            DecisionRule::Vacuity(v) => decide_vacuity(ev, v),
            DecisionRule::Probability(tau) => decide_probability(ev, tau),
            DecisionRule::Entropy(h) => decide_entropy(ev, h),
        }
    }
}

/// 1 iff `b > d` and `u < V`.
pub fn decide_vacuity(ev: BetaEvidence, threshold: f64) -> bool {
    let op = ev.opinion(DEFAULT_BASE_RATE).expect("default base rate is valid");
    op.belief() > op.disbelief() && op.vacuity() < threshold
}

/// 1 iff the projected probability exceeds `τ`.
pub fn decide_probability(ev: BetaEvidence, threshold: f64) -> bool {
    let op = ev.opinion(DEFAULT_BASE_RATE).expect("default base rate is valid");
    op.expected_probability() > threshold
}

/// Binary entropy of `p` in bits, i.e. normalised to `[0, 1]`.
pub fn normalized_entropy(p: f64) -> f64 {
    let h = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.ln() };
    (h(p) + h(1.0 - p)) / LN_2
}

/// 1 iff `p > 0.5` and the normalised entropy of `p` is below `Hmax`.
pub fn decide_entropy(ev: BetaEvidence, threshold: f64) -> bool {
    let p = ev
        .opinion(DEFAULT_BASE_RATE)
        .expect("default base rate is valid")
        .expected_probability();
    p > 0.5 && normalized_entropy(p) < threshold
}
