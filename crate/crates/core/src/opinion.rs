//! Subjective-logic algebra for binary propositions.
//!
//! A class prediction is a Beta distribution over the class probability,
//! parameterised by positive evidence `alpha` and negative evidence `beta`.
//! The mapping rule turns that evidence into a binomial opinion
//! `(belief, disbelief, vacuity)` whose masses sum to one.

use crate::error::{Error, Result};
use crate::specfun::log_gamma_unchecked;

/// Amount of uncertainty evidence `W` for a binary proposition.
pub const UNCERTAINTY_EVIDENCE: f64 = 2.0;

/// Base rate used for every class: a neutral presence/absence prior.
pub const DEFAULT_BASE_RATE: f64 = 0.5;

/// Parameters `(alpha, beta)` of a Beta distribution, both at least one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaEvidence {
    alpha: f64,
    beta: f64,
}

impl BetaEvidence {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha >= 1.0 && beta >= 1.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::Domain(format!(
                "Beta evidence requires finite alpha >= 1 and beta >= 1, got ({alpha}, {beta})"
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// The zero-evidence state `(1, 1)`.
    pub const fn vacuous() -> Self {
        Self { alpha: 1.0, beta: 1.0 }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn total(&self) -> f64 {
        self.alpha + self.beta
    }

    /// Mean of the Beta distribution, `alpha / (alpha + beta)`.
    pub fn mean(&self) -> f64 {
        self.alpha / self.total()
    }

    pub fn vacuity(&self) -> f64 {
        UNCERTAINTY_EVIDENCE / self.total()
    }

    pub fn opinion(&self, base_rate: f64) -> Result<BinomialOpinion> {
        opinion_from_evidence(*self, base_rate)
    }

    pub fn log_pdf(&self, p: f64) -> Result<f64> {
        beta_log_pdf(p, *self)
    }

    /// Swaps the roles of positive and negative evidence.
    pub fn swapped(&self) -> Self {
        Self {
            alpha: self.beta,
            beta: self.alpha,
        }
    }
}

/// A binomial opinion `(b, d, u, a)` with `b + d + u = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinomialOpinion {
    belief: f64,
    disbelief: f64,
    vacuity: f64,
    base_rate: f64,
}

impl BinomialOpinion {
    pub fn belief(&self) -> f64 {
        self.belief
    }

    pub fn disbelief(&self) -> f64 {
        self.disbelief
    }

    pub fn vacuity(&self) -> f64 {
        self.vacuity
    }

    pub fn base_rate(&self) -> f64 {
        self.base_rate
    }

    /// Projected probability `b + a·u`.
    pub fn expected_probability(&self) -> f64 {
        self.belief + self.base_rate * self.vacuity
    }
}

/// Applies the mapping rule `b = (α−1)/(α+β)`, `d = (β−1)/(α+β)`, `u = W/(α+β)`.
pub fn opinion_from_evidence(ev: BetaEvidence, base_rate: f64) -> Result<BinomialOpinion> {
    if !(0.0..=1.0).contains(&base_rate) {
        return Err(Error::Domain(format!("base rate must lie in [0, 1], got {base_rate}")));
    }
    let total = ev.total();
    Ok(BinomialOpinion {
        belief: (ev.alpha - 1.0) / total,
        disbelief: (ev.beta - 1.0) / total,
        vacuity: UNCERTAINTY_EVIDENCE / total,
        base_rate,
    })
}

pub fn expected_probability(op: &BinomialOpinion) -> f64 {
    op.expected_probability()
}

pub fn vacuity(ev: BetaEvidence) -> f64 {
    ev.vacuity()
}

/// ln Beta(p | α, β) = (α−1) ln p + (β−1) ln(1−p) − ln B(α, β).
pub fn beta_log_pdf(p: f64, ev: BetaEvidence) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("Beta density needs p in [0, 1], got {p}")));
    }
    // With alpha, beta >= 1 both exponents are non-negative; 0·ln 0 is taken as 0.
    let term = |exponent: f64, x: f64| if exponent == 0.0 { 0.0 } else { exponent * x.ln() };
    let ln_b = log_gamma_unchecked(ev.alpha) + log_gamma_unchecked(ev.beta) - log_gamma_unchecked(ev.total());
    Ok(term(ev.alpha - 1.0, p) + term(ev.beta - 1.0, 1.0 - p) - ln_b)
}
