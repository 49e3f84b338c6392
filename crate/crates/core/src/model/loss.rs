//! Bayes risk of binary cross-entropy under a Beta-distributed probability.
//!
//! For one class with evidence `(α, β)` and label `y`:
//!
//! ```text
//! E[BCE] = y (ψ(α+β) − ψ(α)) + (1 − y) (ψ(α+β) − ψ(β))
//! ```
//!
//! using `E[ln p] = ψ(α) − ψ(α+β)` under Beta(α, β).

use super::EvidenceOutput;
use crate::error::{Error, Result};
use crate::opinion::BetaEvidence;
use crate::specfun::{digamma_unchecked as psi, trigamma_unchecked as psi1};

pub fn beta_loss_term(ev: BetaEvidence, label: bool) -> f64 {
    let total = psi(ev.total());
    if label {
        total - psi(ev.alpha())
    } else {
        total - psi(ev.beta())
    }
}

/// `(∂/∂α, ∂/∂β)` of [`beta_loss_term`].
pub fn beta_loss_term_grad(ev: BetaEvidence, label: bool) -> (f64, f64) {
    let total = psi1(ev.total());
    if label {
        (total - psi1(ev.alpha()), total)
    } else {
        (total, total - psi1(ev.beta()))
    }
}

fn check_labels(outputs: &[EvidenceOutput], labels: &[Vec<bool>]) -> Result<()> {
    if outputs.len() != labels.len() {
        return Err(Error::shape(format!("{} label rows", outputs.len()), labels.len()));
    }
    for (t, (o, y)) in outputs.iter().zip(labels).enumerate() {
        if o.num_classes() != y.len() {
            return Err(Error::shape(
                format!("{} labels for segment {t}", o.num_classes()),
                y.len(),
            ));
        }
    }
    Ok(())
}

/// Sum of per-class, per-segment terms.
pub fn beta_loss(outputs: &[EvidenceOutput], labels: &[Vec<bool>]) -> Result<f64> {
    check_labels(outputs, labels)?;
    Ok(outputs
        .iter()
        .zip(labels)
        .flat_map(|(o, y)| o.evidence.iter().zip(y).map(|(&ev, &y)| beta_loss_term(ev, y)))
        .sum())
}

/// Gradients with respect to each `(α, β)`, shaped like the outputs.
pub fn beta_loss_grad(outputs: &[EvidenceOutput], labels: &[Vec<bool>]) -> Result<Vec<Vec<(f64, f64)>>> {
    check_labels(outputs, labels)?;
    Ok(outputs
        .iter()
        .zip(labels)
        .map(|(o, y)| {
            o.evidence
                .iter()
                .zip(y)
                .map(|(&ev, &y)| beta_loss_term_grad(ev, y))
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use proptest::prelude::*;

    fn ev(a: f64, b: f64) -> BetaEvidence {
        BetaEvidence::new(a, b).unwrap()
    }

    #[test]
    fn closed_form_values() {
        assert!((beta_loss_term(ev(1.0, 1.0), true) - 1.0).abs() < 1e-14);
        assert!((beta_loss_term(ev(2.0, 2.0), true) - (0.5 + 1.0 / 3.0)).abs() < 1e-14);
        let (ga, _) = beta_loss_term_grad(ev(1.0, 1.0), true);
        assert!((ga + 1.0).abs() < 1e-12);
    }

    #[test]
    fn matches_quadrature_of_expected_bce() {
        for a in [1.5, 3.0, 20.0] {
            for b in [1.5, 3.0, 20.0] {
                for y in [false, true] {
                    let closed = beta_loss_term(ev(a, b), y);
                    let quad = oracle::expected_bce_by_quadrature(a, b, y);
                    assert!((closed - quad).abs() < 1e-6, "({a}, {b}, {y}): {closed} vs {quad}");
                }
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let h = 1e-4;
        for (a, b, y) in [
            (3.3, 1.9, false),
            (1.2, 7.0, true),
            (15.0, 2.5, true),
            (1.0 + 1e-3, 1.5, false),
        ] {
            let (ga, gb) = beta_loss_term_grad(ev(a, b), y);
            let fa = oracle::central_difference(|x| beta_loss_term(ev(x, b), y), a.max(1.0 + h), h);
            let fb = oracle::central_difference(|x| beta_loss_term(ev(a, x), y), b, h);
            if a > 1.0 + h {
                assert!(
                    (ga - fa).abs() <= 1e-5 * ga.abs().max(1e-3),
                    "d/dalpha at ({a},{b},{y})"
                );
            }
            assert!((gb - fb).abs() <= 1e-5 * gb.abs().max(1e-3), "d/dbeta at ({a},{b},{y})");
        }
    }

    #[test]
    fn gradient_matches_differentiated_quadrature() {
        let h = 1e-4;
        for a in [1.5, 4.0, 12.0] {
            for b in [1.5, 4.0, 12.0] {
                for y in [false, true] {
                    let (ga, gb) = beta_loss_term_grad(ev(a, b), y);
                    let qa = oracle::central_difference(|x| oracle::expected_bce_by_quadrature(x, b, y), a, h);
                    let qb = oracle::central_difference(|x| oracle::expected_bce_by_quadrature(a, x, y), b, h);
                    assert!((ga - qa).abs() < 1e-4 && (gb - qb).abs() < 1e-4, "({a},{b},{y})");
                }
            }
        }
    }

    #[test]
    fn batch_loss_decomposes() {
        let outs: Vec<EvidenceOutput> = (0..6)
            .map(|i| EvidenceOutput {
                evidence: vec![ev(1.0 + i as f64, 2.0), ev(3.0, 1.0 + 0.5 * i as f64)],
            })
            .collect();
        let labels: Vec<Vec<bool>> = (0..6).map(|i| vec![i % 2 == 0, i % 3 == 0]).collect();
        let whole = beta_loss(&outs, &labels).unwrap();
        let split = beta_loss(&outs[..2], &labels[..2]).unwrap() + beta_loss(&outs[2..], &labels[2..]).unwrap();
        assert!((whole - split).abs() < 1e-12);
        let grads = beta_loss_grad(&outs, &labels).unwrap();
        assert_eq!((grads.len(), grads[0].len()), (6, 2));
        assert!(beta_loss(&outs, &labels[..5]).is_err());
        assert!(beta_loss(&outs[..1], &[vec![true]]).is_err());
    }

    proptest! {
        #[test]
        fn symmetric_in_label(a in 1.0f64..500.0, b in 1.0f64..500.0) {
            let lhs = beta_loss_term(ev(a, b), false);
            let rhs = beta_loss_term(ev(b, a), true);
            prop_assert!((lhs - rhs).abs() < 1e-12);
            prop_assert!(lhs >= 0.0);
        }

        #[test]
        fn more_positive_evidence_never_hurts_a_positive(a in 1.0f64..1e4, b in 1.0f64..1e4) {
            let (ga, gb) = beta_loss_term_grad(ev(a, b), true);
            prop_assert!(ga <= 0.0);
            prop_assert!(gb >= 0.0);
        }
    }
}
