use serde::{Deserialize, Serialize};

use crate::diagnostics::is_probability_vector;
use crate::error::{Error, Result};

/// Probabilities are clamped to at least this value before taking logs.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

const PROBABILITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Squared,
    CrossEntropy,
    BinaryCrossEntropy,
    Absolute,
}

impl LossKind {
    pub const ALL: [LossKind; 4] = [
        LossKind::Squared,
        LossKind::CrossEntropy,
        LossKind::BinaryCrossEntropy,
        LossKind::Absolute,
    ];
}

#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    Scalar(f64),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum LossTarget {
    Real(f64),
    Class(usize),
    /// One-hot (or soft) target distribution.
    Distribution(Vec<f64>),
}

fn clamped_ln(p: f64) -> f64 {
    p.clamp(PROBABILITY_FLOOR, 1.0).ln()
}

fn check_probability(p: f64) -> Result<()> {
    if p.is_finite() && (-PROBABILITY_TOLERANCE..=1.0 + PROBABILITY_TOLERANCE).contains(&p) {
        Ok(())
    } else {
        Err(Error::input(format!("{p} is not a probability")))
    }
}

/// Per-example training loss between a prediction and its target.
pub fn loss(kind: LossKind, prediction: &Prediction, target: &LossTarget) -> Result<f64> {
    match (kind, prediction, target) {
        (LossKind::Squared, Prediction::Scalar(y), LossTarget::Real(z)) => Ok((y - z).powi(2)),
        (LossKind::Absolute, Prediction::Scalar(y), LossTarget::Real(z)) => Ok((y - z).abs()),
        (LossKind::CrossEntropy, Prediction::Vector(p), target) => {
            if !is_probability_vector(p, PROBABILITY_TOLERANCE) {
                return Err(Error::input(
                    "cross-entropy needs a probability vector prediction",
                ));
            }
            match target {
                LossTarget::Class(c) if *c < p.len() => Ok(-clamped_ln(p[*c])),
                LossTarget::Distribution(t) if t.len() == p.len() => {
                    if !is_probability_vector(t, PROBABILITY_TOLERANCE) {
                        return Err(Error::input("cross-entropy target is not a distribution"));
                    }
                    let total = t
                        .iter()
                        .zip(p)
                        .filter(|(ti, _)| **ti > 0.0)
                        .map(|(ti, pi)| -ti * clamped_ln(*pi))
                        .sum::<f64>();
                    Ok(total.max(0.0))
                }
                other => Err(Error::input(format!(
                    "cross-entropy target {other:?} does not match {} classes",
                    p.len()
                ))),
            }
        }
        (LossKind::BinaryCrossEntropy, Prediction::Scalar(p), target) => {
            check_probability(*p)?;
            let z = match target {
                LossTarget::Class(c @ (0 | 1)) => *c as f64,
                LossTarget::Real(z) => {
                    check_probability(*z)?;
                    z.clamp(0.0, 1.0)
                }
                other => {
                    return Err(Error::input(format!(
                        "binary cross-entropy target {other:?} must be 0/1 or a probability"
                    )))
                }
            };
            let l = -(z * clamped_ln(*p) + (1.0 - z) * clamped_ln(1.0 - p));
            Ok(l.max(0.0))
        }
        (kind, prediction, target) => Err(Error::input(format!(
            "{kind:?} loss is not defined for prediction {prediction:?} and target {target:?}"
        ))),
    }
}
