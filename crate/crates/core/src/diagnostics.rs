//! Model-level checks on values supplied by the auditee: overfitting gaps,
//! capacity sweeps, loss/task consistency, probability outputs and minimum
//! performance requirements. Nothing here trains a model.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::{ClassDistribution, TaskKind};
use crate::error::{Error, Result};
use crate::metrics::{LossKind, MetricName};

pub const DEFAULT_OVERFIT_THRESHOLD: f64 = 0.1;
pub const DEFAULT_PROBABILITY_TOLERANCE: f64 = 1e-6;
/// Maximum number of violating rows listed by [`validate_probability_outputs`].
pub const MAX_LISTED_ROWS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum OverfitVerdict {
    Ok { gap: f64 },
    OverfitSuspected { gap: f64 },
}

impl OverfitVerdict {
    pub fn gap(&self) -> f64 {
        match *self {
            OverfitVerdict::Ok { gap } | OverfitVerdict::OverfitSuspected { gap } => gap,
        }
    }

    pub fn is_suspected(&self) -> bool {
        matches!(self, OverfitVerdict::OverfitSuspected { .. })
    }
}

/// Compares train and test performance of the same metric.
///
/// The gap is oriented so that a positive value means the model does
/// better on train than on test.
pub fn overfit_gap(
    train_value: f64,
    test_value: f64,
    higher_is_better: bool,
    threshold: f64,
) -> Result<OverfitVerdict> {
    if !train_value.is_finite() || !test_value.is_finite() || !threshold.is_finite() {
        return Err(Error::input("overfit gap needs finite values"));
    }
    let gap = if higher_is_better {
        train_value - test_value
    } else {
        test_value - train_value
    };
    Ok(if gap > threshold {
        OverfitVerdict::OverfitSuspected { gap }
    } else {
        OverfitVerdict::Ok { gap }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub capacity: f64,
    pub train_risk: f64,
    pub test_risk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacitySweep {
    pub points: Vec<SweepPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Underfitting,
    SweetSpot,
    Overfitting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAnalysis {
    pub sweet_spot_capacity: f64,
    pub regimes: Vec<(f64, Regime)>,
    /// Test risk is not a single valley; the regime labels assume the
    /// classical U-shape and should not be trusted here.
    pub non_unimodal: bool,
}

/// Locates the capacity with minimum test risk (smallest capacity on ties)
/// and labels every point relative to it.
pub fn capacity_sweep_analysis(sweep: &CapacitySweep) -> Result<SweepAnalysis> {
    let points = &sweep.points;
    if points.len() < 3 {
        return Err(Error::input(format!(
            "capacity sweep needs >= 3 points, got {}",
            points.len()
        )));
    }
    for (i, p) in points.iter().enumerate() {
        if !(p.capacity.is_finite() && p.capacity > 0.0)
            || !p.train_risk.is_finite()
            || !p.test_risk.is_finite()
        {
            return Err(Error::input_at(
                i,
                "sweep values must be finite with positive capacity",
            ));
        }
    }
    if points.windows(2).any(|w| w[1].capacity <= w[0].capacity) {
        return Err(Error::input("sweep capacities must be strictly increasing"));
    }

    let best = points.iter().enumerate().fold(0, |best, (i, p)| {
        if p.test_risk < points[best].test_risk {
            i
        } else {
            best
        }
    });
    let regimes = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let regime = match i.cmp(&best) {
                std::cmp::Ordering::Less => Regime::Underfitting,
                std::cmp::Ordering::Equal => Regime::SweetSpot,
                std::cmp::Ordering::Greater => Regime::Overfitting,
            };
            (p.capacity, regime)
        })
        .collect();
    let descending = points[..=best]
        .windows(2)
        .all(|w| w[1].test_risk <= w[0].test_risk);
    let ascending = points[best..]
        .windows(2)
        .all(|w| w[1].test_risk >= w[0].test_risk);
    Ok(SweepAnalysis {
        sweet_spot_capacity: points[best].capacity,
        regimes,
        non_unimodal: !(descending && ascending),
    })
}

/// Shape of a model's output layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutputSpec {
    ProbabilityVector { k: usize },
    ScalarProbability,
    RealValue,
    RealVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDescriptor {
    pub family_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity_proxy: Option<f64>,
    pub declared_loss: LossKind,
    pub output_spec: OutputSpec,
    #[serde(flatten)]
    pub task: TaskKind,
    /// Opaque hyperparameters, recorded but not interpreted.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub hyperparameters: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum LossVerdict {
    Pass,
    Violation {
        reason: String,
        expected_loss: Vec<LossKind>,
    },
}

fn violation(reason: impl Into<String>, expected_loss: &[LossKind]) -> LossVerdict {
    LossVerdict::Violation {
        reason: reason.into(),
        expected_loss: expected_loss.to_vec(),
    }
}

/// Checks that the declared loss and output layer fit the task.
pub fn check_loss_task_consistency(descriptor: &ModelDescriptor) -> LossVerdict {
    use LossKind::*;
    use OutputSpec::*;

    let loss = descriptor.declared_loss;
    let output = descriptor.output_spec;
    match descriptor.task {
        TaskKind::MulticlassClassification { k } => match (loss, output) {
            (CrossEntropy, ProbabilityVector { k: out }) if out == k => LossVerdict::Pass,
            (CrossEntropy, _) => violation(
                format!("cross-entropy requires a probability-vector output over {k} classes"),
                &[CrossEntropy],
            ),
            _ => violation(
                "cross-entropy required for multiclass classification",
                &[CrossEntropy],
            ),
        },
        TaskKind::BinaryClassification => match (loss, output) {
            (BinaryCrossEntropy, ScalarProbability)
            | (CrossEntropy, ProbabilityVector { k: 2 }) => LossVerdict::Pass,
            (BinaryCrossEntropy, _) => violation(
                "binary cross-entropy requires a scalar probability output",
                &[BinaryCrossEntropy],
            ),
            (CrossEntropy, _) => violation(
                "cross-entropy on a binary task requires a probability vector of length 2",
                &[CrossEntropy],
            ),
            _ => violation(
                "binary cross-entropy required for binary classification",
                &[BinaryCrossEntropy, CrossEntropy],
            ),
        },
        TaskKind::MultilabelClassification { .. } => match (loss, output) {
            (BinaryCrossEntropy, RealVector) => LossVerdict::Pass,
            (BinaryCrossEntropy, _) => violation(
                "multilabel binary cross-entropy requires a vector of per-label probabilities",
                &[BinaryCrossEntropy],
            ),
            _ => violation(
                "per-label binary cross-entropy required for multilabel classification",
                &[BinaryCrossEntropy],
            ),
        },
        TaskKind::Regression => match (loss, output) {
            (Squared | Absolute, RealValue | RealVector) => LossVerdict::Pass,
            (Squared | Absolute, _) => violation(
                "regression losses require a real-valued output",
                &[Squared, Absolute],
            ),
            _ => violation(
                "squared or absolute loss required for regression",
                &[Squared, Absolute],
            ),
        },
    }
}

/// True when `row` is non-empty, has no entry below `-tol` and sums to 1
/// within `tol`.
pub fn is_probability_vector(row: &[f64], tol: f64) -> bool {
    !row.is_empty()
        && row.iter().all(|p| p.is_finite() && *p >= -tol)
        && (row.iter().sum::<f64>() - 1.0).abs() <= tol
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityCheck {
    pub pass: bool,
    pub rows_checked: usize,
    pub violation_count: usize,
    /// First violating rows, at most [`MAX_LISTED_ROWS`].
    pub violating_rows: Vec<usize>,
}

pub fn validate_probability_outputs(matrix: &[Vec<f64>], tol: f64) -> ProbabilityCheck {
    let violating: Vec<usize> = matrix
        .iter()
        .enumerate()
        .filter(|(_, row)| !is_probability_vector(row, tol))
        .map(|(i, _)| i)
        .collect();
    ProbabilityCheck {
        pass: violating.is_empty(),
        rows_checked: matrix.len(),
        violation_count: violating.len(),
        violating_rows: violating.into_iter().take(MAX_LISTED_ROWS).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "<=")]
    AtMost,
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Comparator::AtLeast => ">=",
            Comparator::AtMost => "<=",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerformanceRequirement {
    pub metric: MetricName,
    pub op: Comparator,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequirementOutcome {
    pub requirement: PerformanceRequirement,
    pub measured: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinPerformance {
    pub outcomes: Vec<RequirementOutcome>,
    pub pass: bool,
}

/// Checks measured metrics against minimum requirements. Bounds are
/// inclusive; an undefined measurement never satisfies a requirement.
pub fn check_min_performance(
    measured: &BTreeMap<MetricName, Option<f64>>,
    requirements: &[PerformanceRequirement],
) -> Result<MinPerformance> {
    let outcomes = requirements
        .iter()
        .map(|req| {
            let value = *measured.get(&req.metric).ok_or_else(|| {
                Error::input(format!("required metric `{}` was not measured", req.metric))
            })?;
            let passed = value.is_some_and(|v| match req.op {
                Comparator::AtLeast => v >= req.bound,
                Comparator::AtMost => v <= req.bound,
            });
            Ok(RequirementOutcome {
                requirement: *req,
                measured: value,
                passed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MinPerformance {
        pass: outcomes.iter().all(|o| o.passed),
        outcomes,
    })
}

/// Scores of the constant predictor that always answers the majority class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorityBaseline {
    pub majority_class: usize,
    pub accuracy: f64,
    pub minority_class: usize,
    pub minority_recall: f64,
    pub balanced_accuracy: f64,
}

pub fn baseline_majority_performance(dist: &ClassDistribution) -> MajorityBaseline {
    MajorityBaseline {
        majority_class: dist.majority().0,
        accuracy: dist.majority_proportion(),
        minority_class: dist.minority().0,
        minority_recall: 0.0,
        balanced_accuracy: 1.0 / dist.k() as f64,
    }
}
