use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveMode {
    /// (false positive rate, true positive rate) points.
    Roc,
    /// (recall, precision) points.
    PrecisionRecall,
}

/// A threshold sweep over binary scores.
///
/// `thresholds[i]` is the cutoff producing `points[i]`: rows scoring at or
/// above it are predicted positive. `None` stands for +infinity (nothing
/// predicted positive).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub mode: CurveMode,
    pub points: Vec<(f64, f64)>,
    pub thresholds: Vec<Option<f64>>,
}

/// Sweeps the threshold from +infinity down through every distinct score.
///
/// Rows with equal scores cross the threshold together, so each distinct
/// score contributes exactly one point.
pub fn roc_curve(actual: &[bool], scores: &[f64], mode: CurveMode) -> Result<RocCurve> {
    if actual.len() != scores.len() {
        return Err(Error::input(format!(
            "{} labels but {} scores",
            actual.len(),
            scores.len()
        )));
    }
    if let Some(row) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::input_at(row, "non-finite score"));
    }
    let positives = actual.iter().filter(|&&a| a).count();
    let negatives = actual.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Degenerate(
            "ROC needs at least one positive and one negative row".into(),
        ));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let (p, n) = (positives as f64, negatives as f64);
    let mut points = Vec::new();
    let mut thresholds = Vec::new();
    if mode == CurveMode::Roc {
        points.push((0.0, 0.0));
        thresholds.push(None);
    }
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let cutoff = scores[order[i]];
        while i < order.len() && scores[order[i]] == cutoff {
            if actual[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let point = match mode {
            CurveMode::Roc => (fp as f64 / n, tp as f64 / p),
            CurveMode::PrecisionRecall => (tp as f64 / p, tp as f64 / (tp + fp) as f64),
        };
        points.push(point);
        thresholds.push(Some(cutoff));
    }
    Ok(RocCurve {
        mode,
        points,
        thresholds,
    })
}

/// Trapezoidal area under a ROC curve.
///
/// Because tied scores form a single step, this equals the Mann-Whitney
/// statistic P(score+ > score-) + P(tie)/2.
pub fn auc(curve: &RocCurve) -> Result<f64> {
    if curve.mode != CurveMode::Roc {
        return Err(Error::Mode("AUC is computed on ROC curves only".into()));
    }
    Ok(curve
        .points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum())
}
