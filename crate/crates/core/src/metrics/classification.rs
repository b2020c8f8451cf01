use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::MetricName;
use crate::error::{Error, Result};

/// Counts of predicted versus actual classes, `cells[actual][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    k: usize,
    cells: Vec<Vec<u64>>,
}

/// One-vs-rest view of a confusion matrix for a chosen positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl BinaryCounts {
    /// Actual positives.
    pub fn p(&self) -> u64 {
        self.tp + self.fn_
    }

    /// Actual negatives.
    pub fn n(&self) -> u64 {
        self.tn + self.fp
    }
}

impl ConfusionMatrix {
    pub fn from_cells(cells: Vec<Vec<u64>>) -> Result<Self> {
        let k = cells.len();
        if k < 2 {
            return Err(Error::input("confusion matrix needs at least two classes"));
        }
        if cells.iter().any(|row| row.len() != k) {
            return Err(Error::input("confusion matrix must be square"));
        }
        Ok(ConfusionMatrix { k, cells })
    }

    /// Binary matrix from its four counts, class 1 positive.
    pub fn from_binary(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        ConfusionMatrix {
            k: 2,
            cells: vec![vec![tn, fp], vec![fn_, tp]],
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn cells(&self) -> &[Vec<u64>] {
        &self.cells
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k).map(|i| self.cells[i][i]).sum()
    }

    /// Per-class actual counts.
    pub fn row_sums(&self) -> Vec<u64> {
        self.cells.iter().map(|row| row.iter().sum()).collect()
    }

    /// Per-class predicted counts.
    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.k)
            .map(|j| self.cells.iter().map(|row| row[j]).sum())
            .collect()
    }

    pub fn binary_counts(&self, positive: usize) -> BinaryCounts {
        let tp = self.cells[positive][positive];
        let fn_ = self.row_sums()[positive] - tp;
        let fp = self.col_sums()[positive] - tp;
        BinaryCounts {
            tp,
            fp,
            fn_,
            tn: self.total() - tp - fn_ - fp,
        }
    }

    /// Collapses to a 2x2 matrix with `positive` as class 1.
    pub fn one_vs_rest(&self, positive: usize) -> ConfusionMatrix {
        let c = self.binary_counts(positive);
        ConfusionMatrix::from_binary(c.tp, c.fp, c.tn, c.fn_)
    }
}

pub fn confusion_matrix(
    actual: &[usize],
    predicted: &[usize],
    k: usize,
) -> Result<ConfusionMatrix> {
    if actual.len() != predicted.len() {
        return Err(Error::input(format!(
            "{} actual labels but {} predictions",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::input("no rows to evaluate"));
    }
    if k < 2 {
        return Err(Error::input("confusion matrix needs k >= 2"));
    }
    let mut cells = vec![vec![0u64; k]; k];
    for (row, (&a, &p)) in actual.iter().zip(predicted).enumerate() {
        if a >= k || p >= k {
            return Err(Error::input_at(
                row,
                format!("label outside 0..{k} (actual {a}, predicted {p})"),
            ));
        }
        cells[a][p] += 1;
    }
    Ok(ConfusionMatrix { k, cells })
}

/// Confusion-matrix statistics for one positive class.
///
/// `accuracy` and `cohens_kappa` use the full matrix; the remaining scores
/// are one-vs-rest for `positive_class` (identical for binary matrices).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub positive_class: usize,
    pub counts: BinaryCounts,
    pub accuracy: Option<f64>,
    pub error_rate: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
    pub balanced_accuracy: Option<f64>,
    pub cohens_kappa: Option<f64>,
    /// Metrics whose denominator was zero.
    pub undefined: Vec<MetricName>,
}

impl ClassificationReport {
    pub const METRICS: [MetricName; 8] = [
        MetricName::Accuracy,
        MetricName::ErrorRate,
        MetricName::Sensitivity,
        MetricName::Specificity,
        MetricName::Precision,
        MetricName::F1,
        MetricName::BalancedAccuracy,
        MetricName::CohensKappa,
    ];

    pub fn get(&self, metric: MetricName) -> Option<Option<f64>> {
        Some(match metric {
            MetricName::Accuracy => self.accuracy,
            MetricName::ErrorRate => self.error_rate,
            MetricName::Sensitivity => self.sensitivity,
            MetricName::Specificity => self.specificity,
            MetricName::Precision => self.precision,
            MetricName::F1 => self.f1,
            MetricName::BalancedAccuracy => self.balanced_accuracy,
            MetricName::CohensKappa => self.cohens_kappa,
            _ => return None,
        })
    }

    pub fn values(&self) -> BTreeMap<MetricName, Option<f64>> {
        Self::METRICS
            .into_iter()
            .map(|m| (m, self.get(m).flatten()))
            .collect()
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn classification_report(
    cm: &ConfusionMatrix,
    positive_class: usize,
) -> Result<ClassificationReport> {
    if positive_class >= cm.k() {
        return Err(Error::input(format!(
            "positive class {positive_class} outside 0..{}",
            cm.k()
        )));
    }
    let total = cm.total();
    if total == 0 {
        return Err(Error::input("confusion matrix is empty"));
    }
    let c = cm.binary_counts(positive_class);

    let accuracy = ratio(cm.trace(), total);
    let error_rate = accuracy.map(|a| 1.0 - a);
    let sensitivity = ratio(c.tp, c.p());
    let specificity = ratio(c.tn, c.n());
    let precision = ratio(c.tp, c.tp + c.fp);
    let f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_);
    let balanced_accuracy = sensitivity.zip(specificity).map(|(s, t)| (s + t) / 2.0);

    // chance agreement from the product of the marginals
    let chance: u128 = cm
        .row_sums()
        .iter()
        .zip(cm.col_sums())
        .map(|(&r, c)| r as u128 * c as u128)
        .sum();
    let total_sq = total as u128 * total as u128;
    let cohens_kappa = (chance < total_sq).then(|| {
        let p_o = cm.trace() as f64 / total as f64;
        let p_e = chance as f64 / total_sq as f64;
        (p_o - p_e) / (1.0 - p_e)
    });

    let mut report = ClassificationReport {
        positive_class,
        counts: c,
        accuracy,
        error_rate,
        sensitivity,
        specificity,
        precision,
        f1,
        balanced_accuracy,
        cohens_kappa,
        undefined: Vec::new(),
    };
    report.undefined = ClassificationReport::METRICS
        .into_iter()
        .filter(|&m| report.get(m) == Some(None))
        .collect();
    Ok(report)
}

/// Mean of one metric over the labels where it is defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroValue {
    pub value: Option<f64>,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelReport {
    pub per_label: Vec<ClassificationReport>,
    pub macro_average: BTreeMap<MetricName, MacroValue>,
}

pub fn macro_average(reports: &[ClassificationReport]) -> BTreeMap<MetricName, MacroValue> {
    ClassificationReport::METRICS
        .into_iter()
        .map(|m| {
            let defined: Vec<f64> = reports.iter().filter_map(|r| r.get(m).flatten()).collect();
            let value =
                (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
            (
                m,
                MacroValue {
                    value,
                    skipped: reports.len() - defined.len(),
                },
            )
        })
        .collect()
}

fn label_report(binary_views: Vec<ConfusionMatrix>) -> Result<LabelReport> {
    let per_label = binary_views
        .iter()
        .map(|cm| classification_report(cm, 1))
        .collect::<Result<Vec<_>>>()?;
    Ok(LabelReport {
        macro_average: macro_average(&per_label),
        per_label,
    })
}

/// One-vs-rest report for every class of a single-label task.
pub fn per_label_report(actual: &[usize], predicted: &[usize], k: usize) -> Result<LabelReport> {
    if k < 2 {
        return Err(Error::input("per-label report needs k >= 2"));
    }
    let cm = confusion_matrix(actual, predicted, k)?;
    label_report((0..k).map(|c| cm.one_vs_rest(c)).collect())
}

/// Independent per-label report for multilabel rows given as label sets.
pub fn per_label_report_multilabel(
    actual: &[Vec<usize>],
    predicted: &[Vec<usize>],
    k: usize,
) -> Result<LabelReport> {
    if k < 2 {
        return Err(Error::input("per-label report needs k >= 2"));
    }
    if actual.len() != predicted.len() || actual.is_empty() {
        return Err(Error::input(
            "actual and predicted label sets must be non-empty and equally long",
        ));
    }
    let mut counts = vec![
        BinaryCounts {
            tp: 0,
            fp: 0,
            tn: 0,
            fn_: 0
        };
        k
    ];
    for (row, (a, p)) in actual.iter().zip(predicted).enumerate() {
        if let Some(l) = a.iter().chain(p).find(|&&l| l >= k) {
            return Err(Error::input_at(row, format!("label {l} outside 0..{k}")));
        }
        for (label, c) in counts.iter_mut().enumerate() {
            match (a.contains(&label), p.contains(&label)) {
                (true, true) => c.tp += 1,
                (true, false) => c.fn_ += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
            }
        }
    }
    label_report(
        counts
            .into_iter()
            .map(|c| ConfusionMatrix::from_binary(c.tp, c.fp, c.tn, c.fn_))
            .collect(),
    )
}

/// Fraction of rows whose actual class is among the `k_top` highest scores.
///
/// Equal scores rank the lower class index first.
pub fn top_k_accuracy(actual: &[usize], scores: &[Vec<f64>], k_top: usize) -> Result<f64> {
    if actual.len() != scores.len() || actual.is_empty() {
        return Err(Error::input(
            "score matrix must have one non-empty row per label",
        ));
    }
    let k = scores[0].len();
    if k_top == 0 || k_top > k {
        return Err(Error::input(format!(
            "k_top must be in 1..={k}, got {k_top}"
        )));
    }
    let mut hits = 0usize;
    for (row, (&a, s)) in actual.iter().zip(scores).enumerate() {
        if s.len() != k {
            return Err(Error::input_at(
                row,
                format!("expected {k} scores, found {}", s.len()),
            ));
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::input_at(row, "non-finite score"));
        }
        if a >= k {
            return Err(Error::input_at(row, format!("label {a} outside 0..{k}")));
        }
        let ahead = s
            .iter()
            .enumerate()
            .filter(|&(j, &v)| v > s[a] || (v == s[a] && j < a))
            .count();
        if ahead < k_top {
            hits += 1;
        }
    }
    Ok(hits as f64 / actual.len() as f64)
}

/// Intersection over union (Jaccard index); `None` when both sets are empty.
pub fn iou<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> Option<f64> {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    (union > 0).then(|| inter as f64 / union as f64)
}
