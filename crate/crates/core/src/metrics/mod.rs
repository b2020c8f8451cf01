//! Evaluation metrics for classification and regression, plus the training
//! losses the diagnostics reason about.
//!
//! Any metric whose denominator vanishes is reported as `None` (serialized
//! as JSON `null`) and named in the report's `undefined` list. Nothing here
//! substitutes 0 or NaN for an undefined value.

mod classification;
mod loss;
mod regression;
mod roc;

pub use classification::{
    classification_report, confusion_matrix, iou, macro_average, per_label_report,
    per_label_report_multilabel, top_k_accuracy, BinaryCounts, ClassificationReport,
    ConfusionMatrix, LabelReport, MacroValue,
};
pub use loss::{loss, LossKind, LossTarget, Prediction, PROBABILITY_FLOOR};
pub use regression::{regression_report, RegressionReport};
pub use roc::{auc, roc_curve, CurveMode, RocCurve};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Names of every metric this crate produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", try_from = "String")]
pub enum MetricName {
    Accuracy,
    ErrorRate,
    Sensitivity,
    Specificity,
    Precision,
    F1,
    BalancedAccuracy,
    CohensKappa,
    Auc,
    TopKAccuracy,
    Iou,
    Mae,
    Mse,
    Rmse,
    MaxError,
    ExplainedVariance,
    R2,
}

impl MetricName {
    pub const ALL: [MetricName; 17] = [
        MetricName::Accuracy,
        MetricName::ErrorRate,
        MetricName::Sensitivity,
        MetricName::Specificity,
        MetricName::Precision,
        MetricName::F1,
        MetricName::BalancedAccuracy,
        MetricName::CohensKappa,
        MetricName::Auc,
        MetricName::TopKAccuracy,
        MetricName::Iou,
        MetricName::Mae,
        MetricName::Mse,
        MetricName::Rmse,
        MetricName::MaxError,
        MetricName::ExplainedVariance,
        MetricName::R2,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MetricName::Accuracy => "accuracy",
            MetricName::ErrorRate => "error_rate",
            MetricName::Sensitivity => "sensitivity",
            MetricName::Specificity => "specificity",
            MetricName::Precision => "precision",
            MetricName::F1 => "f1",
            MetricName::BalancedAccuracy => "balanced_accuracy",
            MetricName::CohensKappa => "cohens_kappa",
            MetricName::Auc => "auc",
            MetricName::TopKAccuracy => "top_k_accuracy",
            MetricName::Iou => "iou",
            MetricName::Mae => "mae",
            MetricName::Mse => "mse",
            MetricName::Rmse => "rmse",
            MetricName::MaxError => "max_error",
            MetricName::ExplainedVariance => "explained_variance",
            MetricName::R2 => "r2",
        }
    }

    /// True when larger values mean a better model.
    pub fn higher_is_better(&self) -> bool {
        !matches!(
            self,
            MetricName::ErrorRate
                | MetricName::Mae
                | MetricName::Mse
                | MetricName::Rmse
                | MetricName::MaxError
        )
    }
}

impl fmt::Display for MetricName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let normalized = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        let name = match normalized.as_str() {
            "recall" | "tpr" | "true_positive_rate" | "hit_rate" => MetricName::Sensitivity,
            "tnr" | "selectivity" | "true_negative_rate" => MetricName::Specificity,
            "ppv" => MetricName::Precision,
            "f1_score" => MetricName::F1,
            "kappa" => MetricName::CohensKappa,
            "roc_auc" => MetricName::Auc,
            "jaccard" => MetricName::Iou,
            "r_squared" => MetricName::R2,
            other => MetricName::ALL
                .into_iter()
                .find(|m| m.as_str() == other)
                .ok_or_else(|| Error::input(format!("unknown metric `{s}`")))?,
        };
        Ok(name)
    }
}

impl TryFrom<String> for MetricName {
    type Error = Error;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}
