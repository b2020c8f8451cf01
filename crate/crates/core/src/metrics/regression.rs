use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub n: usize,
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    pub max_error: f64,
    /// `None` when the actual values have zero variance.
    pub explained_variance: Option<f64>,
    /// `None` when the actual values have zero variance.
    pub r2: Option<f64>,
}

pub fn regression_report(actual: &[f64], predicted: &[f64]) -> Result<RegressionReport> {
    if actual.len() != predicted.len() {
        return Err(Error::input(format!(
            "{} actual values but {} predictions",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::input("no rows to evaluate"));
    }
    if let Some(row) = actual
        .iter()
        .zip(predicted)
        .position(|(a, p)| !a.is_finite() || !p.is_finite())
    {
        return Err(Error::input_at(row, "non-finite value"));
    }

    let n = actual.len() as f64;
    let errors: Vec<f64> = actual.iter().zip(predicted).map(|(a, p)| a - p).collect();
    let mae = errors.iter().map(|e| e.abs()).sum::<f64>() / n;
    let mse = errors.iter().map(|e| e * e).sum::<f64>() / n;
    let max_error = errors.iter().fold(0.0f64, |m, e| m.max(e.abs()));

    let mean_actual = actual.iter().sum::<f64>() / n;
    let var_actual = actual
        .iter()
        .map(|a| (a - mean_actual).powi(2))
        .sum::<f64>()
        / n;
    let mean_error = errors.iter().sum::<f64>() / n;
    // Var(e) <= E[e^2]; two-pass rounding can land a hair above it
    let var_error = (errors.iter().map(|e| (e - mean_error).powi(2)).sum::<f64>() / n).min(mse);

    let (explained_variance, r2) = if var_actual > 0.0 {
        (
            Some(1.0 - var_error / var_actual),
            Some(1.0 - mse / var_actual),
        )
    } else {
        (None, None)
    };

    Ok(RegressionReport {
        n: actual.len(),
        mae,
        mse,
        rmse: mse.sqrt(),
        max_error,
        explained_variance,
        r2,
    })
}
