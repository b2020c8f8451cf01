use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, Value};
use crate::error::{Error, Result};

/// Membership label of a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SplitLabel {
    Train,
    Validation,
    Test,
    Fold(usize),
}

impl SplitLabel {
    pub const HOLDOUT: [SplitLabel; 3] =
        [SplitLabel::Train, SplitLabel::Validation, SplitLabel::Test];

    fn is_holdout(&self) -> bool {
        !matches!(self, SplitLabel::Fold(_))
    }
}

impl fmt::Display for SplitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitLabel::Train => f.write_str("train"),
            SplitLabel::Validation => f.write_str("validation"),
            SplitLabel::Test => f.write_str("test"),
            SplitLabel::Fold(i) => write!(f, "fold{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    Holdout,
    KFold { folds: usize },
}

/// A partition of a dataset's rows into holdout splits or folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitAssignment {
    mode: SplitMode,
    labels: Vec<SplitLabel>,
}

impl SplitAssignment {
    /// Holdout assignment indexed by row id; train must be non-empty.
    pub fn holdout(labels: Vec<SplitLabel>) -> Result<Self> {
        if let Some(row) = labels.iter().position(|l| !l.is_holdout()) {
            return Err(Error::Split(format!(
                "row {row} carries a fold label in holdout mode"
            )));
        }
        if !labels.contains(&SplitLabel::Train) {
            return Err(Error::Split("holdout split has an empty train set".into()));
        }
        Ok(SplitAssignment {
            mode: SplitMode::Holdout,
            labels,
        })
    }

    /// Fold assignment indexed by row id; needs at least two folds, none empty.
    pub fn kfold(labels: Vec<SplitLabel>) -> Result<Self> {
        let mut sizes: Vec<usize> = Vec::new();
        for (row, label) in labels.iter().enumerate() {
            match label {
                SplitLabel::Fold(f) => {
                    if *f >= sizes.len() {
                        sizes.resize(f + 1, 0);
                    }
                    sizes[*f] += 1;
                }
                other => {
                    return Err(Error::Split(format!(
                        "row {row} labelled {other} in kfold mode"
                    )))
                }
            }
        }
        if sizes.len() < 2 {
            return Err(Error::Split(format!(
                "kfold needs at least 2 folds, found {}",
                sizes.len()
            )));
        }
        if let Some(f) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::Split(format!("fold {f} is empty")));
        }
        Ok(SplitAssignment {
            mode: SplitMode::KFold { folds: sizes.len() },
            labels,
        })
    }

    pub fn mode(&self) -> SplitMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, row_id: usize) -> SplitLabel {
        self.labels[row_id]
    }

    pub fn labels(&self) -> &[SplitLabel] {
        &self.labels
    }

    pub fn rows_with(&self, label: SplitLabel) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == label)
            .map(|(i, _)| i)
            .collect()
    }

    /// Row count per label, in label order.
    pub fn sizes(&self) -> BTreeMap<SplitLabel, usize> {
        let mut sizes = BTreeMap::new();
        for label in &self.labels {
            *sizes.entry(*label).or_insert(0) += 1;
        }
        sizes
    }

    /// Returns a copy with every occurrence of `from` relabelled as `to`.
    pub fn merge_labels(&self, from: SplitLabel, to: SplitLabel) -> Result<Self> {
        let labels = self
            .labels
            .iter()
            .map(|&l| if l == from { to } else { l })
            .collect();
        match self.mode {
            SplitMode::Holdout => SplitAssignment::holdout(labels),
            SplitMode::KFold { .. } => SplitAssignment {
                mode: self.mode,
                labels,
            }
            .renumbered(),
        }
    }

    fn renumbered(self) -> Result<Self> {
        let mut used: Vec<usize> = self
            .labels
            .iter()
            .filter_map(|l| match l {
                SplitLabel::Fold(f) => Some(*f),
                _ => None,
            })
            .collect();
        used.sort_unstable();
        used.dedup();
        let labels = self
            .labels
            .iter()
            .map(|l| match l {
                SplitLabel::Fold(f) => SplitLabel::Fold(used.binary_search(f).unwrap_or(*f)),
                other => *other,
            })
            .collect();
        SplitAssignment::kfold(labels)
    }

    /// Validates that the assignment covers exactly the dataset's rows.
    pub fn check_covers(&self, dataset: &Dataset) -> Result<()> {
        if self.labels.len() != dataset.len() {
            return Err(Error::Split(format!(
                "split covers {} rows but dataset has {}",
                self.labels.len(),
                dataset.len()
            )));
        }
        Ok(())
    }

    pub fn to_file(&self) -> SplitFile {
        let membership = self
            .labels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let repr = match l {
                    SplitLabel::Fold(f) => LabelRepr::Fold(*f),
                    other => LabelRepr::Name(other.to_string()),
                };
                (i, repr)
            })
            .collect();
        SplitFile {
            mode: match self.mode {
                SplitMode::Holdout => "holdout".into(),
                SplitMode::KFold { .. } => "kfold".into(),
            },
            membership,
        }
    }

    /// Builds an assignment from a split file, requiring ids exactly `0..n`.
    pub fn from_file(file: &SplitFile, n: usize) -> Result<Self> {
        let mapping = file.labels()?;
        match file.mode.as_str() {
            "holdout" | "kfold" => {}
            other => return Err(Error::Split(format!("unknown split mode `{other}`"))),
        }
        let labels = labels_from_mapping(&mapping, n)?;
        if file.mode == "holdout" {
            SplitAssignment::holdout(labels)
        } else {
            SplitAssignment::kfold(labels)
        }
    }
}

fn labels_from_mapping(mapping: &BTreeMap<usize, SplitLabel>, n: usize) -> Result<Vec<SplitLabel>> {
    if let Some(row) = (0..n).find(|r| !mapping.contains_key(r)) {
        return Err(Error::Split(format!("row {row} has no split label")));
    }
    if let Some((&row, _)) = mapping.range(n..).next() {
        return Err(Error::Split(format!("row {row} does not exist (n = {n})")));
    }
    Ok(mapping.values().copied().collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelRepr {
    Fold(usize),
    Name(String),
}

/// On-disk split document: `{"mode": "holdout"|"kfold", "membership": {row_id: label}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitFile {
    pub mode: String,
    pub membership: BTreeMap<usize, LabelRepr>,
}

impl SplitFile {
    pub fn labels(&self) -> Result<BTreeMap<usize, SplitLabel>> {
        self.membership
            .iter()
            .map(|(&row, repr)| {
                let label = match (self.mode.as_str(), repr) {
                    ("kfold", LabelRepr::Fold(f)) => SplitLabel::Fold(*f),
                    ("holdout", LabelRepr::Name(name)) => match name.as_str() {
                        "train" => SplitLabel::Train,
                        "validation" => SplitLabel::Validation,
                        "test" => SplitLabel::Test,
                        other => {
                            return Err(Error::Split(format!("row {row}: unknown label `{other}`")))
                        }
                    },
                    (mode, repr) => {
                        return Err(Error::Split(format!(
                            "row {row}: label {repr:?} invalid in {mode} mode"
                        )))
                    }
                };
                Ok((row, label))
            })
            .collect()
    }
}

/// How to partition a dataset. Ratios are `(train, validation, test)`.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitStrategy {
    Random { seed: u64, ratios: [f64; 3] },
    Temporal { column: String, ratios: [f64; 3] },
    Predefined(BTreeMap<usize, SplitLabel>),
    KFold { folds: usize, seed: u64 },
}

fn check_ratios(ratios: &[f64; 3]) -> Result<()> {
    if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(Error::Config(format!(
            "ratios must be finite and non-negative: {ratios:?}"
        )));
    }
    let sum: f64 = ratios.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("ratios sum to {sum}, expected 1")));
    }
    if ratios[0] == 0.0 {
        return Err(Error::Config("train ratio must be positive".into()));
    }
    Ok(())
}

/// Largest-remainder apportionment of `n` rows; leftover rows go to the
/// largest fractional parts, lower index first on ties.
pub(crate) fn apportion(n: usize, ratios: &[f64]) -> Vec<usize> {
    let exact: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut sizes: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..ratios.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa)
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    sizes
}

fn holdout_from_order(order: &[usize], ratios: &[f64; 3]) -> Result<SplitAssignment> {
    let sizes = apportion(order.len(), ratios);
    for ((size, ratio), label) in sizes.iter().zip(ratios).zip(SplitLabel::HOLDOUT) {
        if *ratio > 0.0 && *size == 0 {
            return Err(Error::Split(format!("{label} split is empty")));
        }
    }
    let mut labels = vec![SplitLabel::Train; order.len()];
    let mut cursor = order.iter();
    for (size, label) in sizes.into_iter().zip(SplitLabel::HOLDOUT) {
        for &row in cursor.by_ref().take(size) {
            labels[row] = label;
        }
    }
    SplitAssignment::holdout(labels)
}

fn compare_values(a: &Value, b: &Value) -> Option<Ordering> {
    match (a, b) {
        (Value::Real(x), Value::Real(y)) => x.partial_cmp(y),
        (Value::Text(x), Value::Text(y)) => Some(x.cmp(y)),
        _ => None,
    }
}

/// Partitions the dataset's rows according to `strategy`.
///
/// Random and k-fold assignments are deterministic for a fixed seed. The
/// temporal strategy puts the earliest rows in train and the latest in test,
/// keeping file order among equal timestamps.
pub fn assign_splits(dataset: &Dataset, strategy: &SplitStrategy) -> Result<SplitAssignment> {
    let n = dataset.len();
    match strategy {
        SplitStrategy::Random { seed, ratios } => {
            check_ratios(ratios)?;
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
            holdout_from_order(&order, ratios)
        }
        SplitStrategy::Temporal { column, ratios } => {
            check_ratios(ratios)?;
            let values = dataset
                .column(column)
                .ok_or_else(|| Error::Config(format!("temporal column `{column}` not found")))?;
            if let Some(row) = values.iter().position(|v| matches!(v, Value::Missing)) {
                return Err(Error::Config(format!(
                    "temporal column has a missing value at row {row}"
                )));
            }
            if values
                .windows(2)
                .any(|w| compare_values(&w[0], &w[1]).is_none())
            {
                return Err(Error::Config(format!(
                    "temporal column `{column}` mixes value kinds"
                )));
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| {
                compare_values(&values[a], &values[b]).unwrap_or(Ordering::Equal)
            });
            holdout_from_order(&order, ratios)
        }
        SplitStrategy::Predefined(mapping) => {
            let labels = labels_from_mapping(mapping, n)?;
            if labels.iter().all(SplitLabel::is_holdout) {
                SplitAssignment::holdout(labels)
            } else {
                SplitAssignment::kfold(labels)
            }
        }
        SplitStrategy::KFold { folds, seed } => {
            if *folds < 2 {
                return Err(Error::Config(format!("kfold needs f >= 2, got {folds}")));
            }
            if *folds > n {
                return Err(Error::Split(format!(
                    "{folds} folds over {n} rows leaves a fold empty"
                )));
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
            let mut labels = vec![SplitLabel::Fold(0); n];
            let (base, extra) = (n / folds, n % folds);
            let mut cursor = order.iter();
            for f in 0..*folds {
                let size = base + usize::from(f < extra);
                for &row in cursor.by_ref().take(size) {
                    labels[row] = SplitLabel::Fold(f);
                }
            }
            SplitAssignment::kfold(labels)
        }
    }
}
