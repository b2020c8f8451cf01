//! Dataset ingestion and the row-level substrate every check runs on.
//!
//! A [`Dataset`] is an immutable, ordered collection of labelled rows. Row
//! ids are positions in the source file and are always exactly `0..n`.

mod fingerprint;
mod split;

pub use fingerprint::{duplicate_census, fingerprint_row, group_identical_rows, Fingerprint};
pub use split::{assign_splits, SplitAssignment, SplitFile, SplitLabel, SplitMode, SplitStrategy};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The supervised task a dataset is labelled for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TaskSpec", into = "TaskSpec")]
pub enum TaskKind {
    BinaryClassification,
    MulticlassClassification { k: usize },
    MultilabelClassification { k: usize },
    Regression,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TaskSpec {
    task: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
}

impl TaskKind {
    pub fn from_parts(task: &str, k: Option<usize>) -> Result<Self> {
        let need_k = |k: Option<usize>| -> Result<usize> {
            match k {
                Some(k) if k >= 2 => Ok(k),
                Some(k) => Err(Error::Schema(format!(
                    "class count k must be >= 2, got {k}"
                ))),
                None => Err(Error::Schema(format!("task `{task}` requires k"))),
            }
        };
        match task {
            "binary_classification" | "binary" => match k {
                None | Some(2) => Ok(TaskKind::BinaryClassification),
                Some(k) => Err(Error::Schema(format!("binary task declares k={k}"))),
            },
            "multiclass_classification" | "multiclass" => {
                Ok(TaskKind::MulticlassClassification { k: need_k(k)? })
            }
            "multilabel_classification" | "multilabel" => {
                Ok(TaskKind::MultilabelClassification { k: need_k(k)? })
            }
            "regression" => Ok(TaskKind::Regression),
            other => Err(Error::Schema(format!("unknown task kind `{other}`"))),
        }
    }

    /// Number of classes, `None` for regression.
    pub fn num_classes(&self) -> Option<usize> {
        match *self {
            TaskKind::BinaryClassification => Some(2),
            TaskKind::MulticlassClassification { k } | TaskKind::MultilabelClassification { k } => {
                Some(k)
            }
            TaskKind::Regression => None,
        }
    }

    pub fn is_classification(&self) -> bool {
        !matches!(self, TaskKind::Regression)
    }

    pub fn name(&self) -> &'static str {
        match self {
            TaskKind::BinaryClassification => "binary_classification",
            TaskKind::MulticlassClassification { .. } => "multiclass_classification",
            TaskKind::MultilabelClassification { .. } => "multilabel_classification",
            TaskKind::Regression => "regression",
        }
    }
}

impl TryFrom<TaskSpec> for TaskKind {
    type Error = Error;

    fn try_from(spec: TaskSpec) -> Result<Self> {
        TaskKind::from_parts(&spec.task, spec.k)
    }
}

impl From<TaskKind> for TaskSpec {
    fn from(kind: TaskKind) -> Self {
        let k = match kind {
            TaskKind::MulticlassClassification { k } | TaskKind::MultilabelClassification { k } => {
                Some(k)
            }
            _ => None,
        };
        TaskSpec {
            task: kind.name().to_string(),
            k,
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.num_classes() {
            Some(k) if !matches!(self, TaskKind::BinaryClassification) => {
                write!(f, "{}(k={k})", self.name())
            }
            _ => f.write_str(self.name()),
        }
    }
}

/// Declared kind of a feature column.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    #[default]
    Real,
    Text,
}

/// A single feature cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Real(f64),
    Text(String),
    Missing,
}

/// A row's label.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Class(usize),
    Real(f64),
    /// Sorted, de-duplicated label indices of a multilabel row.
    Labels(Vec<usize>),
}

impl Target {
    pub fn class(&self) -> Option<usize> {
        match self {
            Target::Class(c) => Some(*c),
            _ => None,
        }
    }

    pub fn real(&self) -> Option<f64> {
        match self {
            Target::Real(v) => Some(*v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataPoint {
    pub row_id: usize,
    pub features: Vec<Value>,
    pub target: Target,
}

/// Column declarations as read from a schema JSON document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaSpec {
    pub target: String,
    pub task: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temporal_column: Option<String>,
    /// Per-column value kinds; undeclared feature columns are real-valued.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub features: BTreeMap<String, ValueKind>,
    /// Columns dropped from the feature vector (e.g. row identifiers).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ignore: Vec<String>,
}

impl SchemaSpec {
    pub fn new(target: impl Into<String>, task: TaskKind) -> Self {
        let spec = TaskSpec::from(task);
        SchemaSpec {
            target: target.into(),
            task: spec.task,
            k: spec.k,
            temporal_column: None,
            features: BTreeMap::new(),
            ignore: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(format!("schema document: {e}")))
    }

    pub fn task_kind(&self) -> Result<TaskKind> {
        TaskKind::from_parts(&self.task, self.k)
    }
}

/// Resolved schema of a loaded dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    pub feature_names: Vec<String>,
    pub feature_kinds: Vec<ValueKind>,
    pub target_name: String,
    pub task: TaskKind,
    pub temporal_column: Option<String>,
}

impl Schema {
    pub fn arity(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Schema,
    rows: Vec<DataPoint>,
    temporal: Option<Vec<Value>>,
}

impl Dataset {
    /// Builds a dataset from feature rows and targets, enforcing the row
    /// invariants (arity, finite targets, class range).
    pub fn new(schema: Schema, features: Vec<Vec<Value>>, targets: Vec<Target>) -> Result<Self> {
        if schema.feature_kinds.len() != schema.feature_names.len() {
            return Err(Error::Schema(
                "feature kinds and names differ in length".into(),
            ));
        }
        if features.len() != targets.len() {
            return Err(Error::input(format!(
                "{} feature rows but {} targets",
                features.len(),
                targets.len()
            )));
        }
        let rows = features
            .into_iter()
            .zip(targets)
            .enumerate()
            .map(|(row_id, (features, target))| {
                if features.len() != schema.arity() {
                    return Err(Error::input_at(
                        row_id,
                        format!(
                            "expected {} features, found {}",
                            schema.arity(),
                            features.len()
                        ),
                    ));
                }
                if let Some(Value::Real(v)) = features
                    .iter()
                    .find(|v| matches!(v, Value::Real(x) if !x.is_finite()))
                {
                    return Err(Error::input_at(
                        row_id,
                        format!("non-finite feature value {v}"),
                    ));
                }
                check_target(&schema.task, &target).map_err(|m| Error::input_at(row_id, m))?;
                Ok(DataPoint {
                    row_id,
                    features,
                    target,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            schema,
            rows,
            temporal: None,
        })
    }

    /// Convenience constructor for all-real feature matrices.
    pub fn from_reals(
        task: TaskKind,
        features: Vec<Vec<f64>>,
        targets: Vec<Target>,
    ) -> Result<Self> {
        let arity = features.first().map_or(0, Vec::len);
        let schema = Schema {
            feature_names: (0..arity).map(|i| format!("x{i}")).collect(),
            feature_kinds: vec![ValueKind::Real; arity],
            target_name: "y".into(),
            task,
            temporal_column: None,
        };
        let features = features
            .into_iter()
            .map(|row| row.into_iter().map(Value::Real).collect())
            .collect();
        Dataset::new(schema, features, targets)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn task(&self) -> TaskKind {
        self.schema.task
    }

    pub fn rows(&self) -> &[DataPoint] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Values of the declared temporal column, if one was loaded.
    pub fn temporal_values(&self) -> Option<&[Value]> {
        self.temporal.as_deref()
    }

    /// Values of a named column: the temporal column or a feature.
    pub fn column(&self, name: &str) -> Option<Vec<Value>> {
        if self.schema.temporal_column.as_deref() == Some(name) {
            if let Some(values) = &self.temporal {
                return Some(values.clone());
            }
        }
        let idx = self.schema.feature_index(name)?;
        Some(self.rows.iter().map(|r| r.features[idx].clone()).collect())
    }

    /// Class indices of a single-label classification dataset.
    pub fn class_targets(&self) -> Result<Vec<usize>> {
        self.rows
            .iter()
            .map(|r| {
                r.target
                    .class()
                    .ok_or_else(|| Error::Task("single-label class targets required".into()))
            })
            .collect()
    }

    pub fn real_targets(&self) -> Result<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| {
                r.target
                    .real()
                    .ok_or_else(|| Error::Task("real-valued targets required".into()))
            })
            .collect()
    }
}

fn check_target(task: &TaskKind, target: &Target) -> std::result::Result<(), String> {
    match (task, target) {
        (TaskKind::Regression, Target::Real(v)) if v.is_finite() => Ok(()),
        (TaskKind::Regression, Target::Real(v)) => Err(format!("non-finite target {v}")),
        (
            TaskKind::BinaryClassification | TaskKind::MulticlassClassification { .. },
            Target::Class(c),
        ) => {
            let k = task.num_classes().unwrap_or(0);
            if *c < k {
                Ok(())
            } else {
                Err(format!("class label {c} outside 0..{k}"))
            }
        }
        (TaskKind::MultilabelClassification { k }, Target::Labels(labels)) => {
            if labels.is_empty() {
                return Err("empty label set".into());
            }
            match labels.iter().find(|&&l| l >= *k) {
                Some(l) => Err(format!("label {l} outside 0..{k}")),
                None => Ok(()),
            }
        }
        (task, target) => Err(format!("target {target:?} does not fit task {task}")),
    }
}

fn parse_target(task: &TaskKind, cell: &str) -> std::result::Result<Target, String> {
    let cell = cell.trim();
    if cell.is_empty() {
        return Err("missing target".into());
    }
    let parse_class = |s: &str| -> std::result::Result<usize, String> {
        s.trim()
            .parse::<usize>()
            .map_err(|_| format!("target `{s}` is not a class index"))
    };
    let target = match task {
        TaskKind::Regression => {
            let v: f64 = cell
                .parse()
                .map_err(|_| format!("target `{cell}` is not a number"))?;
            Target::Real(v)
        }
        TaskKind::BinaryClassification | TaskKind::MulticlassClassification { .. } => {
            Target::Class(parse_class(cell)?)
        }
        TaskKind::MultilabelClassification { .. } => {
            let labels: BTreeSet<usize> = cell
                .split(';')
                .map(parse_class)
                .collect::<std::result::Result<_, _>>()?;
            Target::Labels(labels.into_iter().collect())
        }
    };
    check_target(task, &target)?;
    Ok(target)
}

fn parse_feature(kind: ValueKind, cell: &str) -> std::result::Result<Value, String> {
    if cell.is_empty() {
        return Ok(Value::Missing);
    }
    match kind {
        ValueKind::Text => Ok(Value::Text(cell.to_string())),
        ValueKind::Real => {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| format!("feature `{cell}` is not a number"))?;
            if v.is_finite() {
                Ok(Value::Real(v))
            } else {
                Err(format!("non-finite feature `{cell}`"))
            }
        }
    }
}

/// Reads a CSV document (header row required) into a [`Dataset`].
///
/// Empty feature cells become [`Value::Missing`]; a missing or non-finite
/// target rejects the row.
pub fn load_dataset<R: Read>(source: R, spec: &SchemaSpec) -> Result<Dataset> {
    let task = spec.task_kind()?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(source);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::input(format!("cannot read header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::input("empty document"));
    }

    let position = |name: &str| header.iter().position(|h| h == name);
    let target_idx = position(&spec.target)
        .ok_or_else(|| Error::Schema(format!("target column `{}` not in header", spec.target)))?;
    let temporal_idx = match &spec.temporal_column {
        Some(name) => Some(
            position(name)
                .ok_or_else(|| Error::Schema(format!("temporal column `{name}` not in header")))?,
        ),
        None => None,
    };
    for name in spec.features.keys().chain(&spec.ignore) {
        if position(name).is_none() {
            return Err(Error::Schema(format!(
                "declared column `{name}` not in header"
            )));
        }
    }
    if spec.ignore.contains(&spec.target) {
        return Err(Error::Schema("target column cannot be ignored".into()));
    }

    let feature_cols: Vec<usize> = (0..header.len())
        .filter(|&i| i != target_idx && !spec.ignore.contains(&header[i]))
        .collect();
    let feature_kinds: Vec<ValueKind> = feature_cols
        .iter()
        .map(|&i| spec.features.get(&header[i]).copied().unwrap_or_default())
        .collect();
    let temporal_kind =
        temporal_idx.map(|i| spec.features.get(&header[i]).copied().unwrap_or_default());

    let mut features = Vec::new();
    let mut targets = Vec::new();
    let mut temporal = temporal_idx.map(|_| Vec::new());
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::input_at(row, e.to_string()))?;
        let target =
            parse_target(&task, &record[target_idx]).map_err(|m| Error::input_at(row, m))?;
        let values = feature_cols
            .iter()
            .zip(&feature_kinds)
            .map(|(&i, &kind)| parse_feature(kind, &record[i]))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|m| Error::input_at(row, m))?;
        if let (Some(i), Some(kind), Some(col)) = (temporal_idx, temporal_kind, temporal.as_mut()) {
            col.push(parse_feature(kind, &record[i]).map_err(|m| Error::input_at(row, m))?);
        }
        features.push(values);
        targets.push(target);
    }
    if features.is_empty() {
        return Err(Error::input("document has a header but no data rows"));
    }

    let schema = Schema {
        feature_names: feature_cols.iter().map(|&i| header[i].clone()).collect(),
        feature_kinds,
        target_name: spec.target.clone(),
        task,
        temporal_column: spec.temporal_column.clone(),
    };
    let mut dataset = Dataset::new(schema, features, targets)?;
    dataset.temporal = temporal;
    Ok(dataset)
}

/// Per-class row counts of a classification dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution {
    /// Count for every declared class, zero counts included.
    pub counts: BTreeMap<usize, usize>,
    pub n: usize,
    pub minority_proportion: f64,
}

impl ClassDistribution {
    pub fn from_counts(counts: impl IntoIterator<Item = usize>) -> Result<Self> {
        let counts: BTreeMap<usize, usize> = counts.into_iter().enumerate().collect();
        if counts.len() < 2 {
            return Err(Error::input(
                "class distribution needs at least two classes",
            ));
        }
        let n = counts.values().sum();
        if n == 0 {
            return Err(Error::input("class distribution has no rows"));
        }
        Ok(Self::with_total(counts, n))
    }

    fn with_total(counts: BTreeMap<usize, usize>, n: usize) -> Self {
        let min = counts.values().copied().min().unwrap_or(0);
        ClassDistribution {
            minority_proportion: min as f64 / n as f64,
            counts,
            n,
        }
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    /// Majority class (lowest index on ties) and its count.
    pub fn majority(&self) -> (usize, usize) {
        self.counts.iter().fold(
            (0, 0),
            |best, (&c, &n)| if n > best.1 { (c, n) } else { best },
        )
    }

    /// Minority class (highest index on ties, so it differs from the
    /// majority class whenever k >= 2) and its count.
    pub fn minority(&self) -> (usize, usize) {
        self.counts.iter().fold(
            (0, usize::MAX),
            |best, (&c, &n)| if n <= best.1 { (c, n) } else { best },
        )
    }

    pub fn majority_proportion(&self) -> f64 {
        self.majority().1 as f64 / self.n as f64
    }
}

/// Counts rows per declared class.
///
/// For multilabel data each row counts once for every label it carries, so
/// the counts need not sum to `n`.
pub fn class_distribution(dataset: &Dataset) -> Result<ClassDistribution> {
    let k = dataset
        .task()
        .num_classes()
        .ok_or_else(|| Error::Task("class distribution is undefined for regression".into()))?;
    let mut counts: BTreeMap<usize, usize> = (0..k).map(|c| (c, 0)).collect();
    for row in dataset.rows() {
        match &row.target {
            Target::Class(c) => *counts.entry(*c).or_default() += 1,
            Target::Labels(labels) => {
                for l in labels {
                    *counts.entry(*l).or_default() += 1;
                }
            }
            Target::Real(_) => unreachable!("classification rows carry class targets"),
        }
    }
    Ok(ClassDistribution::with_total(counts, dataset.len()))
}
