//! Split and label integrity: duplicate rows shared across splits or folds,
//! clusters scattered over folds, features that encode the target, and
//! metrics that flatter a majority-class predictor.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::data::{
    group_identical_rows, ClassDistribution, Dataset, SplitAssignment, SplitLabel, SplitMode,
    TaskKind, Value, ValueKind,
};
use crate::error::{Error, Result};
use crate::metrics::MetricName;
use crate::report::Verdict;

pub const DEFAULT_LEAK_THRESHOLD: f64 = 0.99;
pub const DEFAULT_LEAK_MARGIN: f64 = 0.05;
pub const DEFAULT_IMBALANCE_THRESHOLD: f64 = 0.1;
/// Real features with more distinct train values than this are binned.
pub const MAX_RAW_PROBE_VALUES: usize = 16;
pub const PROBE_BINS: usize = 16;

/// Rows sharing one canonical feature vector, spread over several splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Collision {
    pub fingerprint: String,
    /// `(split label, row ids)` in label order; always at least two entries.
    pub rows_by_label: Vec<(String, Vec<usize>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub collisions: Vec<Collision>,
    pub leak_present: bool,
    /// Number of cross-label row pairs the check covers.
    pub pairs_checked: u64,
}

fn cross_label_collisions(
    dataset: &Dataset,
    split: &SplitAssignment,
    rounding: Option<u32>,
) -> Result<LeakageReport> {
    split.check_covers(dataset)?;
    let mut collisions = Vec::new();
    for (fp, rows) in group_identical_rows(dataset, rounding) {
        let mut by_label: BTreeMap<SplitLabel, Vec<usize>> = BTreeMap::new();
        for row in rows {
            by_label.entry(split.label(row)).or_default().push(row);
        }
        if by_label.len() >= 2 {
            collisions.push(Collision {
                fingerprint: fp.hex(),
                rows_by_label: by_label
                    .into_iter()
                    .map(|(l, r)| (l.to_string(), r))
                    .collect(),
            });
        }
    }
    let n = split.len() as u64;
    let same_label: u64 = split
        .sizes()
        .values()
        .map(|&s| (s as u64) * (s as u64))
        .sum();
    Ok(LeakageReport {
        leak_present: !collisions.is_empty(),
        collisions,
        pairs_checked: (n * n - same_label) / 2,
    })
}

/// Finds feature vectors present in two or more of train, validation and
/// test. Duplicates inside a single split are not leakage.
pub fn check_split_disjoint(
    dataset: &Dataset,
    split: &SplitAssignment,
    rounding: Option<u32>,
) -> Result<LeakageReport> {
    if split.mode() != SplitMode::Holdout {
        return Err(Error::Mode("split is k-fold; use the fold check".into()));
    }
    cross_label_collisions(dataset, split, rounding)
}

/// Finds feature vectors present in two or more folds.
pub fn check_fold_disjoint(
    dataset: &Dataset,
    split: &SplitAssignment,
    rounding: Option<u32>,
) -> Result<LeakageReport> {
    if split.mode() == SplitMode::Holdout {
        return Err(Error::Mode("split is holdout; use the split check".into()));
    }
    cross_label_collisions(dataset, split, rounding)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterViolation {
    pub cluster: String,
    pub folds: BTreeSet<usize>,
}

/// Lists every cluster whose rows land in more than one fold.
pub fn check_cluster_fold_assignment(
    cluster_labels: &BTreeMap<usize, String>,
    split: &SplitAssignment,
) -> Result<Vec<ClusterViolation>> {
    if split.mode() == SplitMode::Holdout {
        return Err(Error::Mode(
            "cluster-fold check needs a k-fold split".into(),
        ));
    }
    if let Some(row) = (0..split.len()).find(|r| !cluster_labels.contains_key(r)) {
        return Err(Error::input_at(row, "row has no cluster label"));
    }
    if let Some((&row, _)) = cluster_labels.range(split.len()..).next() {
        return Err(Error::input_at(
            row,
            format!("cluster label for row {row} outside the split"),
        ));
    }
    let mut folds: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    for (&row, cluster) in cluster_labels {
        if let SplitLabel::Fold(f) = split.label(row) {
            folds.entry(cluster.as_str()).or_default().insert(f);
        }
    }
    Ok(folds
        .into_iter()
        .filter(|(_, f)| f.len() >= 2)
        .map(|(c, folds)| ClusterViolation {
            cluster: c.to_string(),
            folds,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureProbe {
    pub feature: String,
    pub probe_accuracy: f64,
    pub majority_baseline: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelLeakProbe {
    /// Split the lookup tables were scored on.
    pub evaluated_on: String,
    pub threshold: f64,
    pub margin: f64,
    pub features: Vec<FeatureProbe>,
}

impl LabelLeakProbe {
    pub fn flagged(&self) -> impl Iterator<Item = &FeatureProbe> {
        self.features.iter().filter(|f| f.flagged)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum ProbeKey {
    Missing,
    Raw(u64),
    Bin(usize),
    Text(String),
}

/// Maps a column's values to lookup keys using cut points learned on train.
struct KeyMap {
    cuts: Option<Vec<f64>>,
}

impl KeyMap {
    fn fit(kind: ValueKind, train: &[&Value]) -> Self {
        if kind == ValueKind::Text {
            return KeyMap { cuts: None };
        }
        let mut reals: Vec<f64> = train
            .iter()
            .filter_map(|v| match v {
                Value::Real(x) => Some(*x),
                _ => None,
            })
            .collect();
        reals.sort_by(f64::total_cmp);
        let mut distinct = reals.clone();
        distinct.dedup();
        if distinct.len() <= MAX_RAW_PROBE_VALUES {
            return KeyMap { cuts: None };
        }
        let m = reals.len();
        let cuts = (1..PROBE_BINS).map(|i| reals[i * m / PROBE_BINS]).collect();
        KeyMap { cuts: Some(cuts) }
    }

    fn key(&self, value: &Value) -> ProbeKey {
        match (value, &self.cuts) {
            (Value::Missing, _) => ProbeKey::Missing,
            (Value::Text(s), _) => ProbeKey::Text(s.clone()),
            (Value::Real(x), None) => ProbeKey::Raw(if *x == 0.0 {
                0f64.to_bits()
            } else {
                x.to_bits()
            }),
            (Value::Real(x), Some(cuts)) => ProbeKey::Bin(cuts.iter().filter(|c| **c < *x).count()),
        }
    }
}

fn majority_of(counts: &BTreeMap<usize, usize>) -> usize {
    counts
        .iter()
        .fold(
            (0, 0),
            |best, (&c, &n)| if n > best.1 { (c, n) } else { best },
        )
        .0
}

/// Probes each feature with a lookup table from value to train-majority
/// target and flags features that predict held-out targets too well.
///
/// Held-out rows are the validation split, or the test split when there is
/// no validation split. A feature is flagged when its probe accuracy reaches
/// `threshold` and beats the constant train-majority predictor by `margin`.
pub fn check_label_leakage(
    dataset: &Dataset,
    split: &SplitAssignment,
    threshold: f64,
    margin: f64,
) -> Result<LabelLeakProbe> {
    match dataset.task() {
        TaskKind::Regression => {
            return Err(Error::Task(
                "label-leak probe needs a classification task".into(),
            ))
        }
        TaskKind::MultilabelClassification { .. } => {
            return Err(Error::Task(
                "label-leak probe needs single-label targets".into(),
            ))
        }
        _ => {}
    }
    if split.mode() != SplitMode::Holdout {
        return Err(Error::Mode("label-leak probe needs a holdout split".into()));
    }
    split.check_covers(dataset)?;
    let train = split.rows_with(SplitLabel::Train);
    let (evaluated_on, held_out) = match split.rows_with(SplitLabel::Validation) {
        v if !v.is_empty() => (SplitLabel::Validation, v),
        _ => (SplitLabel::Test, split.rows_with(SplitLabel::Test)),
    };
    if train.is_empty() || held_out.is_empty() {
        return Err(Error::Split(
            "label-leak probe needs train rows and validation or test rows".into(),
        ));
    }

    let targets = dataset.class_targets()?;
    let rows = dataset.rows();
    let mut global = BTreeMap::new();
    for &r in &train {
        *global.entry(targets[r]).or_insert(0) += 1;
    }
    let global_majority = majority_of(&global);
    let hits =
        |pred: &dyn Fn(usize) -> usize| held_out.iter().filter(|&&r| pred(r) == targets[r]).count();
    let majority_baseline = hits(&|_| global_majority) as f64 / held_out.len() as f64;

    let schema = dataset.schema();
    let features = schema
        .feature_names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let train_values: Vec<&Value> = train.iter().map(|&r| &rows[r].features[j]).collect();
            let keys = KeyMap::fit(schema.feature_kinds[j], &train_values);
            let mut table: HashMap<ProbeKey, BTreeMap<usize, usize>> = HashMap::new();
            for (&r, value) in train.iter().zip(&train_values) {
                *table
                    .entry(keys.key(value))
                    .or_default()
                    .entry(targets[r])
                    .or_insert(0) += 1;
            }
            let lookup: HashMap<ProbeKey, usize> = table
                .iter()
                .map(|(k, c)| (k.clone(), majority_of(c)))
                .collect();
            let predict = |r: usize| {
                *lookup
                    .get(&keys.key(&rows[r].features[j]))
                    .unwrap_or(&global_majority)
            };
            let probe_accuracy = hits(&predict) as f64 / held_out.len() as f64;
            FeatureProbe {
                feature: name.clone(),
                probe_accuracy,
                majority_baseline,
                flagged: probe_accuracy >= threshold
                    && probe_accuracy >= majority_baseline + margin,
            }
        })
        .collect();
    Ok(LabelLeakProbe {
        evaluated_on: evaluated_on.to_string(),
        threshold,
        margin,
        features,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricAdvisory {
    pub verdict: Verdict,
    pub metric: MetricName,
    pub minority_class: usize,
    pub minority_proportion: f64,
    pub imbalance_threshold: f64,
    /// Accuracy of always predicting the majority class.
    pub baseline_accuracy: f64,
    pub recommended: Vec<MetricName>,
    pub message: String,
}

/// Warns when plain accuracy is chosen on data whose minority class is rarer
/// than `imbalance_threshold`.
pub fn check_metric_appropriateness(
    task: TaskKind,
    dist: &ClassDistribution,
    chosen_metric: MetricName,
    imbalance_threshold: f64,
) -> MetricAdvisory {
    let baseline_accuracy = dist.majority_proportion();
    let imbalanced = task.is_classification() && dist.minority_proportion < imbalance_threshold;
    let (verdict, recommended, message) = if chosen_metric == MetricName::Accuracy && imbalanced {
        (
            Verdict::Warn,
            vec![MetricName::Sensitivity, MetricName::BalancedAccuracy],
            format!(
                "minority class is {:.4} of the data; always predicting the majority class already \
                 scores accuracy {baseline_accuracy:.4}. Report recall (or its complement, the miss \
                 rate) or balanced accuracy instead",
                dist.minority_proportion
            ),
        )
    } else {
        (
            Verdict::Pass,
            Vec::new(),
            format!("{chosen_metric} is appropriate for this class balance"),
        )
    };
    MetricAdvisory {
        verdict,
        metric: chosen_metric,
        minority_class: dist.minority().0,
        minority_proportion: dist.minority_proportion,
        imbalance_threshold,
        baseline_accuracy,
        recommended,
        message,
    }
}
