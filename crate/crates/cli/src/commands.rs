use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use mlaudit_core::catalog::{
    determine_cl, evaluate_assessment, parse_catalog, sample_catalog, Assessment, ConformityResult,
    FindingClass, ImpactAssessment,
};
use mlaudit_core::data::{
    class_distribution, duplicate_census, Dataset, SplitAssignment, Target, TaskKind,
};
use mlaudit_core::diagnostics::{
    baseline_majority_performance, capacity_sweep_analysis, check_loss_task_consistency,
    check_min_performance, overfit_gap, validate_probability_outputs, CapacitySweep, LossVerdict,
    ModelDescriptor, PerformanceRequirement, Regime,
};
use mlaudit_core::integrity::{
    check_cluster_fold_assignment, check_fold_disjoint, check_label_leakage,
    check_metric_appropriateness, check_split_disjoint, LeakageReport,
};
use mlaudit_core::metrics::{
    auc, classification_report, confusion_matrix, per_label_report, per_label_report_multilabel,
    regression_report, roc_curve, top_k_accuracy, CurveMode, MetricName,
};
use mlaudit_core::report::{AuditReport, Metadata, Section, Verdict};
use mlaudit_core::workflow::{
    CaseEvent, CaseLog, CertificateStatus, CertificationCase, EventKind, MonitoringOutcome,
    RecertificationPath, Severity,
};
use mlaudit_core::Error;
use serde_json::{json, Value as Json};

use crate::args::*;
use crate::inputs::*;
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

#[derive(Default)]
struct Outcome {
    sections: Vec<Section>,
    conformity: Option<ConformityResult>,
    dataset: Option<String>,
}

impl Outcome {
    fn one(section: Section) -> Self {
        Outcome {
            sections: vec![section],
            ..Outcome::default()
        }
    }

    fn on(mut self, dataset: &Path) -> Self {
        self.dataset = Some(dataset.display().to_string());
        self
    }
}

pub fn command_path(command: &Command) -> &'static str {
    match command {
        Command::Metrics(MetricsCmd::Classify { .. }) => "metrics classify",
        Command::Metrics(MetricsCmd::Regress { .. }) => "metrics regress",
        Command::Check(CheckCmd::Splits { .. }) => "check splits",
        Command::Check(CheckCmd::Folds { .. }) => "check folds",
        Command::Check(CheckCmd::Clusters { .. }) => "check clusters",
        Command::Check(CheckCmd::LabelLeak { .. }) => "check label-leak",
        Command::Check(CheckCmd::MetricFit { .. }) => "check metric-fit",
        Command::Diagnose(DiagnoseCmd::Overfit { .. }) => "diagnose overfit",
        Command::Diagnose(DiagnoseCmd::Sweep { .. }) => "diagnose sweep",
        Command::Diagnose(DiagnoseCmd::Loss { .. }) => "diagnose loss",
        Command::Diagnose(DiagnoseCmd::ProbOutputs { .. }) => "diagnose prob-outputs",
        Command::Diagnose(DiagnoseCmd::MinPerf { .. }) => "diagnose min-perf",
        Command::Catalog(CatalogCmd::Evaluate { .. }) => "catalog evaluate",
        Command::Catalog(CatalogCmd::Cl { .. }) => "catalog cl",
        Command::Case(CaseCmd::Init { .. }) => "case init",
        Command::Case(CaseCmd::Advance { .. }) => "case advance",
        Command::Case(CaseCmd::Status { .. }) => "case status",
        Command::Report(ReportCmd::Render { .. }) => "report render",
    }
}

/// Runs one parsed command and assembles its report.
pub fn execute(cli: &Cli, run_date: NaiveDate) -> Result<AuditReport> {
    let outcome = match &cli.command {
        Command::Report(ReportCmd::Render { input }) => {
            return Ok(AuditReport::from_json(&read_text(input)?)?)
        }
        Command::Metrics(cmd) => metrics(cmd)?,
        Command::Check(cmd) => check(cmd)?,
        Command::Diagnose(cmd) => diagnose(cmd)?,
        Command::Catalog(cmd) => catalog(cmd)?,
        Command::Case(cmd) => case(cmd, run_date)?,
    };
    let mut report = AuditReport::new(Metadata {
        tool: "mlaudit".into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        date: run_date.to_string(),
        command: command_path(&cli.command).into(),
        dataset: outcome.dataset,
        model: cli.model_id.clone(),
    });
    for section in outcome.sections {
        report.push(section);
    }
    report.conformity = outcome.conformity;
    Ok(report)
}

fn fmt_value(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".into(), |v| format!("{v:.4}"))
}

fn values_message(values: &BTreeMap<MetricName, Option<f64>>) -> String {
    let defined: Vec<String> = values
        .iter()
        .filter_map(|(m, v)| v.map(|v| format!("{} {v:.4}", metric_label(*m))))
        .collect();
    let undefined: Vec<&str> = values
        .iter()
        .filter(|(_, v)| v.is_none())
        .map(|(m, _)| m.as_str())
        .collect();
    if undefined.is_empty() {
        defined.join(", ")
    } else {
        format!(
            "{}; undefined: {}",
            defined.join(", "),
            undefined.join(", ")
        )
    }
}

fn metric_label(metric: MetricName) -> String {
    match metric {
        MetricName::Sensitivity => "sensitivity (recall)".into(),
        other => other.to_string(),
    }
}

fn defined_verdict<'a>(values: impl IntoIterator<Item = &'a Option<f64>>) -> Verdict {
    if values.into_iter().all(Option::is_some) {
        Verdict::Pass
    } else {
        Verdict::Undefined
    }
}

enum ClassTargets {
    Single(Vec<usize>),
    Multi(Vec<Vec<usize>>),
}

fn load_targets(targets: &TargetArgs) -> Result<(Option<Dataset>, Option<&Path>)> {
    match (&targets.data, &targets.schema) {
        (Some(data), Some(schema)) => {
            Ok((Some(load_data_paths(data, schema)?.0), Some(data.as_path())))
        }
        _ => Ok((None, targets.actual.as_deref())),
    }
}

fn ensure_len(what: &str, got: usize, n: usize) -> Result<()> {
    if got == n {
        Ok(())
    } else {
        Err(Error::input(format!("{what} has {got} rows but there are {n} targets")).into())
    }
}

fn metrics(cmd: &MetricsCmd) -> Result<Outcome> {
    match cmd {
        MetricsCmd::Classify {
            targets,
            predictions,
            k,
            positive_class,
            scores,
            curve,
            score_matrix,
            top_k,
        } => {
            let (dataset, source) = load_targets(targets)?;
            let (task, actual) = match &dataset {
                Some(ds) => match ds.task() {
                    TaskKind::Regression => {
                        return Err(Error::Task(
                            "metrics classify needs a classification schema".into(),
                        )
                        .into())
                    }
                    task @ TaskKind::MultilabelClassification { .. } => (
                        task,
                        ClassTargets::Multi(
                            ds.rows()
                                .iter()
                                .map(|r| match &r.target {
                                    Target::Labels(l) => l.clone(),
                                    _ => unreachable!("multilabel rows carry label sets"),
                                })
                                .collect(),
                        ),
                    ),
                    task => (task, ClassTargets::Single(ds.class_targets()?)),
                },
                None => {
                    let actual =
                        parse_classes(&read_cells(targets.actual.as_deref().expect("clap"))?, *k)?;
                    let inferred = actual.iter().max().map_or(2, |m| m + 1).max(2);
                    let k = k.unwrap_or(inferred).max(2);
                    let task = if k == 2 {
                        TaskKind::BinaryClassification
                    } else {
                        TaskKind::MulticlassClassification { k }
                    };
                    (task, ClassTargets::Single(actual))
                }
            };
            let k = task.num_classes().expect("classification task");
            let cells = read_cells(predictions)?;
            let mut sections = Vec::new();
            match &actual {
                ClassTargets::Multi(actual) => {
                    let predicted = parse_label_sets(&cells, k)?;
                    ensure_len("predictions", predicted.len(), actual.len())?;
                    let labels = per_label_report_multilabel(actual, &predicted, k)?;
                    let values: BTreeMap<MetricName, Option<f64>> = labels
                        .macro_average
                        .iter()
                        .map(|(m, v)| (*m, v.value))
                        .collect();
                    sections.push(Section::new(
                        "classification_metrics",
                        defined_verdict(values.values()),
                        format!("macro average: {}", values_message(&values)),
                        json!({"task": task.name(), "k": k, "n": actual.len(), "values": values, "per_label": labels}),
                    ));
                }
                ClassTargets::Single(actual) => {
                    let predicted = parse_classes(&cells, Some(k))?;
                    ensure_len("predictions", predicted.len(), actual.len())?;
                    let cm = confusion_matrix(actual, &predicted, k)?;
                    let report = classification_report(&cm, *positive_class)?;
                    let values = report.values();
                    let per_label = if k > 2 {
                        Some(per_label_report(actual, &predicted, k)?)
                    } else {
                        None
                    };
                    sections.push(Section::new(
                        "classification_metrics",
                        defined_verdict(values.values()),
                        values_message(&values),
                        json!({
                            "task": task.name(),
                            "k": k,
                            "n": actual.len(),
                            "positive_class": positive_class,
                            "confusion_matrix": cm.cells(),
                            "values": values,
                            "report": report,
                            "per_label": per_label,
                        }),
                    ));
                }
            }

            if let Some(path) = scores {
                let ClassTargets::Single(actual) = &actual else {
                    return Err(
                        Error::Task("threshold curves need single-label targets".into()).into(),
                    );
                };
                let scores = parse_reals(&read_cells(path)?)?;
                ensure_len("scores", scores.len(), actual.len())?;
                let positives: Vec<bool> = actual.iter().map(|c| c == positive_class).collect();
                let mode = match curve {
                    CurveArg::Roc => CurveMode::Roc,
                    CurveArg::Pr => CurveMode::PrecisionRecall,
                };
                sections.push(match roc_curve(&positives, &scores, mode) {
                    Ok(curve) => {
                        let area = if mode == CurveMode::Roc {
                            Some(auc(&curve)?)
                        } else {
                            None
                        };
                        let message = match area {
                            Some(a) => {
                                format!("auc {a:.4} over {} thresholds", curve.thresholds.len())
                            }
                            None => {
                                format!("precision-recall curve with {} points", curve.points.len())
                            }
                        };
                        Section::new(
                            "roc_curve",
                            Verdict::Pass,
                            message,
                            json!({"curve": curve, "auc": area, "values": {"auc": area}}),
                        )
                    }
                    Err(Error::Degenerate(reason)) => Section::new(
                        "roc_curve",
                        Verdict::Undefined,
                        reason,
                        json!({"curve": null, "auc": null, "values": {"auc": null}}),
                    ),
                    Err(e) => return Err(e.into()),
                });
            }

            if let (Some(path), Some(top)) = (score_matrix, top_k) {
                let ClassTargets::Single(actual) = &actual else {
                    return Err(
                        Error::Task("top-k accuracy needs single-label targets".into()).into(),
                    );
                };
                let matrix = read_matrix(path)?;
                ensure_len("score matrix", matrix.len(), actual.len())?;
                let value = top_k_accuracy(actual, &matrix, *top)?;
                sections.push(Section::new(
                    "top_k_accuracy",
                    Verdict::Pass,
                    format!("top-{top} accuracy {value:.4}"),
                    json!({"top_k": top, "value": value, "values": {"top_k_accuracy": value}}),
                ));
            }
            Ok(Outcome {
                sections,
                dataset: source.map(|p| p.display().to_string()),
                ..Outcome::default()
            })
        }
        MetricsCmd::Regress {
            targets,
            predictions,
        } => {
            let (dataset, source) = load_targets(targets)?;
            let actual = match &dataset {
                Some(ds) => ds.real_targets()?,
                None => parse_reals(&read_cells(targets.actual.as_deref().expect("clap"))?)?,
            };
            let predicted = parse_reals(&read_cells(predictions)?)?;
            ensure_len("predictions", predicted.len(), actual.len())?;
            let report = regression_report(&actual, &predicted)?;
            let values = BTreeMap::from([
                (MetricName::Mae, Some(report.mae)),
                (MetricName::Mse, Some(report.mse)),
                (MetricName::Rmse, Some(report.rmse)),
                (MetricName::MaxError, Some(report.max_error)),
                (MetricName::ExplainedVariance, report.explained_variance),
                (MetricName::R2, report.r2),
            ]);
            Ok(Outcome {
                sections: vec![Section::new(
                    "regression_metrics",
                    defined_verdict(values.values()),
                    values_message(&values),
                    json!({"n": report.n, "values": values, "report": report}),
                )],
                dataset: source.map(|p| p.display().to_string()),
                ..Outcome::default()
            })
        }
    }
}

fn split_sizes(split: &SplitAssignment) -> BTreeMap<String, usize> {
    split
        .sizes()
        .into_iter()
        .map(|(l, n)| (l.to_string(), n))
        .collect()
}

fn leakage_section(
    check: &str,
    what: &str,
    report: LeakageReport,
    dataset: &Dataset,
    split: &SplitAssignment,
    rounding: Option<u32>,
) -> Section {
    let census = duplicate_census(dataset, rounding);
    let (verdict, message) = if report.leak_present {
        (
            Verdict::Fail,
            format!(
                "{} feature vectors shared across {what} ({} row pairs in different {what})",
                report.collisions.len(),
                report.pairs_checked
            ),
        )
    } else {
        (
            Verdict::Pass,
            format!(
                "no feature vector shared across {what}; {} duplicate groups in total",
                census.len()
            ),
        )
    };
    Section::new(
        check,
        verdict,
        message,
        json!({"leakage": report, "sizes": split_sizes(split), "duplicate_groups": census, "rounding": rounding}),
    )
}

fn check(cmd: &CheckCmd) -> Result<Outcome> {
    match cmd {
        CheckCmd::Splits {
            data,
            split,
            rounding,
        } => {
            let (dataset, spec) = load_data(data)?;
            let split = resolve_split(split, &dataset, &spec)?;
            let report = check_split_disjoint(&dataset, &split, *rounding)?;
            Ok(Outcome::one(leakage_section(
                "split_disjoint",
                "splits",
                report,
                &dataset,
                &split,
                *rounding,
            ))
            .on(&data.data))
        }
        CheckCmd::Folds {
            data,
            split,
            rounding,
        } => {
            let (dataset, spec) = load_data(data)?;
            let split = resolve_split(split, &dataset, &spec)?;
            let report = check_fold_disjoint(&dataset, &split, *rounding)?;
            Ok(Outcome::one(leakage_section(
                "fold_disjoint",
                "folds",
                report,
                &dataset,
                &split,
                *rounding,
            ))
            .on(&data.data))
        }
        CheckCmd::Clusters { clusters, split } => {
            let labels = read_clusters(clusters)?;
            let split = read_split_file(split, None)?;
            let violations = check_cluster_fold_assignment(&labels, &split)?;
            let clusters_seen: std::collections::BTreeSet<&String> = labels.values().collect();
            let (verdict, message) = if violations.is_empty() {
                (
                    Verdict::Pass,
                    format!("all {} clusters confined to one fold", clusters_seen.len()),
                )
            } else {
                let names: Vec<&str> = violations.iter().map(|v| v.cluster.as_str()).collect();
                (
                    Verdict::Fail,
                    format!(
                        "{} clusters span several folds: {}",
                        violations.len(),
                        names.join(", ")
                    ),
                )
            };
            Ok(Outcome::one(Section::new(
                "cluster_fold_assignment",
                verdict,
                message,
                json!({"violations": violations, "clusters": clusters_seen.len(), "sizes": split_sizes(&split)}),
            )))
        }
        CheckCmd::LabelLeak {
            data,
            split,
            threshold,
            margin,
        } => {
            let (dataset, spec) = load_data(data)?;
            let split = resolve_split(split, &dataset, &spec)?;
            let probe = check_label_leakage(&dataset, &split, *threshold, *margin)?;
            let flagged: Vec<&str> = probe.flagged().map(|f| f.feature.as_str()).collect();
            let (verdict, message) = if flagged.is_empty() {
                (
                    Verdict::Pass,
                    format!(
                        "no feature predicts the {} targets on its own",
                        probe.evaluated_on
                    ),
                )
            } else {
                (
                    Verdict::Fail,
                    format!("features reproducing the target: {}", flagged.join(", ")),
                )
            };
            Ok(Outcome::one(Section::new("label_leakage", verdict, message, probe)).on(&data.data))
        }
        CheckCmd::MetricFit {
            data,
            metric,
            imbalance_threshold,
        } => {
            let (dataset, _) = load_data(data)?;
            let metric: MetricName = metric.parse()?;
            let dist = class_distribution(&dataset)?;
            let advisory =
                check_metric_appropriateness(dataset.task(), &dist, metric, *imbalance_threshold);
            let baseline = baseline_majority_performance(&dist);
            let message = if advisory.recommended.is_empty() {
                advisory.message.clone()
            } else {
                let names: Vec<String> = advisory
                    .recommended
                    .iter()
                    .map(|m| metric_label(*m))
                    .collect();
                format!("{}; recommended: {}", advisory.message, names.join(", "))
            };
            Ok(Outcome::one(Section::new(
                "metric_appropriateness",
                advisory.verdict,
                message,
                json!({"advisory": advisory, "class_distribution": dist, "majority_baseline": baseline}),
            ))
            .on(&data.data))
        }
    }
}

fn measured_values(path: &Path) -> Result<BTreeMap<MetricName, Option<f64>>> {
    let text = read_text(path)?;
    let value: Json = serde_json::from_str(&text)
        .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
    let mut measured = BTreeMap::new();
    if value.get("schema_version").is_some() {
        let report = AuditReport::from_json(&text)?;
        for section in &report.sections {
            if let Some(values) = section.details.get("values").and_then(Json::as_object) {
                for (name, v) in values {
                    measured.insert(name.parse::<MetricName>()?, v.as_f64());
                }
            }
        }
    } else {
        let raw: BTreeMap<String, Option<f64>> = serde_json::from_value(value)
            .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
        for (name, v) in raw {
            measured.insert(name.parse::<MetricName>()?, v);
        }
    }
    Ok(measured)
}

fn diagnose(cmd: &DiagnoseCmd) -> Result<Outcome> {
    let section = match cmd {
        DiagnoseCmd::Overfit {
            train_value,
            test_value,
            metric,
            threshold,
        } => {
            let metric: MetricName = metric.parse()?;
            let verdict = overfit_gap(
                *train_value,
                *test_value,
                metric.higher_is_better(),
                *threshold,
            )?;
            let (v, message) = if verdict.is_suspected() {
                (
                    Verdict::Warn,
                    format!(
                        "overfitting suspected: train/test {metric} gap {:.4} exceeds {threshold}",
                        verdict.gap()
                    ),
                )
            } else {
                (
                    Verdict::Pass,
                    format!(
                        "train/test {metric} gap {:.4} within {threshold}",
                        verdict.gap()
                    ),
                )
            };
            Section::new(
                "overfit_gap",
                v,
                message,
                json!({"metric": metric, "train": train_value, "test": test_value, "threshold": threshold, "result": verdict}),
            )
        }
        DiagnoseCmd::Sweep {
            sweep,
            chosen_capacity,
        } => {
            let sweep: CapacitySweep = read_json(sweep)?;
            let analysis = capacity_sweep_analysis(&sweep)?;
            let chosen = match chosen_capacity {
                Some(c) => Some(
                    analysis
                        .regimes
                        .iter()
                        .find(|(cap, _)| cap == c)
                        .map(|(_, r)| *r)
                        .ok_or_else(|| {
                            Error::input(format!("chosen capacity {c} is not a sweep point"))
                        })?,
                ),
                None => None,
            };
            let mut notes = vec![format!(
                "sweet spot at capacity {}",
                analysis.sweet_spot_capacity
            )];
            if analysis.non_unimodal {
                notes.push("test risk has several valleys".into());
            }
            if let Some(regime) = chosen {
                notes.push(format!(
                    "chosen capacity is in the {} regime",
                    json!(regime).as_str().unwrap_or("")
                ));
            }
            let off_spot = chosen.is_some_and(|r| r != Regime::SweetSpot);
            let verdict = if analysis.non_unimodal || off_spot {
                Verdict::Warn
            } else {
                Verdict::Pass
            };
            Section::new(
                "capacity_sweep",
                verdict,
                notes.join("; "),
                json!({"analysis": analysis, "chosen_capacity": chosen_capacity, "chosen_regime": chosen}),
            )
        }
        DiagnoseCmd::Loss { model } => {
            let descriptor: ModelDescriptor = read_json(model)?;
            let result = check_loss_task_consistency(&descriptor);
            let (verdict, message) = match &result {
                LossVerdict::Pass => (
                    Verdict::Pass,
                    format!(
                        "{:?} loss fits the {} task",
                        descriptor.declared_loss,
                        descriptor.task.name()
                    ),
                ),
                LossVerdict::Violation { reason, .. } => (Verdict::Fail, reason.clone()),
            };
            Section::new(
                "loss_task_consistency",
                verdict,
                message,
                json!({"model": descriptor, "result": result}),
            )
        }
        DiagnoseCmd::ProbOutputs { scores, tolerance } => {
            let matrix = read_matrix(scores)?;
            let result = validate_probability_outputs(&matrix, *tolerance);
            let (verdict, message) = if result.pass {
                (
                    Verdict::Pass,
                    format!("all {} rows are probability vectors", result.rows_checked),
                )
            } else {
                (
                    Verdict::Fail,
                    format!(
                        "{} of {} rows are not probability vectors",
                        result.violation_count, result.rows_checked
                    ),
                )
            };
            Section::new(
                "probability_outputs",
                verdict,
                message,
                json!({"tolerance": tolerance, "result": result}),
            )
        }
        DiagnoseCmd::MinPerf {
            requirements,
            measured,
        } => {
            let reqs: Vec<PerformanceRequirement> = read_json(requirements)?;
            let values = measured_values(measured)?;
            let result = check_min_performance(&values, &reqs)?;
            let failed: Vec<String> = result
                .outcomes
                .iter()
                .filter(|o| !o.passed)
                .map(|o| {
                    format!(
                        "{} {} {} (measured {})",
                        o.requirement.metric,
                        o.requirement.op,
                        o.requirement.bound,
                        fmt_value(o.measured)
                    )
                })
                .collect();
            let (verdict, message) = if result.pass {
                (
                    Verdict::Pass,
                    format!("all {} requirements met", result.outcomes.len()),
                )
            } else {
                (
                    Verdict::Fail,
                    format!("requirements not met: {}", failed.join("; ")),
                )
            };
            Section::new("min_performance", verdict, message, result)
        }
    };
    Ok(Outcome::one(section))
}

fn catalog(cmd: &CatalogCmd) -> Result<Outcome> {
    match cmd {
        CatalogCmd::Evaluate {
            catalog,
            assessment,
            target_cl,
            impact,
        } => {
            let catalog = match catalog {
                Some(path) => parse_catalog(&read_text(path)?)?,
                None => sample_catalog(),
            };
            let assessment: Assessment = read_json(assessment)?;
            let (target_cl, impact) = match (target_cl, impact) {
                (Some(cl), _) => (*cl, None),
                (None, Some(path)) => {
                    let impact: ImpactAssessment = read_json(path)?;
                    (determine_cl(&impact)?, Some(impact))
                }
                (None, None) => unreachable!("clap requires --target-cl or --impact"),
            };
            let result = evaluate_assessment(&catalog, &assessment, target_cl)?;
            let message = if result.unevaluated.is_empty() {
                format!(
                    "{} at CL {target_cl}: {} substantial, {} non-substantial, {} positive findings",
                    result.decision,
                    result.count(FindingClass::Substantial),
                    result.count(FindingClass::NonSubstantial),
                    result.count(FindingClass::Positive)
                )
            } else {
                format!(
                    "{} at CL {target_cl}: not evaluated: {}",
                    result.decision,
                    result.unevaluated.join(", ")
                )
            };
            let section = Section::new(
                "conformity",
                Verdict::from(result.decision),
                message,
                json!({
                    "catalog": {"name": catalog.name, "version": catalog.version},
                    "target_cl": target_cl,
                    "impact": impact,
                    "decision": result.decision,
                }),
            );
            Ok(Outcome {
                sections: vec![section],
                conformity: Some(result),
                dataset: None,
            })
        }
        CatalogCmd::Cl { impact } => {
            let impact: ImpactAssessment = read_json(impact)?;
            let cl = determine_cl(&impact)?;
            let drivers: Vec<&str> = impact
                .dimensions
                .iter()
                .filter(|(_, l)| **l == cl)
                .map(|(d, _)| d.as_str())
                .collect();
            Ok(Outcome::one(Section::new(
                "criticality_level",
                Verdict::Pass,
                format!("CL {cl} (set by {})", drivers.join(", ")),
                json!({"cl": cl, "dimensions": impact.dimensions}),
            )))
        }
    }
}

fn load_case(path: &Path) -> Result<CertificationCase> {
    Ok(CaseLog::from_json(&read_text(path)?)?.replay()?)
}

fn save_case(path: &Path, case: &CertificationCase) -> Result<()> {
    write_text(path, &(case.to_log().to_json() + "\n"))
}

fn conformity_from(path: &Path) -> Result<ConformityResult> {
    let text = read_text(path)?;
    let value: Json = serde_json::from_str(&text)
        .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
    if value.get("schema_version").is_some() {
        return AuditReport::from_json(&text)?.conformity.ok_or_else(|| {
            Error::input(format!("{} holds no conformity result", path.display())).into()
        });
    }
    serde_json::from_value(value)
        .map_err(|e| Error::Schema(format!("{}: {e}", path.display())).into())
}

fn case(cmd: &CaseCmd, date: NaiveDate) -> Result<Outcome> {
    let section = match cmd {
        CaseCmd::Init {
            case,
            scope,
            target_cl,
            case_id,
            recertification_path,
            force,
        } => {
            if case.exists() && !force {
                return Err(Error::input(format!(
                    "{} already exists (use --force to replace)",
                    case.display()
                ))
                .into());
            }
            let id = case_id.clone().unwrap_or_else(uuid_v4);
            let path = match recertification_path {
                PathArg::Reduced => RecertificationPath::Reduced,
                PathArg::Full => RecertificationPath::Full,
            };
            let new = CertificationCase::with_id(id, scope, *target_cl, date)?
                .with_recertification_path(path);
            save_case(case, &new)?;
            Section::new(
                "case_init",
                Verdict::Pass,
                format!("case {} opened in {}", new.case_id(), new.state()),
                json!({"case_id": new.case_id(), "scope": new.scope(), "target_cl": new.target_cl(), "state": new.state(), "opened": date}),
            )
        }
        CaseCmd::Advance {
            case,
            event,
            report,
            severity,
            outcome,
        } => {
            let mut current = load_case(case)?;
            let kind = match event {
                EventArg::CompleteGapAnalysis => EventKind::CompleteGapAnalysis,
                EventArg::HoldKickoff => EventKind::HoldKickoff,
                EventArg::CompleteDocReview => EventKind::CompleteDocReview,
                EventArg::CompleteInterviews => EventKind::CompleteInterviews,
                EventArg::CompleteInspection => EventKind::CompleteInspection,
                EventArg::DeliverReport => {
                    let path = report
                        .as_deref()
                        .ok_or_else(|| CliError::Usage("deliver-report needs --report".into()))?;
                    EventKind::DeliverReport(conformity_from(path)?)
                }
                EventArg::IssueCertificate => EventKind::IssueCertificate,
                EventArg::RecordMonitoringAudit => EventKind::RecordMonitoringAudit {
                    outcome: match outcome {
                        OutcomeArg::Passed => MonitoringOutcome::Passed,
                        OutcomeArg::Failed => MonitoringOutcome::Failed,
                    },
                },
                EventArg::ModelChanged => EventKind::ModelChanged {
                    severity: match severity
                        .ok_or_else(|| CliError::Usage("model-changed needs --severity".into()))?
                    {
                        SeverityArg::Major => Severity::Major,
                        SeverityArg::Minor => Severity::Minor,
                    },
                },
                EventArg::StartRecertification => EventKind::StartRecertification,
                EventArg::Close => EventKind::Close,
            };
            let name = kind.name();
            let decision = match &kind {
                EventKind::DeliverReport(result) => format!(" ({})", result.decision),
                _ => String::new(),
            };
            let from = current.state();
            current.advance(CaseEvent::new(kind, date))?;
            save_case(case, &current)?;
            Section::new(
                "case_advance",
                Verdict::Pass,
                format!("{name}{decision}: {from} -> {}", current.state()),
                json!({"case_id": current.case_id(), "event": name, "date": date, "from": from, "to": current.state()}),
            )
        }
        CaseCmd::Status { case, grace_days } => {
            let current = load_case(case)?;
            let status = current.certificate_status(date, *grace_days);
            let verdict = match status {
                CertificateStatus::Valid => Verdict::Pass,
                CertificateStatus::MonitoringOverdue => Verdict::Warn,
                CertificateStatus::Expired | CertificateStatus::Invalidated => Verdict::Fail,
                CertificateStatus::None => Verdict::Undefined,
            };
            let status_name = json!(status).as_str().unwrap_or_default().to_string();
            let mut message = format!(
                "certificate {status_name} on {date} (case in {})",
                current.state()
            );
            if current.follow_up_due() {
                message.push_str("; follow-up audit due after a minor model change");
            }
            Section::new(
                "certificate_status",
                verdict,
                message,
                json!({
                    "case_id": current.case_id(),
                    "state": current.state(),
                    "status": status,
                    "query_date": date,
                    "grace_days": grace_days,
                    "certificate": current.certificate(),
                    "follow_up_due": current.follow_up_due(),
                }),
            )
        }
    };
    Ok(Outcome::one(section))
}

fn uuid_v4() -> String {
    mlaudit_core::workflow::new_case("", 1, NaiveDate::MIN)
        .expect("valid level")
        .case_id()
        .to_string()
}
