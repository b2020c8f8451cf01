use chrono::NaiveDate;
use mlaudit_core::data::{
    assign_splits, class_distribution, load_dataset, SchemaSpec, SplitLabel, SplitStrategy,
};
use mlaudit_core::diagnostics::baseline_majority_performance;
use mlaudit_core::integrity::{check_metric_appropriateness, check_split_disjoint};
use mlaudit_core::metrics::MetricName;
use mlaudit_core::report::{render_report, AuditReport, Format, Metadata, Section, Verdict};
use mlaudit_core::workflow::expiry_date;

const CSV: &str = "\
id,day,colour,size,label
0,2024-01-01,red,1.5,0
1,2024-01-02,blue,2.5,0
2,2024-01-03,red,1.5,0
3,2024-01-04,green,3.0,1
4,2024-01-05,blue,2.5,0
5,2024-01-06,red,4.0,0
6,2024-01-07,green,3.0,1
7,2024-01-08,blue,0.5,0
8,2024-01-09,red,1.5,0
9,2024-01-10,blue,2.5,0
";

fn spec() -> SchemaSpec {
    SchemaSpec::from_json(
        r#"{"target": "label", "task": "binary", "temporal_column": "day",
            "features": {"colour": "text", "day": "text"}, "ignore": ["id"]}"#,
    )
    .unwrap()
}

#[test]
fn temporal_split_keeps_time_order_and_finds_repeats() {
    let dataset = load_dataset(CSV.as_bytes(), &spec()).unwrap();
    assert_eq!(dataset.len(), 10);
    let split = assign_splits(
        &dataset,
        &SplitStrategy::Temporal {
            column: "day".into(),
            ratios: [0.6, 0.2, 0.2],
        },
    )
    .unwrap();
    assert_eq!(split.rows_with(SplitLabel::Train), vec![0, 1, 2, 3, 4, 5]);
    assert_eq!(split.rows_with(SplitLabel::Test), vec![8, 9]);

    // The day column makes every row distinct, so nothing leaks across splits.
    let report = check_split_disjoint(&dataset, &split, None).unwrap();
    assert!(!report.leak_present);
}

#[test]
fn repeats_surface_once_the_timestamp_is_ignored() {
    let mut spec = spec();
    spec.ignore.push("day".into());
    spec.temporal_column = None;
    spec.features.remove("day");
    let dataset = load_dataset(CSV.as_bytes(), &spec).unwrap();
    let split = assign_splits(
        &dataset,
        &SplitStrategy::Predefined(
            (0..10)
                .map(|r| {
                    (
                        r,
                        if r < 6 {
                            SplitLabel::Train
                        } else {
                            SplitLabel::Test
                        },
                    )
                })
                .collect(),
        ),
    )
    .unwrap();
    let report = check_split_disjoint(&dataset, &split, None).unwrap();
    let rows: Vec<Vec<(String, Vec<usize>)>> = report
        .collisions
        .iter()
        .map(|c| c.rows_by_label.clone())
        .collect();
    assert_eq!(
        rows,
        vec![
            vec![
                ("train".to_string(), vec![0, 2]),
                ("test".to_string(), vec![8])
            ],
            vec![
                ("train".to_string(), vec![1, 4]),
                ("test".to_string(), vec![9])
            ],
            vec![
                ("train".to_string(), vec![3]),
                ("test".to_string(), vec![6])
            ],
        ]
    );
    assert_eq!(report.pairs_checked, 24);
}

#[test]
fn skewed_labels_draw_an_accuracy_advisory() {
    let dataset = load_dataset(CSV.as_bytes(), &spec()).unwrap();
    let dist = class_distribution(&dataset).unwrap();
    let baseline = baseline_majority_performance(&dist);
    assert_eq!(baseline.accuracy, 0.8);
    let advisory = check_metric_appropriateness(dataset.task(), &dist, MetricName::Accuracy, 0.25);
    assert_eq!(advisory.verdict, Verdict::Warn);
    let advisory =
        check_metric_appropriateness(dataset.task(), &dist, MetricName::BalancedAccuracy, 0.25);
    assert_eq!(advisory.verdict, Verdict::Pass);
}

#[test]
fn report_of_one_warning_renders_and_round_trips() {
    let mut report = AuditReport::new(Metadata {
        tool: "mlaudit".into(),
        tool_version: "0.1.0".into(),
        date: "2026-01-01".into(),
        command: "check metric-fit".into(),
        dataset: Some("d.csv".into()),
        model: None,
    });
    report.push(Section::new(
        "metric_appropriateness",
        Verdict::Warn,
        "accuracy hides the minority class; recommended: sensitivity (recall)",
        serde_json::json!({"measured": null}),
    ));
    let text = render_report(&report, Format::Text);
    assert!(text.contains("WARN") && text.contains("recall"));
    let json = render_report(&report, Format::Json);
    assert!(json.contains("\"measured\": null"));
    assert_eq!(
        render_report(&AuditReport::from_json(&json).unwrap(), Format::Json),
        json
    );
    assert_eq!(report.exit_code(), 1);
}

#[test]
fn leap_day_certificates_expire_on_february_28() {
    let d = |s: &str| s.parse::<NaiveDate>().unwrap();
    assert_eq!(expiry_date(d("2020-02-29")), d("2023-02-28"));
    assert_eq!(expiry_date(d("2021-03-17")), d("2024-03-17"));
}
