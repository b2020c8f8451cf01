//! Audit report: one section per executed check, an optional conformity
//! decision, and a verdict tally that determines the process exit code.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::catalog::{ConformityResult, Decision, FindingClass};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Outcome of a single audit check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Undefined,
    Warn,
    Fail,
}

impl Verdict {
    pub const ALL: [Verdict; 4] = [
        Verdict::Pass,
        Verdict::Warn,
        Verdict::Fail,
        Verdict::Undefined,
    ];
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Undefined => "UNDEFINED",
            Verdict::Warn => "WARN",
            Verdict::Fail => "FAIL",
        })
    }
}

impl From<Decision> for Verdict {
    fn from(decision: Decision) -> Self {
        match decision {
            Decision::Granted => Verdict::Pass,
            Decision::GrantedWithConditions | Decision::Incomplete => Verdict::Warn,
            Decision::Denied => Verdict::Fail,
        }
    }
}

/// FAIL if any verdict is FAIL, else WARN if any is WARN, else PASS.
pub fn overall_verdict<I: IntoIterator<Item = Verdict>>(verdicts: I) -> Verdict {
    verdicts
        .into_iter()
        .fold(Verdict::Pass, |acc, v| match (acc, v) {
            (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
            (Verdict::Warn, _) | (_, Verdict::Warn) => Verdict::Warn,
            _ => Verdict::Pass,
        })
}

/// Process exit code for an overall verdict: 0 for PASS, 1 for findings.
pub fn exit_code(overall: Verdict) -> i32 {
    match overall {
        Verdict::Pass | Verdict::Undefined => 0,
        Verdict::Warn | Verdict::Fail => 1,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    pub tool: String,
    pub tool_version: String,
    /// ISO-8601 calendar date of the audit run.
    pub date: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Section {
    pub check: String,
    pub verdict: Verdict,
    /// One-line human summary.
    pub message: String,
    pub details: serde_json::Value,
}

impl Section {
    pub fn new(
        check: impl Into<String>,
        verdict: Verdict,
        message: impl Into<String>,
        details: impl Serialize,
    ) -> Self {
        Section {
            check: check.into(),
            verdict,
            message: message.into(),
            details: serde_json::to_value(details).expect("section details serialize"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    #[serde(rename = "PASS")]
    pub pass: usize,
    #[serde(rename = "WARN")]
    pub warn: usize,
    #[serde(rename = "FAIL")]
    pub fail: usize,
    #[serde(rename = "UNDEFINED")]
    pub undefined: usize,
}

impl Summary {
    pub fn tally<'a, I: IntoIterator<Item = &'a Section>>(sections: I) -> Self {
        let mut s = Summary::default();
        for section in sections {
            *s.slot(section.verdict) += 1;
        }
        s
    }

    fn slot(&mut self, v: Verdict) -> &mut usize {
        match v {
            Verdict::Pass => &mut self.pass,
            Verdict::Warn => &mut self.warn,
            Verdict::Fail => &mut self.fail,
            Verdict::Undefined => &mut self.undefined,
        }
    }

    pub fn get(&self, v: Verdict) -> usize {
        match v {
            Verdict::Pass => self.pass,
            Verdict::Warn => self.warn,
            Verdict::Fail => self.fail,
            Verdict::Undefined => self.undefined,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditReport {
    pub schema_version: u32,
    pub metadata: Metadata,
    pub sections: Vec<Section>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conformity: Option<ConformityResult>,
    pub summary: Summary,
}

impl AuditReport {
    pub fn new(metadata: Metadata) -> Self {
        AuditReport {
            schema_version: SCHEMA_VERSION,
            metadata,
            sections: Vec::new(),
            conformity: None,
            summary: Summary::default(),
        }
    }

    pub fn push(&mut self, section: Section) {
        *self.summary.slot(section.verdict) += 1;
        self.sections.push(section);
    }

    pub fn section(&self, check: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.check == check)
    }

    pub fn overall(&self) -> Verdict {
        overall_verdict(self.sections.iter().map(|s| s.verdict))
    }

    pub fn exit_code(&self) -> i32 {
        exit_code(self.overall())
    }

    /// Parses a JSON report, rejecting unknown schema versions and summaries
    /// that disagree with the sections.
    pub fn from_json(text: &str) -> Result<Self> {
        let report: AuditReport =
            serde_json::from_str(text).map_err(|e| Error::Schema(format!("audit report: {e}")))?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "unsupported report schema_version {}",
                report.schema_version
            )));
        }
        if report.summary != Summary::tally(&report.sections) {
            return Err(Error::Schema(
                "report summary does not match its sections".into(),
            ));
        }
        Ok(report)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Format {
    Json,
    #[default]
    Text,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "text" => Ok(Format::Text),
            other => Err(Error::Config(format!("unknown report format `{other}`"))),
        }
    }
}

pub fn render_report(report: &AuditReport, format: Format) -> String {
    match format {
        Format::Json => {
            let mut out = serde_json::to_string_pretty(report).expect("report serializes");
            out.push('\n');
            out
        }
        Format::Text => render_text(report),
    }
}

fn render_text(report: &AuditReport) -> String {
    let m = &report.metadata;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} audit report ({})",
        m.tool, m.tool_version, m.date
    );
    let _ = writeln!(out, "command: {}", m.command);
    if let Some(dataset) = &m.dataset {
        let _ = writeln!(out, "dataset: {dataset}");
    }
    if let Some(model) = &m.model {
        let _ = writeln!(out, "model: {model}");
    }
    out.push('\n');

    let width = report
        .sections
        .iter()
        .map(|s| s.check.len())
        .chain(["CHECK".len()])
        .max()
        .unwrap_or(0);
    let _ = writeln!(out, "{:<width$}  {:<9}  MESSAGE", "CHECK", "VERDICT");
    for s in &report.sections {
        let _ = writeln!(
            out,
            "{:<width$}  {:<9}  {}",
            s.check,
            s.verdict.to_string(),
            s.message
        );
    }

    if let Some(c) = &report.conformity {
        let _ = writeln!(
            out,
            "\nconformity at CL {}: {} ({} positive, {} non-substantial, {} substantial, {} unevaluated)",
            c.target_cl,
            c.decision,
            c.count(FindingClass::Positive),
            c.count(FindingClass::NonSubstantial),
            c.count(FindingClass::Substantial),
            c.unevaluated.len()
        );
    }
    let s = &report.summary;
    let _ = writeln!(
        out,
        "\nsummary: PASS {}  WARN {}  FAIL {}  UNDEFINED {}",
        s.pass, s.warn, s.fail, s.undefined
    );
    let _ = writeln!(out, "overall: {}", report.overall());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use serde_json::json;

    fn metadata() -> Metadata {
        Metadata {
            tool: "mlaudit".into(),
            tool_version: "0.1.0".into(),
            date: "2021-03-17".into(),
            command: "check metric-fit".into(),
            dataset: Some("screening.csv".into()),
            model: None,
        }
    }

    #[test]
    fn empty_report() {
        let report = AuditReport::new(metadata());
        let json = render_report(&report, Format::Json);
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["schema_version"], 1);
        assert_eq!(
            value["summary"],
            json!({"PASS": 0, "WARN": 0, "FAIL": 0, "UNDEFINED": 0})
        );
        assert_eq!(report.overall(), Verdict::Pass);
        assert_eq!(report.exit_code(), 0);
    }

    #[test]
    fn text_shows_verdict_and_message() {
        let mut report = AuditReport::new(metadata());
        report.push(Section::new(
            "metric_appropriateness",
            Verdict::Warn,
            "prefer sensitivity (recall) or balanced_accuracy",
            json!({"baseline_accuracy": 0.99}),
        ));
        let text = render_report(&report, Format::Text);
        assert!(text.contains("WARN"));
        assert!(text.contains("recall"));
        assert!(text.contains("overall: WARN"));
    }

    #[test]
    fn json_round_trip_is_byte_identical() {
        let mut report = AuditReport::new(metadata());
        report.push(Section::new(
            "classification_metrics",
            Verdict::Undefined,
            "precision undefined",
            json!({"accuracy": 0.99, "precision": null, "kappa": 0.1 + 0.2, "z": [1e-300, 123456.789]}),
        ));
        let first = render_report(&report, Format::Json);
        let parsed = AuditReport::from_json(&first).unwrap();
        assert_eq!(parsed, report);
        assert_eq!(render_report(&parsed, Format::Json), first);
    }

    #[test]
    fn tampered_summary_is_rejected() {
        let mut report = AuditReport::new(metadata());
        report.push(Section::new("x", Verdict::Fail, "", json!({})));
        report.summary.fail = 0;
        let json = render_report(&report, Format::Json);
        assert!(matches!(
            AuditReport::from_json(&json),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn decision_verdicts() {
        assert_eq!(Verdict::from(Decision::Granted), Verdict::Pass);
        assert_eq!(
            Verdict::from(Decision::GrantedWithConditions),
            Verdict::Warn
        );
        assert_eq!(Verdict::from(Decision::Denied), Verdict::Fail);
        assert_eq!(Verdict::from(Decision::Incomplete), Verdict::Warn);
    }

    fn any_verdict() -> impl Strategy<Value = Verdict> {
        proptest::sample::select(Verdict::ALL.to_vec())
    }

    proptest! {
        #[test]
        fn overall_follows_precedence(verdicts in proptest::collection::vec(any_verdict(), 0..20)) {
            let expected = if verdicts.contains(&Verdict::Fail) {
                Verdict::Fail
            } else if verdicts.contains(&Verdict::Warn) {
                Verdict::Warn
            } else {
                Verdict::Pass
            };
            prop_assert_eq!(overall_verdict(verdicts.iter().copied()), expected);

            let mut report = AuditReport::new(metadata());
            for (i, v) in verdicts.iter().enumerate() {
                report.push(Section::new(format!("c{i}"), *v, "", json!(null)));
            }
            prop_assert_eq!(report.summary, Summary::tally(&report.sections));
            for v in Verdict::ALL {
                prop_assert_eq!(report.summary.get(v), verdicts.iter().filter(|x| **x == v).count());
            }
            let mut shuffled = verdicts.clone();
            shuffled.reverse();
            prop_assert_eq!(overall_verdict(shuffled), report.overall());
        }
    }
}
