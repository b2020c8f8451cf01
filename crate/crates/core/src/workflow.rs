//! Certification lifecycle of a single case, from gap analysis through
//! certificate issue, yearly monitoring, invalidation and recertification.
//!
//! A case is event-sourced: its state is derived by replaying the event log
//! from creation, and the log is the only thing persisted.

use std::fmt;

use chrono::{Days, Months, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::catalog::{ConformityResult, MAX_CL};
use crate::error::{Error, Result};

pub const CERTIFICATE_VALIDITY_MONTHS: u32 = 36;
pub const DEFAULT_MONITORING_GRACE_DAYS: u64 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseState {
    GapAnalysis,
    Kickoff,
    DocumentationReview,
    AuditInterviews,
    TechnicalInspection,
    Reporting,
    Certified,
    Denied,
    Invalidated,
    Closed,
}

impl CaseState {
    pub const ALL: [CaseState; 10] = [
        CaseState::GapAnalysis,
        CaseState::Kickoff,
        CaseState::DocumentationReview,
        CaseState::AuditInterviews,
        CaseState::TechnicalInspection,
        CaseState::Reporting,
        CaseState::Certified,
        CaseState::Denied,
        CaseState::Invalidated,
        CaseState::Closed,
    ];
}

impl fmt::Display for CaseState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Major,
    Minor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonitoringOutcome {
    Passed,
    Failed,
}

/// Where a recertification re-enters the audit sequence.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecertificationPath {
    /// Skip gap analysis, kickoff and documentation review.
    #[default]
    Reduced,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventKind {
    CompleteGapAnalysis,
    HoldKickoff,
    CompleteDocReview,
    CompleteInterviews,
    CompleteInspection,
    DeliverReport(ConformityResult),
    IssueCertificate,
    RecordMonitoringAudit { outcome: MonitoringOutcome },
    ModelChanged { severity: Severity },
    StartRecertification,
    Close,
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::CompleteGapAnalysis => "complete_gap_analysis",
            EventKind::HoldKickoff => "hold_kickoff",
            EventKind::CompleteDocReview => "complete_doc_review",
            EventKind::CompleteInterviews => "complete_interviews",
            EventKind::CompleteInspection => "complete_inspection",
            EventKind::DeliverReport(_) => "deliver_report",
            EventKind::IssueCertificate => "issue_certificate",
            EventKind::RecordMonitoringAudit { .. } => "record_monitoring_audit",
            EventKind::ModelChanged { .. } => "model_changed",
            EventKind::StartRecertification => "start_recertification",
            EventKind::Close => "close",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseEvent {
    #[serde(flatten)]
    pub kind: EventKind,
    pub date: NaiveDate,
}

impl CaseEvent {
    pub fn new(kind: EventKind, date: NaiveDate) -> Self {
        CaseEvent { kind, date }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonitoringAudit {
    pub date: NaiveDate,
    pub outcome: MonitoringOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub issue_date: NaiveDate,
    pub expiry_date: NaiveDate,
    pub monitoring_audits: Vec<MonitoringAudit>,
}

/// Three calendar years after `issue`; a Feb 29 issue expires on Feb 28.
pub fn expiry_date(issue: NaiveDate) -> NaiveDate {
    issue
        .checked_add_months(Months::new(CERTIFICATE_VALIDITY_MONTHS))
        .expect("date within chrono range")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateStatus {
    Valid,
    MonitoringOverdue,
    Expired,
    Invalidated,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificationCase {
    case_id: String,
    scope: String,
    target_cl: u8,
    opened: NaiveDate,
    recertification_path: RecertificationPath,
    state: CaseState,
    history: Vec<CaseEvent>,
    certificate: Option<Certificate>,
    report: Option<ConformityResult>,
    follow_up_due: bool,
}

pub fn new_case(
    scope: impl Into<String>,
    target_cl: u8,
    date: NaiveDate,
) -> Result<CertificationCase> {
    CertificationCase::with_id(uuid::Uuid::new_v4().to_string(), scope, target_cl, date)
}

impl CertificationCase {
    pub fn with_id(
        case_id: impl Into<String>,
        scope: impl Into<String>,
        target_cl: u8,
        date: NaiveDate,
    ) -> Result<Self> {
        if !(1..=MAX_CL).contains(&target_cl) {
            return Err(Error::input(format!("target cl {target_cl} outside 1..=4")));
        }
        Ok(CertificationCase {
            case_id: case_id.into(),
            scope: scope.into(),
            target_cl,
            opened: date,
            recertification_path: RecertificationPath::default(),
            state: CaseState::GapAnalysis,
            history: Vec::new(),
            certificate: None,
            report: None,
            follow_up_due: false,
        })
    }

    pub fn with_recertification_path(mut self, path: RecertificationPath) -> Self {
        self.recertification_path = path;
        self
    }

    pub fn case_id(&self) -> &str {
        &self.case_id
    }

    pub fn scope(&self) -> &str {
        &self.scope
    }

    pub fn target_cl(&self) -> u8 {
        self.target_cl
    }

    pub fn opened(&self) -> NaiveDate {
        self.opened
    }

    pub fn state(&self) -> CaseState {
        self.state
    }

    pub fn history(&self) -> &[CaseEvent] {
        &self.history
    }

    pub fn certificate(&self) -> Option<&Certificate> {
        self.certificate.as_ref()
    }

    /// The conformity report delivered in the current audit round.
    pub fn report(&self) -> Option<&ConformityResult> {
        self.report.as_ref()
    }

    /// A minor model change awaits the next monitoring audit.
    pub fn follow_up_due(&self) -> bool {
        self.follow_up_due
    }

    pub fn last_date(&self) -> NaiveDate {
        self.history.last().map_or(self.opened, |e| e.date)
    }

    fn reject(&self, kind: &EventKind) -> Error {
        Error::Transition {
            state: self.state.to_string(),
            event: kind.name().to_string(),
        }
    }

    /// Applies one event. On error the case is left unchanged.
    pub fn advance(&mut self, event: CaseEvent) -> Result<()> {
        use CaseState::*;
        use EventKind::*;

        let next = match (self.state, &event.kind) {
            (Closed, kind) => return Err(self.reject(kind)),
            (_, Close) => Closed,
            (GapAnalysis, CompleteGapAnalysis) => Kickoff,
            (Kickoff, HoldKickoff) => DocumentationReview,
            (DocumentationReview, CompleteDocReview) => AuditInterviews,
            (AuditInterviews, CompleteInterviews) => TechnicalInspection,
            (TechnicalInspection, CompleteInspection) => Reporting,
            (Reporting, DeliverReport(result)) if self.report.is_none() => {
                if result.target_cl != self.target_cl {
                    return Err(Error::input(format!(
                        "report evaluated at cl {} but the case targets cl {}",
                        result.target_cl, self.target_cl
                    )));
                }
                if result.decision.is_positive() {
                    Reporting
                } else {
                    Denied
                }
            }
            (Reporting, IssueCertificate)
                if self
                    .report
                    .as_ref()
                    .is_some_and(|r| r.decision.is_positive()) =>
            {
                Certified
            }
            (Certified, RecordMonitoringAudit { .. }) => Certified,
            (
                Certified,
                ModelChanged {
                    severity: Severity::Minor,
                },
            ) => Certified,
            (
                Certified,
                ModelChanged {
                    severity: Severity::Major,
                },
            ) => Invalidated,
            (Invalidated, StartRecertification) => self.recertification_entry(),
            (Certified, StartRecertification)
                if self
                    .certificate
                    .as_ref()
                    .is_some_and(|c| event.date >= c.expiry_date) =>
            {
                self.recertification_entry()
            }
            (_, kind) => return Err(self.reject(kind)),
        };
        if event.date < self.last_date() {
            return Err(Error::Date(format!(
                "{} dated {} precedes the last recorded date {}",
                event.kind.name(),
                event.date,
                self.last_date()
            )));
        }

        match &event.kind {
            DeliverReport(result) => self.report = Some(result.clone()),
            IssueCertificate => {
                self.certificate = Some(Certificate {
                    issue_date: event.date,
                    expiry_date: expiry_date(event.date),
                    monitoring_audits: Vec::new(),
                });
                self.follow_up_due = false;
            }
            RecordMonitoringAudit { outcome } => {
                if let Some(cert) = self.certificate.as_mut() {
                    cert.monitoring_audits.push(MonitoringAudit {
                        date: event.date,
                        outcome: *outcome,
                    });
                }
                self.follow_up_due = false;
            }
            ModelChanged {
                severity: Severity::Minor,
            } => self.follow_up_due = true,
            StartRecertification => {
                self.certificate = None;
                self.report = None;
                self.follow_up_due = false;
            }
            Close => {
                self.certificate = None;
                self.follow_up_due = false;
            }
            _ => {}
        }
        self.state = next;
        self.history.push(event);
        Ok(())
    }

    fn recertification_entry(&self) -> CaseState {
        match self.recertification_path {
            RecertificationPath::Reduced => CaseState::AuditInterviews,
            RecertificationPath::Full => CaseState::GapAnalysis,
        }
    }

    pub fn certificate_status(&self, query_date: NaiveDate, grace_days: u64) -> CertificateStatus {
        let Some(cert) = &self.certificate else {
            return CertificateStatus::None;
        };
        if self.state == CaseState::Invalidated {
            return CertificateStatus::Invalidated;
        }
        if query_date >= cert.expiry_date {
            return CertificateStatus::Expired;
        }
        let overdue = (1..)
            .map(|year| cert.issue_date.checked_add_months(Months::new(12 * year)))
            .map_while(|a| a.filter(|a| *a < query_date))
            .any(|anniversary| {
                let deadline = anniversary + Days::new(grace_days);
                query_date > deadline
                    && !cert.monitoring_audits.iter().any(|m| {
                        m.outcome == MonitoringOutcome::Passed
                            && (anniversary..=deadline).contains(&m.date)
                    })
            });
        if overdue {
            CertificateStatus::MonitoringOverdue
        } else {
            CertificateStatus::Valid
        }
    }

    pub fn to_log(&self) -> CaseLog {
        CaseLog {
            case_id: self.case_id.clone(),
            scope: self.scope.clone(),
            target_cl: self.target_cl,
            opened: self.opened,
            recertification_path: self.recertification_path,
            events: self.history.clone(),
        }
    }
}

/// Persisted form of a case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseLog {
    pub case_id: String,
    pub scope: String,
    pub target_cl: u8,
    pub opened: NaiveDate,
    #[serde(default)]
    pub recertification_path: RecertificationPath,
    #[serde(default)]
    pub events: Vec<CaseEvent>,
}

impl CaseLog {
    /// Rebuilds the case by applying every event in order.
    pub fn replay(&self) -> Result<CertificationCase> {
        let mut case =
            CertificationCase::with_id(&self.case_id, &self.scope, self.target_cl, self.opened)?
                .with_recertification_path(self.recertification_path);
        for event in &self.events {
            case.advance(event.clone())?;
        }
        Ok(case)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(format!("case log: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("case log serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{Decision, Finding, FindingClass};

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn report(decision: Decision) -> ConformityResult {
        ConformityResult {
            target_cl: 2,
            decision,
            findings: vec![Finding {
                requirement_id: "MS-3".into(),
                class: if decision == Decision::Denied {
                    FindingClass::Substantial
                } else {
                    FindingClass::Positive
                },
                note: String::new(),
            }],
            unevaluated: Vec::new(),
        }
    }

    fn certified_on(issue: &str) -> CertificationCase {
        let mut case =
            CertificationCase::with_id("c1", "vision QA model", 2, d("2020-01-01")).unwrap();
        for kind in [
            EventKind::CompleteGapAnalysis,
            EventKind::HoldKickoff,
            EventKind::CompleteDocReview,
            EventKind::CompleteInterviews,
            EventKind::CompleteInspection,
            EventKind::DeliverReport(report(Decision::Granted)),
        ] {
            case.advance(CaseEvent::new(kind, d("2020-01-02"))).unwrap();
        }
        case.advance(CaseEvent::new(EventKind::IssueCertificate, d(issue)))
            .unwrap();
        case
    }

    #[test]
    fn new_cases() {
        let a = new_case("vision QA model", 2, d("2021-01-01")).unwrap();
        let b = new_case("vision QA model", 2, d("2021-01-01")).unwrap();
        assert_eq!(a.state(), CaseState::GapAnalysis);
        assert!(a.history().is_empty());
        assert_ne!(a.case_id(), b.case_id());
        assert!(new_case("x", 0, d("2021-01-01")).is_err());
        assert!(new_case("x", 5, d("2021-01-01")).is_err());
    }

    #[test]
    fn full_sequence_reaches_certified() {
        let case = certified_on("2021-03-17");
        assert_eq!(case.state(), CaseState::Certified);
        let cert = case.certificate().unwrap();
        assert_eq!(cert.expiry_date, d("2024-03-17"));
    }

    #[test]
    fn illegal_event_is_rejected_without_change() {
        let mut case = CertificationCase::with_id("c", "s", 1, d("2021-01-01")).unwrap();
        for kind in [
            EventKind::CompleteGapAnalysis,
            EventKind::HoldKickoff,
            EventKind::CompleteDocReview,
        ] {
            case.advance(CaseEvent::new(kind, d("2021-01-02"))).unwrap();
        }
        let before = case.clone();
        let err = case
            .advance(CaseEvent::new(EventKind::IssueCertificate, d("2021-01-03")))
            .unwrap_err();
        assert!(matches!(
            err,
            Error::Transition { ref state, ref event } if state == "AuditInterviews" && event == "issue_certificate"
        ));
        assert_eq!(case, before);
    }

    #[test]
    fn out_of_order_dates() {
        let mut case = CertificationCase::with_id("c", "s", 1, d("2021-01-10")).unwrap();
        assert!(matches!(
            case.advance(CaseEvent::new(
                EventKind::CompleteGapAnalysis,
                d("2021-01-09")
            )),
            Err(Error::Date(_))
        ));
        case.advance(CaseEvent::new(
            EventKind::CompleteGapAnalysis,
            d("2021-01-10"),
        ))
        .unwrap();
    }

    #[test]
    fn negative_reports_deny() {
        for decision in [Decision::Denied, Decision::Incomplete] {
            let mut case = certified_on("2021-03-17").to_log();
            case.events.truncate(5);
            let mut case = case.replay().unwrap();
            case.advance(CaseEvent::new(
                EventKind::DeliverReport(report(decision)),
                d("2021-03-17"),
            ))
            .unwrap();
            assert_eq!(case.state(), CaseState::Denied);
            assert!(case.certificate().is_none());
        }
    }

    #[test]
    fn model_changes() {
        let mut major = certified_on("2021-03-17");
        major
            .advance(CaseEvent::new(
                EventKind::ModelChanged {
                    severity: Severity::Major,
                },
                d("2021-06-01"),
            ))
            .unwrap();
        assert_eq!(major.state(), CaseState::Invalidated);
        assert_eq!(
            major.certificate_status(d("2021-06-02"), 30),
            CertificateStatus::Invalidated
        );

        let mut minor = certified_on("2021-03-17");
        minor
            .advance(CaseEvent::new(
                EventKind::ModelChanged {
                    severity: Severity::Minor,
                },
                d("2021-06-01"),
            ))
            .unwrap();
        assert_eq!(minor.state(), CaseState::Certified);
        assert!(minor.follow_up_due());
        minor
            .advance(CaseEvent::new(
                EventKind::RecordMonitoringAudit {
                    outcome: MonitoringOutcome::Passed,
                },
                d("2021-07-01"),
            ))
            .unwrap();
        assert!(!minor.follow_up_due());
    }

    #[test]
    fn recertification_paths() {
        let mut case = certified_on("2021-03-17");
        case.advance(CaseEvent::new(
            EventKind::ModelChanged {
                severity: Severity::Major,
            },
            d("2021-06-01"),
        ))
        .unwrap();
        case.advance(CaseEvent::new(
            EventKind::StartRecertification,
            d("2021-06-02"),
        ))
        .unwrap();
        assert_eq!(case.state(), CaseState::AuditInterviews);
        assert!(case.certificate().is_none());

        let mut full =
            certified_on("2021-03-17").with_recertification_path(RecertificationPath::Full);
        assert!(full
            .advance(CaseEvent::new(
                EventKind::StartRecertification,
                d("2024-03-16")
            ))
            .is_err());
        full.advance(CaseEvent::new(
            EventKind::StartRecertification,
            d("2024-03-17"),
        ))
        .unwrap();
        assert_eq!(full.state(), CaseState::GapAnalysis);
    }

    #[test]
    fn validity_and_monitoring() {
        let mut case = certified_on("2021-03-17");
        assert_eq!(
            case.certificate_status(d("2022-05-01"), 30),
            CertificateStatus::MonitoringOverdue
        );
        assert_eq!(
            case.certificate_status(d("2022-04-16"), 30),
            CertificateStatus::Valid
        );
        assert_eq!(
            case.certificate_status(d("2022-04-17"), 30),
            CertificateStatus::MonitoringOverdue
        );
        assert_eq!(
            case.certificate_status(d("2024-03-17"), 30),
            CertificateStatus::Expired
        );
        for date in ["2022-03-17", "2023-03-17"] {
            case.advance(CaseEvent::new(
                EventKind::RecordMonitoringAudit {
                    outcome: MonitoringOutcome::Passed,
                },
                d(date),
            ))
            .unwrap();
        }
        assert_eq!(
            case.certificate_status(d("2024-03-16"), 30),
            CertificateStatus::Valid
        );
        assert_eq!(
            case.certificate_status(d("2024-03-17"), 30),
            CertificateStatus::Expired
        );
    }

    #[test]
    fn failed_or_late_audits_do_not_count() {
        let mut failed = certified_on("2021-03-17");
        failed
            .advance(CaseEvent::new(
                EventKind::RecordMonitoringAudit {
                    outcome: MonitoringOutcome::Failed,
                },
                d("2022-03-20"),
            ))
            .unwrap();
        assert_eq!(
            failed.certificate_status(d("2022-06-01"), 30),
            CertificateStatus::MonitoringOverdue
        );

        let mut late = certified_on("2021-03-17");
        late.advance(CaseEvent::new(
            EventKind::RecordMonitoringAudit {
                outcome: MonitoringOutcome::Passed,
            },
            d("2022-05-01"),
        ))
        .unwrap();
        assert_eq!(
            late.certificate_status(d("2022-06-01"), 30),
            CertificateStatus::MonitoringOverdue
        );
        assert_eq!(
            late.certificate_status(d("2022-06-01"), 60),
            CertificateStatus::Valid
        );
    }

    #[test]
    fn leap_day_expiry_clamps() {
        assert_eq!(expiry_date(d("2020-02-29")), d("2023-02-28"));
        assert_eq!(expiry_date(d("2021-03-17")), d("2024-03-17"));
        let case = certified_on("2020-02-29");
        assert_eq!(
            case.certificate_status(d("2021-03-31"), 30),
            CertificateStatus::MonitoringOverdue
        );
        assert_eq!(
            case.certificate_status(d("2021-03-30"), 30),
            CertificateStatus::Valid
        );
    }

    #[test]
    fn no_certificate_means_none() {
        let case = CertificationCase::with_id("c", "s", 1, d("2021-01-01")).unwrap();
        assert_eq!(
            case.certificate_status(d("2021-06-01"), 30),
            CertificateStatus::None
        );
        let mut closed = certified_on("2021-03-17");
        closed
            .advance(CaseEvent::new(EventKind::Close, d("2021-04-01")))
            .unwrap();
        assert_eq!(
            closed.certificate_status(d("2021-06-01"), 30),
            CertificateStatus::None
        );
    }

    #[test]
    fn event_json_shape() {
        let event = CaseEvent::new(
            EventKind::ModelChanged {
                severity: Severity::Major,
            },
            d("2021-06-01"),
        );
        let json = serde_json::to_string(&event).unwrap();
        assert_eq!(
            json,
            r#"{"kind":"model_changed","payload":{"severity":"major"},"date":"2021-06-01"}"#
        );
        let close =
            serde_json::to_string(&CaseEvent::new(EventKind::Close, d("2021-06-01"))).unwrap();
        assert_eq!(close, r#"{"kind":"close","date":"2021-06-01"}"#);
        assert_eq!(serde_json::from_str::<CaseEvent>(&json).unwrap(), event);
    }

    #[test]
    fn replay_round_trip() {
        let mut case = certified_on("2021-03-17");
        case.advance(CaseEvent::new(
            EventKind::RecordMonitoringAudit {
                outcome: MonitoringOutcome::Passed,
            },
            d("2022-03-18"),
        ))
        .unwrap();
        let json = case.to_log().to_json();
        let replayed = CaseLog::from_json(&json).unwrap().replay().unwrap();
        assert_eq!(replayed, case);
        assert_eq!(replayed.to_log().to_json(), json);
    }
}
