//! Requirements catalog: criticality levels, applicability and conformity
//! decisions from an auditor's assessment.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SAMPLE_CATALOG_JSON: &str = include_str!("../data/sample_catalog.json");
pub const MAX_CL: u8 = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Requirement {
    pub id: String,
    pub cl: u8,
    pub critical: bool,
    pub topic: String,
    pub description: String,
    #[serde(rename = "proofs", default)]
    pub proof_requirements: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Chapter {
    pub title: String,
    #[serde(default)]
    pub requirements: Vec<Requirement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Catalog {
    pub name: String,
    pub version: String,
    pub chapters: Vec<Chapter>,
}

impl Catalog {
    /// All requirements in document order.
    pub fn requirements(&self) -> impl Iterator<Item = &Requirement> {
        self.chapters.iter().flat_map(|c| &c.requirements)
    }

    pub fn requirement(&self, id: &str) -> Option<&Requirement> {
        self.requirements().find(|r| r.id == id)
    }

    pub fn chapter(&self, title: &str) -> Option<&Chapter> {
        self.chapters.iter().find(|c| c.title == title)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for r in self.requirements() {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::Schema(format!(
                    "duplicate requirement id `{}`",
                    r.id
                )));
            }
            if !(1..=MAX_CL).contains(&r.cl) {
                return Err(Error::Schema(format!(
                    "requirement `{}` has cl {} outside 1..=4",
                    r.id, r.cl
                )));
            }
        }
        Ok(())
    }
}

pub fn parse_catalog(document: &str) -> Result<Catalog> {
    let catalog: Catalog = serde_json::from_str(document)
        .map_err(|e| Error::Schema(format!("catalog document: {e}")))?;
    catalog.validate()?;
    Ok(catalog)
}

/// The bundled Model Selection excerpt plus empty stubs for the other
/// sections of the functional-requirements chapter.
pub fn sample_catalog() -> Catalog {
    parse_catalog(SAMPLE_CATALOG_JSON).expect("bundled catalog is valid")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImpactAssessment {
    pub dimensions: BTreeMap<String, u8>,
}

/// The criticality level is the highest impact level over all dimensions.
pub fn determine_cl(impact: &ImpactAssessment) -> Result<u8> {
    if let Some((name, level)) = impact
        .dimensions
        .iter()
        .find(|(_, l)| !(1..=MAX_CL).contains(*l))
    {
        return Err(Error::input(format!(
            "impact level {level} for `{name}` outside 1..=4"
        )));
    }
    impact
        .dimensions
        .values()
        .copied()
        .max()
        .ok_or_else(|| Error::input("impact assessment has no dimensions"))
}

/// Requirements whose level is at or below `target_cl`, in catalog order.
pub fn applicable_requirements(catalog: &Catalog, target_cl: u8) -> Vec<&Requirement> {
    catalog
        .requirements()
        .filter(|r| r.cl <= target_cl)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Fulfilled,
    PartiallyFulfilled,
    NotFulfilled,
    NotEvaluated,
}

impl Status {
    pub const ALL: [Status; 4] = [
        Status::Fulfilled,
        Status::PartiallyFulfilled,
        Status::NotFulfilled,
        Status::NotEvaluated,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssessmentEntry {
    pub status: Status,
    #[serde(default)]
    pub evidence: String,
    /// Pointer to an automated check result backing this entry; recorded,
    /// not validated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence_ref: Option<String>,
}

impl AssessmentEntry {
    pub fn new(status: Status) -> Self {
        AssessmentEntry {
            status,
            evidence: String::new(),
            evidence_ref: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assessment {
    pub entries: BTreeMap<String, AssessmentEntry>,
}

impl Assessment {
    /// Every requirement of `catalog` with the same status.
    pub fn uniform(catalog: &Catalog, status: Status) -> Self {
        Assessment {
            entries: catalog
                .requirements()
                .map(|r| (r.id.clone(), AssessmentEntry::new(status)))
                .collect(),
        }
    }

    pub fn set(&mut self, id: &str, status: Status) {
        self.entries
            .insert(id.to_string(), AssessmentEntry::new(status));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Granted,
    GrantedWithConditions,
    Denied,
    Incomplete,
}

impl Decision {
    /// True for decisions that allow a certificate to be issued.
    pub fn is_positive(&self) -> bool {
        matches!(self, Decision::Granted | Decision::GrantedWithConditions)
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Granted => "granted",
            Decision::GrantedWithConditions => "granted_with_conditions",
            Decision::Denied => "denied",
            Decision::Incomplete => "incomplete",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingClass {
    Positive,
    NonSubstantial,
    Substantial,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub requirement_id: String,
    pub class: FindingClass,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConformityResult {
    pub target_cl: u8,
    pub decision: Decision,
    /// Empty when the decision is `incomplete`.
    pub findings: Vec<Finding>,
    /// Applicable requirements not evaluated (or absent from the assessment).
    pub unevaluated: Vec<String>,
}

impl ConformityResult {
    pub fn count(&self, class: FindingClass) -> usize {
        self.findings.iter().filter(|f| f.class == class).count()
    }
}

/// Finding class for one requirement; `None` for an unevaluated one.
pub fn classify(critical: bool, status: Status) -> Option<FindingClass> {
    match (critical, status) {
        (_, Status::NotEvaluated) => None,
        (_, Status::Fulfilled) => Some(FindingClass::Positive),
        (true, _) | (false, Status::NotFulfilled) => Some(FindingClass::Substantial),
        (false, Status::PartiallyFulfilled) => Some(FindingClass::NonSubstantial),
    }
}

fn note(requirement: &Requirement, status: Status, evidence: &str) -> String {
    let rule = match (requirement.critical, status) {
        (_, Status::Fulfilled) => "fulfilled",
        (true, _) => "critical requirement not entirely fulfilled",
        (false, Status::NotFulfilled) => "requirement not fulfilled",
        (false, _) => "requirement partially fulfilled",
    };
    if evidence.is_empty() {
        rule.to_string()
    } else {
        format!("{rule}: {evidence}")
    }
}

/// Evaluates an assessment against the requirements applicable at
/// `target_cl`. Unevaluated requirements make the decision `incomplete`
/// before any nonconformity is considered.
pub fn evaluate_assessment(
    catalog: &Catalog,
    assessment: &Assessment,
    target_cl: u8,
) -> Result<ConformityResult> {
    if !(1..=MAX_CL).contains(&target_cl) {
        return Err(Error::input(format!("target cl {target_cl} outside 1..=4")));
    }
    if let Some(id) = assessment
        .entries
        .keys()
        .find(|id| catalog.requirement(id).is_none())
    {
        return Err(Error::input(format!(
            "assessment references unknown requirement `{id}`"
        )));
    }
    let applicable = applicable_requirements(catalog, target_cl);
    let status_of = |r: &Requirement| {
        assessment
            .entries
            .get(&r.id)
            .map_or((Status::NotEvaluated, ""), |e| {
                (e.status, e.evidence.as_str())
            })
    };

    let unevaluated: Vec<String> = applicable
        .iter()
        .filter(|r| status_of(r).0 == Status::NotEvaluated)
        .map(|r| r.id.clone())
        .collect();
    if !unevaluated.is_empty() {
        return Ok(ConformityResult {
            target_cl,
            decision: Decision::Incomplete,
            findings: Vec::new(),
            unevaluated,
        });
    }

    let findings: Vec<Finding> = applicable
        .iter()
        .map(|r| {
            let (status, evidence) = status_of(r);
            Finding {
                requirement_id: r.id.clone(),
                class: classify(r.critical, status).expect("all applicable requirements evaluated"),
                note: note(r, status, evidence),
            }
        })
        .collect();
    let worst = findings.iter().map(|f| f.class).max();
    let decision = match worst {
        Some(FindingClass::Substantial) => Decision::Denied,
        Some(FindingClass::NonSubstantial) => Decision::GrantedWithConditions,
        _ => Decision::Granted,
    };
    Ok(ConformityResult {
        target_cl,
        decision,
        findings,
        unevaluated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn by_topic<'a>(catalog: &'a Catalog, topic: &str) -> &'a Requirement {
        catalog.requirements().find(|r| r.topic == topic).unwrap()
    }

    #[test]
    fn sample_catalog_shape() {
        let catalog = sample_catalog();
        let ms = catalog.chapter("Model Selection").unwrap();
        assert_eq!(ms.requirements.len(), 6);
        assert_eq!(ms.requirements.iter().filter(|r| r.critical).count(), 3);
        assert_eq!(catalog.chapters.len(), 12);
        let critical: Vec<_> = ms
            .requirements
            .iter()
            .filter(|r| r.critical)
            .map(|r| r.topic.as_str())
            .collect();
        assert_eq!(
            critical,
            [
                "Training and Validation datasets",
                "Test dataset",
                "Field test"
            ]
        );
        assert_eq!(by_topic(&catalog, "Field test").cl, 2);
        assert_eq!(by_topic(&catalog, "ML implementation").cl, 2);
    }

    #[test]
    fn schema_errors() {
        let doc = |reqs: &str| {
            format!(
                r#"{{"name":"c","version":"1","chapters":[{{"title":"t","requirements":[{reqs}]}}]}}"#
            )
        };
        let req = |id: &str, cl: u8| {
            format!(
                r#"{{"id":"{id}","cl":{cl},"critical":false,"topic":"x","description":"y","proofs":[]}}"#
            )
        };
        assert!(parse_catalog(&doc(&req("MS-1", 1))).is_ok());
        assert!(matches!(
            parse_catalog(&doc(&format!("{},{}", req("MS-1", 1), req("MS-1", 2)))),
            Err(Error::Schema(_))
        ));
        assert!(matches!(
            parse_catalog(&doc(&req("MS-1", 5))),
            Err(Error::Schema(_))
        ));
        assert!(matches!(
            parse_catalog(&doc(&req("MS-1", 0))),
            Err(Error::Schema(_))
        ));
        assert!(matches!(parse_catalog("{}"), Err(Error::Schema(_))));
    }

    #[test]
    fn cl_is_the_maximum_impact() {
        let impact = |pairs: &[(&str, u8)]| ImpactAssessment {
            dimensions: pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        };
        assert_eq!(
            determine_cl(&impact(&[("harm_to_life", 1), ("privacy", 1)])).unwrap(),
            1
        );
        assert_eq!(
            determine_cl(&impact(&[("harm", 2), ("confidentiality", 3)])).unwrap(),
            3
        );
        assert!(determine_cl(&impact(&[])).is_err());
        assert!(determine_cl(&impact(&[("ethics", 5)])).is_err());
    }

    #[test]
    fn applicability_by_level() {
        let catalog = sample_catalog();
        let cl1 = applicable_requirements(&catalog, 1);
        assert_eq!(cl1.len(), 4);
        assert!(cl1.iter().all(|r| r.cl == 1));
        assert_eq!(applicable_requirements(&catalog, 2).len(), 6);
        assert_eq!(
            applicable_requirements(&catalog, 4).len(),
            catalog.requirements().count()
        );
    }

    #[test]
    fn all_fulfilled_is_granted() {
        let catalog = sample_catalog();
        let result = evaluate_assessment(
            &catalog,
            &Assessment::uniform(&catalog, Status::Fulfilled),
            2,
        )
        .unwrap();
        assert_eq!(result.decision, Decision::Granted);
        assert_eq!(result.findings.len(), 6);
        assert!(result
            .findings
            .iter()
            .all(|f| f.class == FindingClass::Positive));
    }

    #[test]
    fn critical_test_dataset_failure_denies() {
        let catalog = sample_catalog();
        let mut assessment = Assessment::uniform(&catalog, Status::Fulfilled);
        assessment.set(&by_topic(&catalog, "Test dataset").id, Status::NotFulfilled);
        let result = evaluate_assessment(&catalog, &assessment, 2).unwrap();
        assert_eq!(result.decision, Decision::Denied);
        let substantial: Vec<_> = result
            .findings
            .iter()
            .filter(|f| f.class == FindingClass::Substantial)
            .collect();
        assert_eq!(substantial.len(), 1);
        assert_eq!(substantial[0].requirement_id, "MS-3");
    }

    #[test]
    fn partial_feature_engineering_grants_with_conditions() {
        let catalog = sample_catalog();
        let mut assessment = Assessment::uniform(&catalog, Status::Fulfilled);
        assessment.set(
            &by_topic(&catalog, "Feature engineering").id,
            Status::PartiallyFulfilled,
        );
        let result = evaluate_assessment(&catalog, &assessment, 2).unwrap();
        assert_eq!(result.decision, Decision::GrantedWithConditions);
        assert_eq!(result.count(FindingClass::NonSubstantial), 1);
        assert_eq!(result.count(FindingClass::Substantial), 0);
    }

    #[test]
    fn unevaluated_and_missing_entries_are_incomplete() {
        let catalog = sample_catalog();
        let mut assessment = Assessment::uniform(&catalog, Status::NotFulfilled);
        assessment.set("MS-2", Status::NotEvaluated);
        let result = evaluate_assessment(&catalog, &assessment, 2).unwrap();
        assert_eq!(result.decision, Decision::Incomplete);
        assert_eq!(result.unevaluated, vec!["MS-2"]);
        assert!(result.findings.is_empty());

        let mut partial = Assessment::uniform(&catalog, Status::Fulfilled);
        partial.entries.remove("MS-6");
        assert_eq!(
            evaluate_assessment(&catalog, &partial, 1).unwrap().decision,
            Decision::Granted
        );
        assert_eq!(
            evaluate_assessment(&catalog, &partial, 2).unwrap().decision,
            Decision::Incomplete
        );
    }

    #[test]
    fn unknown_ids_and_bad_levels() {
        let catalog = sample_catalog();
        let mut assessment = Assessment::uniform(&catalog, Status::Fulfilled);
        assessment.set("MS-99", Status::Fulfilled);
        assert!(matches!(
            evaluate_assessment(&catalog, &assessment, 2),
            Err(Error::Input { .. })
        ));
        let ok = Assessment::uniform(&catalog, Status::Fulfilled);
        assert!(evaluate_assessment(&catalog, &ok, 0).is_err());
        assert!(evaluate_assessment(&catalog, &ok, 5).is_err());
    }

    #[test]
    fn status_grid_is_total() {
        use FindingClass::*;
        use Status::*;
        let expected = [
            (true, Fulfilled, Some(Positive)),
            (true, PartiallyFulfilled, Some(Substantial)),
            (true, NotFulfilled, Some(Substantial)),
            (true, NotEvaluated, None),
            (false, Fulfilled, Some(Positive)),
            (false, PartiallyFulfilled, Some(NonSubstantial)),
            (false, NotFulfilled, Some(Substantial)),
            (false, NotEvaluated, None),
        ];
        for (critical, status, class) in expected {
            assert_eq!(classify(critical, status), class, "{critical} {status:?}");
        }
    }

    #[test]
    fn assessment_json_shape() {
        let doc = r#"{"entries":{"MS-1":{"status":"partially_fulfilled","evidence":"memo","evidence_ref":"check:splits"}}}"#;
        let a: Assessment = serde_json::from_str(doc).unwrap();
        assert_eq!(a.entries["MS-1"].status, Status::PartiallyFulfilled);
        assert_eq!(
            a.entries["MS-1"].evidence_ref.as_deref(),
            Some("check:splits")
        );
        let impact: ImpactAssessment =
            serde_json::from_str(r#"{"dimensions":{"privacy":2}}"#).unwrap();
        assert_eq!(determine_cl(&impact).unwrap(), 2);
    }

    fn decision_rank(d: Decision) -> u8 {
        match d {
            Decision::Granted => 2,
            Decision::GrantedWithConditions => 1,
            Decision::Denied => 0,
            Decision::Incomplete => unreachable!(),
        }
    }

    fn tighten(s: Status) -> Status {
        match s {
            Status::Fulfilled => Status::PartiallyFulfilled,
            _ => Status::NotFulfilled,
        }
    }

    fn random_assessment() -> impl Strategy<Value = Assessment> {
        assessment_over(Status::ALL.to_vec())
    }

    fn assessment_over(statuses: Vec<Status>) -> impl Strategy<Value = Assessment> {
        proptest::collection::vec(proptest::sample::select(statuses), 6).prop_map(|statuses| {
            let mut a = Assessment::default();
            for (i, s) in statuses.into_iter().enumerate() {
                a.set(&format!("MS-{}", i + 1), s);
            }
            a
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn granted_is_downward_monotone(assessment in random_assessment(), n in 1u8..=4) {
            let catalog = sample_catalog();
            let result = evaluate_assessment(&catalog, &assessment, n).unwrap();
            if result.decision == Decision::Granted {
                for m in 1..n {
                    prop_assert_eq!(evaluate_assessment(&catalog, &assessment, m).unwrap().decision, Decision::Granted);
                }
            }
        }

        #[test]
        fn tightening_never_improves(
            assessment in assessment_over(vec![Status::Fulfilled, Status::PartiallyFulfilled, Status::NotFulfilled]),
            pick in 0usize..6,
            n in 1u8..=4,
        ) {
            let catalog = sample_catalog();
            let before = evaluate_assessment(&catalog, &assessment, n).unwrap();
            let id = format!("MS-{}", pick + 1);
            let status = assessment.entries[&id].status;
            let mut tightened = assessment.clone();
            tightened.set(&id, tighten(status));
            let after = evaluate_assessment(&catalog, &tightened, n).unwrap();
            prop_assert!(decision_rank(after.decision) <= decision_rank(before.decision));
        }

        #[test]
        fn decision_matches_invariants(assessment in random_assessment(), n in 1u8..=4) {
            let catalog = sample_catalog();
            let r = evaluate_assessment(&catalog, &assessment, n).unwrap();
            prop_assert_eq!(r.decision == Decision::Incomplete, !r.unevaluated.is_empty());
            if r.decision != Decision::Incomplete {
                prop_assert_eq!(r.decision == Decision::Denied, r.count(FindingClass::Substantial) > 0);
                prop_assert_eq!(
                    r.decision == Decision::Granted,
                    r.count(FindingClass::Substantial) + r.count(FindingClass::NonSubstantial) == 0
                );
            }
        }

        #[test]
        fn cl_is_permutation_and_duplication_invariant(levels in proptest::collection::vec(1u8..=4, 1..8), extra in 1u8..=4) {
            let impact = ImpactAssessment {
                dimensions: levels.iter().enumerate().map(|(i, l)| (format!("d{i}"), *l)).collect(),
            };
            let reversed = ImpactAssessment {
                dimensions: levels.iter().rev().enumerate().map(|(i, l)| (format!("r{i}"), *l)).collect(),
            };
            let cl = determine_cl(&impact).unwrap();
            prop_assert_eq!(cl, *levels.iter().max().unwrap());
            prop_assert_eq!(determine_cl(&reversed).unwrap(), cl);
            let mut grown = impact.clone();
            grown.dimensions.insert("extra".into(), extra);
            prop_assert!(determine_cl(&grown).unwrap() >= cl);
        }
    }
}
