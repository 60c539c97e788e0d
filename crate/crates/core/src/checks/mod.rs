//! Workflow security checks and their combination with event scores.
//!
//! Each check produces [`Detection`]s: one per offending site, without any
//! trigger information. [`run_all_checks`] then replicates every detection
//! once per trigger event, attaching that event's exploitability score, to
//! form the final [`Finding`] tuples.

mod controllability;
mod injection;
mod permissions;
mod secrets;
mod third_party;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use controllability::{
    Controllability, ControllabilityEntry, ControllabilityTable, TableError,
};
pub use injection::check_injection;
pub use permissions::{check_permissions, permission_posture, PermissionPosture};
pub use secrets::check_secrets;
pub use third_party::{check_third_party, OfflineResolver, VersionResolver};

use crate::exploitability::{score_event, EventScoreTable, ExploitabilityScore};
use crate::workflow::{extract_expressions, WorkflowModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    Vulnerability,
    Misconfiguration,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IssueCode {
    /// Attacker-controlled context interpolated into a run script; carries
    /// the path tag, e.g. `ISSUE_TITLE`.
    CommandInjection(String),
    SecretOutsideEnv,
    SecretDerived,
    OutdatedWorkflow,
    UnpinnedWorkflow,
    PermissionsGlobal,
    PermissionsDefault,
}

impl IssueCode {
    pub fn kind(&self) -> IssueKind {
        match self {
            IssueCode::CommandInjection(_)
            | IssueCode::SecretOutsideEnv
            | IssueCode::SecretDerived => IssueKind::Vulnerability,
            IssueCode::OutdatedWorkflow
            | IssueCode::UnpinnedWorkflow
            | IssueCode::PermissionsGlobal
            | IssueCode::PermissionsDefault => IssueKind::Misconfiguration,
        }
    }
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IssueCode::CommandInjection(tag) => write!(f, "CI_{tag}"),
            IssueCode::SecretOutsideEnv => f.write_str("SECRET_OUTSIDE_ENV"),
            IssueCode::SecretDerived => f.write_str("SECRET_DERIVED"),
            IssueCode::OutdatedWorkflow => f.write_str("OUTDATED_WF"),
            IssueCode::UnpinnedWorkflow => f.write_str("UNPINNED_WF"),
            IssueCode::PermissionsGlobal => f.write_str("MISCONF_PERM_GLOBAL"),
            IssueCode::PermissionsDefault => f.write_str("MISCONF_PERM_DEFAULT"),
        }
    }
}

impl FromStr for IssueCode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "SECRET_OUTSIDE_ENV" => IssueCode::SecretOutsideEnv,
            "SECRET_DERIVED" => IssueCode::SecretDerived,
            "OUTDATED_WF" => IssueCode::OutdatedWorkflow,
            "UNPINNED_WF" => IssueCode::UnpinnedWorkflow,
            "MISCONF_PERM_GLOBAL" => IssueCode::PermissionsGlobal,
            "MISCONF_PERM_DEFAULT" => IssueCode::PermissionsDefault,
            other => match other.strip_prefix("CI_") {
                Some(tag) if !tag.is_empty() => IssueCode::CommandInjection(tag.to_string()),
                _ => return Err(format!("unknown issue code `{other}`")),
            },
        })
    }
}

impl Serialize for IssueCode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for IssueCode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conditionality {
    Unconditional,
    Conditional,
    NotApplicable,
}

/// A line of the workflow file, verbatim.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IssueLine {
    pub number: usize,
    pub text: String,
}

/// One issue at one site, before per-event replication.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Detection {
    pub issue: IssueCode,
    pub job_name: String,
    pub step_name: String,
    pub step_position: usize,
    pub issue_line: IssueLine,
    pub conditionality: Conditionality,
}

/// One issue for one triggering event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub issue: IssueCode,
    pub triggering_event: String,
    pub job_name: String,
    pub step_name: String,
    pub step_position: usize,
    pub issue_line: IssueLine,
    pub exploitability: ExploitabilityScore,
    pub conditionality: Conditionality,
}

impl Finding {
    pub fn kind(&self) -> IssueKind {
        self.issue.kind()
    }
}

/// A staleness check that could not be decided because version data was
/// unavailable. Kept apart from findings and never counted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Indeterminate {
    pub issue: IssueCode,
    pub job_name: String,
    pub step_name: String,
    pub step_position: usize,
    pub line: usize,
    pub action: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CheckOutcome {
    pub findings: Vec<Finding>,
    pub indeterminate: Vec<Indeterminate>,
}

pub(crate) fn issue_line(model: &WorkflowModel, line: usize) -> IssueLine {
    IssueLine {
        number: line,
        text: model.line_text(line).to_string(),
    }
}

pub(crate) fn step_conditionality(
    model: &WorkflowModel,
    job_id: &str,
    step_index: usize,
) -> Conditionality {
    let Some(job) = model.job(job_id) else {
        return Conditionality::Unconditional;
    };
    let step_if = step_index
        .checked_sub(1)
        .and_then(|i| job.steps.get(i))
        .is_some_and(|s| s.conditional.is_some());
    if job.has_conditional() || step_if {
        Conditionality::Conditional
    } else {
        Conditionality::Unconditional
    }
}

pub(crate) fn step_label(model: &WorkflowModel, job_id: &str, step_index: usize) -> String {
    model
        .job(job_id)
        .and_then(|j| step_index.checked_sub(1).and_then(|i| j.steps.get(i)))
        .map(|s| s.label())
        .unwrap_or_else(|| "-".to_string())
}

/// Runs every check and replicates each detection once per trigger event.
///
/// Output is ordered by job (declaration order, workflow-level first), step
/// position, line, issue code, then event declaration order.
pub fn run_all_checks(
    model: &WorkflowModel,
    controllability: &ControllabilityTable,
    resolver: &dyn VersionResolver,
    score_table: &EventScoreTable,
) -> CheckOutcome {
    let expressions = extract_expressions(model);
    let mut detections = check_secrets(model, &expressions);
    detections.extend(check_injection(model, &expressions, controllability));
    let (third_party, indeterminate) = check_third_party(model, resolver);
    detections.extend(third_party);
    detections.extend(check_permissions(model));

    let job_order = |name: &str| {
        model
            .jobs
            .iter()
            .position(|j| j.job_id == name)
            .map(|p| p + 1)
            .unwrap_or(0)
    };
    detections.sort_by(|a, b| {
        (job_order(&a.job_name), a.step_position, a.issue_line.number)
            .cmp(&(job_order(&b.job_name), b.step_position, b.issue_line.number))
            .then_with(|| a.issue.to_string().cmp(&b.issue.to_string()))
    });

    let scores: Vec<(String, ExploitabilityScore)> = model
        .triggers
        .iter()
        .map(|t| (t.event_name.clone(), score_event(t, score_table)))
        .collect();

    let findings = detections
        .iter()
        .flat_map(|d| {
            scores.iter().map(move |(event, score)| Finding {
                issue: d.issue.clone(),
                triggering_event: event.clone(),
                job_name: d.job_name.clone(),
                step_name: d.step_name.clone(),
                step_position: d.step_position,
                issue_line: d.issue_line.clone(),
                exploitability: score.clone(),
                conditionality: d.conditionality,
            })
        })
        .collect();
    CheckOutcome {
        findings,
        indeterminate,
    }
}
