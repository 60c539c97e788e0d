//! Placement of `permissions:` declarations.
//!
//! Only presence and placement are evaluated. Whether a declared scope
//! exceeds what the job needs is not decidable statically.

use serde::{Deserialize, Serialize};

use super::{issue_line, Conditionality, Detection, IssueCode};
use crate::workflow::WorkflowModel;

/// How a workflow scopes its token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PermissionPosture {
    /// Some job runs with the default token permissions.
    Default,
    /// Some job relies on workflow-level permissions only.
    Global,
    /// Every job declares its own permissions.
    PerJob,
}

pub fn permission_posture(model: &WorkflowModel) -> PermissionPosture {
    let all_jobs_scoped = model.jobs.iter().all(|j| j.permissions.is_some());
    match (all_jobs_scoped, model.permissions.is_some()) {
        (true, _) => PermissionPosture::PerJob,
        (false, true) => PermissionPosture::Global,
        (false, false) => PermissionPosture::Default,
    }
}

pub fn check_permissions(model: &WorkflowModel) -> Vec<Detection> {
    let first_unscoped = model
        .jobs
        .iter()
        .find(|j| j.permissions.is_none())
        .map(|j| j.job_id.clone());
    let (issue, job_name, line) = match permission_posture(model) {
        PermissionPosture::PerJob => return Vec::new(),
        PermissionPosture::Global => (
            IssueCode::PermissionsGlobal,
            first_unscoped.unwrap_or_else(|| "-".into()),
            model.permissions_line.unwrap_or(1),
        ),
        PermissionPosture::Default => {
            let any_scoped = model.jobs.iter().any(|j| j.permissions.is_some());
            let job = if any_scoped {
                first_unscoped.unwrap_or_else(|| "-".into())
            } else {
                "-".into()
            };
            (IssueCode::PermissionsDefault, job, 1)
        }
    };
    vec![Detection {
        issue,
        job_name,
        step_name: "-".into(),
        step_position: 0,
        issue_line: issue_line(model, line),
        conditionality: Conditionality::NotApplicable,
    }]
}
