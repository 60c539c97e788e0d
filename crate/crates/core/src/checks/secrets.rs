//! Secrets used outside an environment, or combined with
//! other data.

use super::{issue_line, step_conditionality, step_label, Detection, IssueCode};
use crate::workflow::{ExpressionOccurrence, OccurrenceKind, Site, WorkflowModel};

/// `env:` values and `with:` inputs are the sanctioned places for a secret.
/// A secret anywhere else yields `SECRET_OUTSIDE_ENV`; a secret composed
/// with other text or operands in its template yields `SECRET_DERIVED`.
pub fn check_secrets(
    model: &WorkflowModel,
    expressions: &[ExpressionOccurrence],
) -> Vec<Detection> {
    let mut out = Vec::new();
    for occ in expressions {
        if occ.kind != OccurrenceKind::Context
            || !occ.referenced.iter().any(|p| p.starts_with("secrets."))
        {
            continue;
        }
        let mut codes = Vec::new();
        if !matches!(occ.site, Site::EnvValue | Site::WithInput) {
            codes.push(IssueCode::SecretOutsideEnv);
        }
        if occ.composed {
            codes.push(IssueCode::SecretDerived);
        }
        for issue in codes {
            out.push(Detection {
                issue,
                job_name: job_name(occ),
                step_name: step_label(model, &occ.job_id, occ.step_index),
                step_position: occ.step_index,
                issue_line: issue_line(model, occ.line),
                conditionality: step_conditionality(model, &occ.job_id, occ.step_index),
            });
        }
    }
    out
}

pub(super) fn job_name(occ: &ExpressionOccurrence) -> String {
    if occ.job_id.is_empty() {
        "-".to_string()
    } else {
        occ.job_id.clone()
    }
}
