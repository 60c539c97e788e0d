//! Attacker-controlled `github` context interpolated into run steps.

use super::secrets::job_name;
use super::{
    issue_line, step_conditionality, step_label, ControllabilityTable, Detection, IssueCode,
};
use crate::workflow::{ExpressionOccurrence, OccurrenceKind, Site, WorkflowModel};

/// Emits one `CI_<TAG>` detection per attacker-controlled path referenced by
/// a template inside a `run:` script. Values routed through `env:` first are
/// not run-script sites and are therefore never reported.
pub fn check_injection(
    model: &WorkflowModel,
    expressions: &[ExpressionOccurrence],
    table: &ControllabilityTable,
) -> Vec<Detection> {
    let mut out = Vec::new();
    for occ in expressions {
        if occ.kind != OccurrenceKind::Context || occ.site != Site::RunScript {
            continue;
        }
        let mut tags: Vec<&str> = Vec::new();
        for tag in occ.referenced.iter().filter_map(|p| table.attacker_tag(p)) {
            if !tags.contains(&tag) {
                tags.push(tag);
            }
        }
        for tag in tags {
            out.push(Detection {
                issue: IssueCode::CommandInjection(tag.to_string()),
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
