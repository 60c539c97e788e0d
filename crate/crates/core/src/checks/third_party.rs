//! Third-party actions and reusable workflows: stale pins and unpinned refs.

use super::{issue_line, Conditionality, Detection, Indeterminate, IssueCode};
use crate::forge::{ForgeError, LatestVersion};
use crate::workflow::{ActionRef, RefKind, Text, WorkflowModel};

/// Answers version questions about action repositories.
pub trait VersionResolver: Sync {
    fn latest_version(&self, owner: &str, repo: &str) -> Result<LatestVersion, ForgeError>;
    /// Resolves a tag or branch to a commit sha.
    fn resolve_ref(
        &self,
        owner: &str,
        repo: &str,
        reference: &RefKind,
    ) -> Result<String, ForgeError>;
}

/// A resolver for scans without any version source.
#[derive(Debug, Default, Clone, Copy)]
pub struct OfflineResolver;

impl VersionResolver for OfflineResolver {
    fn latest_version(&self, _: &str, _: &str) -> Result<LatestVersion, ForgeError> {
        Err(ForgeError::Unavailable(
            "no version source configured".into(),
        ))
    }

    fn resolve_ref(&self, _: &str, _: &str, _: &RefKind) -> Result<String, ForgeError> {
        Err(ForgeError::Unavailable(
            "no version source configured".into(),
        ))
    }
}

struct Site<'a> {
    action: &'a ActionRef,
    text: &'a Text,
    job: &'a str,
    step_name: String,
    step_position: usize,
}

/// `UNPINNED_WF` for every remote ref that is not a full commit sha, and
/// `OUTDATED_WF` for every ref whose commit differs from the commit of the
/// action's latest version. When version data is unavailable the staleness part
/// is reported as [`Indeterminate`]; the pinning part is purely syntactic and
/// always runs.
pub fn check_third_party(
    model: &WorkflowModel,
    resolver: &dyn VersionResolver,
) -> (Vec<Detection>, Vec<Indeterminate>) {
    let mut sites = Vec::new();
    for job in &model.jobs {
        if let (Some(action), Some(text)) = (&job.reusable_workflow, &job.reusable_text) {
            sites.push(Site {
                action,
                text,
                job: &job.job_id,
                step_name: text.value.clone(),
                step_position: 0,
            });
        }
        for step in &job.steps {
            if let (Some(action), Some(text)) = (&step.uses, &step.uses_text) {
                sites.push(Site {
                    action,
                    text,
                    job: &job.job_id,
                    step_name: step.label(),
                    step_position: step.index,
                });
            }
        }
    }

    let mut detections = Vec::new();
    let mut indeterminate = Vec::new();
    for site in sites.iter().filter(|s| s.action.is_remote()) {
        let detection = |issue| Detection {
            issue,
            job_name: site.job.to_string(),
            step_name: site.step_name.clone(),
            step_position: site.step_position,
            issue_line: issue_line(model, site.text.line),
            conditionality: Conditionality::NotApplicable,
        };
        if !site.action.reference.is_pinned() {
            detections.push(detection(IssueCode::UnpinnedWorkflow));
        }
        match is_outdated(site.action, resolver) {
            Ok(true) => detections.push(detection(IssueCode::OutdatedWorkflow)),
            Ok(false) => {}
            Err(reason) => indeterminate.push(Indeterminate {
                issue: IssueCode::OutdatedWorkflow,
                job_name: site.job.to_string(),
                step_name: site.step_name.clone(),
                step_position: site.step_position,
                line: site.text.line,
                action: site.action.to_string(),
                reason,
            }),
        }
    }
    (detections, indeterminate)
}

fn is_outdated(action: &ActionRef, resolver: &dyn VersionResolver) -> Result<bool, String> {
    let owner = &action.owner;
    let repo = &action.repo;
    let used = match &action.reference {
        RefKind::CommitSha(sha) => sha.clone(),
        RefKind::Branch(b) if b.is_empty() => return Err("no version selected".into()),
        other => resolver
            .resolve_ref(owner, repo, other)
            .map_err(|e| e.to_string())?,
    };
    let latest = resolver
        .latest_version(owner, repo)
        .map_err(|e| e.to_string())?;
    Ok(!used.eq_ignore_ascii_case(&latest.commit_sha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workflow::parse_workflow;
    use std::collections::HashMap;
    use std::path::Path;

    const OLD: &str = "1111111111111111111111111111111111111111";
    const NEW: &str = "2222222222222222222222222222222222222222";

    struct Fixed {
        latest: HashMap<&'static str, &'static str>,
        refs: HashMap<&'static str, &'static str>,
    }

    impl VersionResolver for Fixed {
        fn latest_version(&self, owner: &str, repo: &str) -> Result<LatestVersion, ForgeError> {
            let key = format!("{owner}/{repo}");
            let sha = self
                .latest
                .get(key.as_str())
                .ok_or_else(|| ForgeError::RepoNotFound(key.clone()))?;
            Ok(LatestVersion {
                tag: "v4".into(),
                commit_sha: sha.to_string(),
                published_at: None,
            })
        }

        fn resolve_ref(&self, owner: &str, repo: &str, r: &RefKind) -> Result<String, ForgeError> {
            let q = r.as_query().unwrap_or_default();
            self.refs
                .get(q)
                .map(|s| s.to_string())
                .ok_or_else(|| ForgeError::RefNotFound {
                    repo: format!("{owner}/{repo}"),
                    reference: q.to_string(),
                })
        }
    }

    fn resolver() -> Fixed {
        Fixed {
            latest: HashMap::from([("actions/checkout", NEW), ("owner/act", NEW)]),
            refs: HashMap::from([("v2", OLD), ("v4", NEW), ("latest", NEW)]),
        }
    }

    fn run(uses: &str, r: &dyn VersionResolver) -> (Vec<String>, usize) {
        let src = format!("on: push\njobs:\n  a:\n    steps:\n      - uses: {uses}\n");
        let m = parse_workflow(&src, Path::new("t.yml")).unwrap();
        let (d, i) = check_third_party(&m, r);
        (d.iter().map(|d| d.issue.to_string()).collect(), i.len())
    }

    #[test]
    fn stale_tag() {
        assert_eq!(
            run("actions/checkout@v2", &resolver()),
            (vec!["UNPINNED_WF".into(), "OUTDATED_WF".into()], 0)
        );
    }

    #[test]
    fn pinned_latest_passes() {
        assert_eq!(run(&format!("owner/act@{NEW}"), &resolver()), (vec![], 0));
    }

    #[test]
    fn pinned_stale_is_outdated_only() {
        assert_eq!(
            run(&format!("owner/act@{OLD}"), &resolver()),
            (vec!["OUTDATED_WF".into()], 0)
        );
    }

    #[test]
    fn latest_tag_is_unpinned_only() {
        assert_eq!(
            run("owner/act@latest", &resolver()),
            (vec!["UNPINNED_WF".into()], 0)
        );
    }

    #[test]
    fn local_action_skipped() {
        assert_eq!(run("./.github/actions/local", &resolver()), (vec![], 0));
        assert_eq!(run("docker://alpine:3", &resolver()), (vec![], 0));
    }

    #[test]
    fn offline_is_indeterminate() {
        assert_eq!(
            run("actions/checkout@v2", &OfflineResolver),
            (vec!["UNPINNED_WF".into()], 1)
        );
    }

    #[test]
    fn reusable_workflow_job() {
        let src = format!(
            "on: push\njobs:\n  call:\n    uses: owner/act/.github/workflows/x.yml@{OLD}\n"
        );
        let m = parse_workflow(&src, Path::new("t.yml")).unwrap();
        let (d, _) = check_third_party(&m, &resolver());
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].issue, IssueCode::OutdatedWorkflow);
        assert_eq!(d[0].step_position, 0);
    }
}
