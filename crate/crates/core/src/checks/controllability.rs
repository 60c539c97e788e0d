use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Controllability {
    AttackerControlled,
    MaintainerControlled,
    PlatformControlled,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControllabilityEntry {
    /// Suffix of the `CI_<TAG>` issue code.
    pub tag: String,
    pub class: Controllability,
}

/// Maps normalized `github.*` paths to who controls their value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControllabilityTable {
    pub entries: BTreeMap<String, ControllabilityEntry>,
}

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("cannot read controllability table {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid controllability table: {0}")]
    Invalid(String),
}

const ATTACKER: &[(&str, &str)] = &[
    ("github.event.issue.title", "ISSUE_TITLE"),
    ("github.event.issue.body", "ISSUE_BODY"),
    ("github.event.pull_request.title", "PR_TITLE"),
    ("github.event.pull_request.body", "PR_BODY"),
    ("github.event.comment.body", "COMMENT_BODY"),
    ("github.event.review.body", "REVIEW_BODY"),
    ("github.event.review_comment.body", "REVIEW_COMMENT_BODY"),
    ("github.event.discussion.title", "DISCUSSION_TITLE"),
    ("github.event.discussion.body", "DISCUSSION_BODY"),
    ("github.event.pages[*].page_name", "PAGE_NAME"),
    ("github.event.commits[*].message", "COMMIT_MESSAGE"),
    (
        "github.event.commits[*].author.email",
        "COMMIT_AUTHOR_EMAIL",
    ),
    ("github.event.commits[*].author.name", "COMMIT_AUTHOR_NAME"),
    ("github.event.head_commit.message", "HEAD_COMMIT_MESSAGE"),
    (
        "github.event.head_commit.author.email",
        "HEAD_COMMIT_AUTHOR_EMAIL",
    ),
    (
        "github.event.head_commit.author.name",
        "HEAD_COMMIT_AUTHOR_NAME",
    ),
    ("github.event.pull_request.head.ref", "PR_HEAD_REF"),
    ("github.event.pull_request.head.label", "PR_HEAD_LABEL"),
    (
        "github.event.pull_request.head.repo.default_branch",
        "PR_HEAD_REPO_DEFAULT_BRANCH",
    ),
    (
        "github.event.pull_request.head.repo.name",
        "PR_HEAD_REPO_NAME",
    ),
    (
        "github.event.workflow_run.head_branch",
        "WORKFLOW_RUN_HEAD_BRANCH",
    ),
    (
        "github.event.workflow_run.head_commit.message",
        "WORKFLOW_RUN_COMMIT_MESSAGE",
    ),
    (
        "github.event.workflow_run.head_commit.author.email",
        "WORKFLOW_RUN_AUTHOR_EMAIL",
    ),
    (
        "github.event.workflow_run.head_commit.author.name",
        "WORKFLOW_RUN_AUTHOR_NAME",
    ),
    ("github.head_ref", "HEAD_REF"),
    ("github.actor", "ACTOR"),
    ("github.triggering_actor", "TRIGGERING_ACTOR"),
];

const MAINTAINER: &[(&str, &str)] = &[
    ("github.event.release.body", "RELEASE_BODY"),
    ("github.event.release.name", "RELEASE_NAME"),
    ("github.event.release.tag_name", "RELEASE_TAG"),
    ("github.event.inputs", "DISPATCH_INPUTS"),
    ("github.ref_name", "REF_NAME"),
    ("github.base_ref", "BASE_REF"),
];

const PLATFORM: &[(&str, &str)] = &[
    ("github.sha", "SHA"),
    ("github.ref", "REF"),
    ("github.run_id", "RUN_ID"),
    ("github.run_number", "RUN_NUMBER"),
    ("github.repository", "REPOSITORY"),
    ("github.repository_owner", "REPOSITORY_OWNER"),
    ("github.workspace", "WORKSPACE"),
    ("github.event_name", "EVENT_NAME"),
    ("github.event.number", "EVENT_NUMBER"),
    ("github.event.pull_request.number", "PR_NUMBER"),
    ("github.event.pull_request.head.sha", "PR_HEAD_SHA"),
    ("github.event.issue.number", "ISSUE_NUMBER"),
    ("github.token", "TOKEN"),
];

impl Default for ControllabilityTable {
    fn default() -> Self {
        let mut entries = BTreeMap::new();
        for (list, class) in [
            (ATTACKER, Controllability::AttackerControlled),
            (MAINTAINER, Controllability::MaintainerControlled),
            (PLATFORM, Controllability::PlatformControlled),
        ] {
            for (path, tag) in list {
                entries.insert(
                    path.to_string(),
                    ControllabilityEntry {
                        tag: tag.to_string(),
                        class,
                    },
                );
            }
        }
        ControllabilityTable { entries }
    }
}

#[derive(Deserialize)]
struct OverrideEntry {
    tag: String,
    class: Controllability,
}

impl ControllabilityTable {
    /// The attacker-controlled entry for a normalized path, if any.
    pub fn attacker_tag(&self, path: &str) -> Option<&str> {
        self.entries
            .get(path)
            .filter(|e| e.class == Controllability::AttackerControlled)
            .map(|e| e.tag.as_str())
    }

    /// Merges a YAML file of `path: {tag: X, class: attacker_controlled}`
    /// entries over this table.
    pub fn merge_overrides(&mut self, yaml_text: &str) -> Result<(), TableError> {
        let root = match crate::yaml::load(yaml_text) {
            Ok(root) => root,
            Err(crate::yaml::YamlError::Empty) => return Ok(()),
            Err(e) => return Err(TableError::Invalid(e.to_string())),
        };
        let entries = match &root.value {
            crate::yaml::Value::Map(m) => m,
            crate::yaml::Value::Null => return Ok(()),
            _ => return Err(TableError::Invalid("expected a mapping".into())),
        };
        for (k, v) in entries {
            let path = k
                .as_str()
                .ok_or_else(|| TableError::Invalid("non-scalar key".into()))?;
            let tag = v
                .get("tag")
                .and_then(|n| n.as_str())
                .ok_or_else(|| TableError::Invalid(format!("`{path}`: missing tag")))?;
            let class = v
                .get("class")
                .and_then(|n| n.as_str())
                .ok_or_else(|| TableError::Invalid(format!("`{path}`: missing class")))?;
            let parsed: OverrideEntry = serde_json::from_value(serde_json::json!({
                "tag": tag,
                "class": class,
            }))
            .map_err(|e| TableError::Invalid(format!("`{path}`: {e}")))?;
            let normalized = crate::workflow::normalize_context_path(path)
                .map(|p| p.path)
                .map_err(|e| TableError::Invalid(e.to_string()))?;
            self.entries.insert(
                normalized,
                ControllabilityEntry {
                    tag: parsed.tag.to_ascii_uppercase(),
                    class: parsed.class,
                },
            );
        }
        self.validate()
    }

    /// Attacker-controlled tags must be unique so every `CI_*` code maps
    /// back to one path.
    pub fn validate(&self) -> Result<(), TableError> {
        let mut seen = BTreeMap::new();
        for (path, entry) in &self.entries {
            if entry.class != Controllability::AttackerControlled {
                continue;
            }
            if let Some(prev) = seen.insert(entry.tag.clone(), path.clone()) {
                return Err(TableError::Invalid(format!(
                    "tag {} used by both {prev} and {path}",
                    entry.tag
                )));
            }
        }
        Ok(())
    }

    pub fn load_with_overrides(path: Option<&Path>) -> Result<Self, TableError> {
        let mut table = ControllabilityTable::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|source| TableError::Io {
                path: path.display().to_string(),
                source,
            })?;
            table.merge_overrides(&text)?;
        }
        Ok(table)
    }
}
