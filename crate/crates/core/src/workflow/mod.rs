//! Semantic model of a single workflow file.

mod action_ref;
mod expr;
mod parse;
mod permissions;
pub mod vocabulary;

use std::path::PathBuf;

pub use action_ref::{is_commit_sha, ActionRef, RefKind};
pub use expr::{
    extract_expressions, normalize_context_path, scan_templates, ContextPath, ExpressionOccurrence,
    OccurrenceKind, Site, TemplateMatch,
};
pub use parse::parse_workflow;
pub use permissions::{AccessLevel, PermissionDecl};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("malformed YAML: {0}")]
    MalformedYaml(String),
    #[error("not a workflow: {0}")]
    NotAWorkflow(String),
    #[error("workflow declares no jobs")]
    EmptyJobs,
}

/// A scalar value together with where it was read from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Text {
    pub value: String,
    /// 1-based line of the scalar's first character.
    pub line: usize,
    /// Byte offset of the scalar in the source.
    pub start: usize,
    /// Upper bound of the scalar's byte range.
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriggerEvent {
    pub event_name: String,
    pub activity_types: Vec<String>,
    /// Activity types outside the documented vocabulary for this event.
    pub unknown_activity_types: Vec<String>,
    pub filters: std::collections::BTreeMap<String, Vec<String>>,
}

impl TriggerEvent {
    pub fn named(name: &str) -> Self {
        TriggerEvent {
            event_name: name.to_ascii_lowercase(),
            activity_types: Vec::new(),
            unknown_activity_types: Vec::new(),
            filters: Default::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepModel {
    /// 1-based position within the job.
    pub index: usize,
    pub display_name: Option<String>,
    pub run_script: Option<Text>,
    pub uses: Option<ActionRef>,
    /// The raw `uses:` value with its location.
    pub uses_text: Option<Text>,
    pub env: Vec<(String, Text)>,
    pub with_inputs: Vec<(String, Text)>,
    pub conditional: Option<Text>,
    /// 1-based line of the step's first key.
    pub line: usize,
    /// Every other scalar value of the step.
    pub other: Vec<Text>,
}

impl StepModel {
    /// The label used for this step in reports.
    pub fn label(&self) -> String {
        if let Some(name) = &self.display_name {
            return name.clone();
        }
        if let Some(uses) = &self.uses_text {
            return uses.value.clone();
        }
        if let Some(run) = &self.run_script {
            let first = run
                .value
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("");
            return first.trim().to_string();
        }
        format!("step {}", self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobModel {
    pub job_id: String,
    pub display_name: Option<String>,
    pub permissions: Option<PermissionDecl>,
    pub env: Vec<(String, Text)>,
    pub steps: Vec<StepModel>,
    pub reusable_workflow: Option<ActionRef>,
    pub reusable_text: Option<Text>,
    /// `with:` and `secrets:` passed to a reusable workflow.
    pub with_inputs: Vec<(String, Text)>,
    pub conditional: Option<Text>,
    pub line: usize,
    pub other: Vec<Text>,
}

impl JobModel {
    pub fn has_conditional(&self) -> bool {
        self.conditional.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkflowModel {
    pub name: Option<String>,
    pub source_path: PathBuf,
    pub triggers: Vec<TriggerEvent>,
    pub permissions: Option<PermissionDecl>,
    /// Line of the workflow-level `permissions:` key, when present.
    pub permissions_line: Option<usize>,
    pub env: Vec<(String, Text)>,
    pub jobs: Vec<JobModel>,
    pub source: String,
    pub raw_lines: Vec<String>,
    pub other: Vec<Text>,
}

impl WorkflowModel {
    pub fn job(&self, id: &str) -> Option<&JobModel> {
        self.jobs.iter().find(|j| j.job_id == id)
    }

    /// Verbatim text of a 1-based line, or empty when out of range.
    pub fn line_text(&self, line: usize) -> &str {
        line.checked_sub(1)
            .and_then(|i| self.raw_lines.get(i))
            .map(String::as_str)
            .unwrap_or("")
    }

    /// 1-based line containing the given byte offset.
    pub fn line_of_offset(&self, offset: usize) -> usize {
        line_of_offset(&self.source, offset)
    }
}

pub(crate) fn line_of_offset(source: &str, offset: usize) -> usize {
    let offset = offset.min(source.len());
    source.as_bytes()[..offset]
        .iter()
        .filter(|&&b| b == b'\n')
        .count()
        + 1
}
