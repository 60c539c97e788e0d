//! Documented trigger events, activity types and permission scopes.

/// Activity types accepted by events that support a `types:` filter.
pub fn activity_types(event: &str) -> Option<&'static [&'static str]> {
    let types: &[&str] = match event {
        "branch_protection_rule" => &["created", "edited", "deleted"],
        "check_run" => &["created", "rerequested", "completed", "requested_action"],
        "check_suite" => &["completed"],
        "discussion" => &[
            "created",
            "edited",
            "deleted",
            "transferred",
            "pinned",
            "unpinned",
            "labeled",
            "unlabeled",
            "locked",
            "unlocked",
            "category_changed",
            "answered",
            "unanswered",
        ],
        "discussion_comment" => &["created", "edited", "deleted"],
        "issue_comment" => &["created", "edited", "deleted"],
        "issues" => &[
            "opened",
            "edited",
            "deleted",
            "transferred",
            "pinned",
            "unpinned",
            "closed",
            "reopened",
            "assigned",
            "unassigned",
            "labeled",
            "unlabeled",
            "locked",
            "unlocked",
            "milestoned",
            "demilestoned",
        ],
        "label" => &["created", "edited", "deleted"],
        "merge_group" => &["checks_requested"],
        "milestone" => &["created", "closed", "opened", "edited", "deleted"],
        "project" => &["created", "closed", "reopened", "edited", "deleted"],
        "project_card" => &["created", "moved", "converted", "edited", "deleted"],
        "project_column" => &["created", "updated", "moved", "deleted"],
        "pull_request" | "pull_request_target" => &[
            "assigned",
            "unassigned",
            "labeled",
            "unlabeled",
            "opened",
            "edited",
            "closed",
            "reopened",
            "synchronize",
            "converted_to_draft",
            "ready_for_review",
            "locked",
            "unlocked",
            "review_requested",
            "review_request_removed",
            "auto_merge_enabled",
            "auto_merge_disabled",
            "milestoned",
            "demilestoned",
            "enqueued",
            "dequeued",
        ],
        "pull_request_review" => &["submitted", "edited", "dismissed"],
        "pull_request_review_comment" => &["created", "edited", "deleted"],
        "registry_package" => &["published", "updated"],
        "release" => &[
            "published",
            "unpublished",
            "created",
            "edited",
            "deleted",
            "prereleased",
            "released",
        ],
        "workflow_run" => &["completed", "requested", "in_progress"],
        _ => return None,
    };
    Some(types)
}

pub const EVENTS: &[&str] = &[
    "branch_protection_rule",
    "check_run",
    "check_suite",
    "create",
    "delete",
    "deployment",
    "deployment_status",
    "discussion",
    "discussion_comment",
    "fork",
    "gollum",
    "issue_comment",
    "issues",
    "label",
    "merge_group",
    "milestone",
    "page_build",
    "project",
    "project_card",
    "project_column",
    "public",
    "pull_request",
    "pull_request_review",
    "pull_request_review_comment",
    "pull_request_target",
    "push",
    "registry_package",
    "release",
    "repository_dispatch",
    "schedule",
    "status",
    "watch",
    "workflow_call",
    "workflow_dispatch",
    "workflow_run",
];

pub const PERMISSION_SCOPES: &[&str] = &[
    "actions",
    "attestations",
    "checks",
    "contents",
    "deployments",
    "discussions",
    "id-token",
    "issues",
    "models",
    "packages",
    "pages",
    "pull-requests",
    "repository-projects",
    "security-events",
    "statuses",
];

/// Expression contexts that may start a context path.
pub const CONTEXTS: &[&str] = &[
    "github", "env", "vars", "job", "jobs", "steps", "runner", "secrets", "strategy", "matrix",
    "needs", "inputs",
];
