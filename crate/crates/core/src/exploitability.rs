//! Exploitability of trigger events.
//!
//! Each event is ranked by how much an outside attacker must achieve before
//! they can fire it:
//!
//! * `Restricted` (1): needs write access or a repository-content change.
//! * `Supervised` (2): fires only after maintainer mediation or approval.
//! * `Unsupervised` (3): any account can fire it by external action.
//!
//! Activity-type filters can only lower a score: the effective score of a
//! filtered event is the highest score among its declared types.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::workflow::vocabulary::EVENTS;
use crate::workflow::TriggerEvent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Level {
    Restricted = 1,
    Supervised = 2,
    Unsupervised = 3,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Restricted, Level::Supervised, Level::Unsupervised];

    pub fn value(self) -> u8 {
        self as u8
    }

    pub fn label(self) -> &'static str {
        match self {
            Level::Restricted => "Restricted",
            Level::Supervised => "Supervised",
            Level::Unsupervised => "Unsupervised",
        }
    }
}

impl TryFrom<u8> for Level {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(Level::Restricted),
            2 => Ok(Level::Supervised),
            3 => Ok(Level::Unsupervised),
            other => Err(format!(
                "exploitability level must be 1, 2 or 3, got {other}"
            )),
        }
    }
}

impl From<Level> for u8 {
    fn from(l: Level) -> u8 {
        l.value()
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.value(), self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExploitabilityScore {
    pub level: Level,
    pub rationale: String,
}

impl ExploitabilityScore {
    fn new(level: Level, rationale: impl Into<String>) -> Self {
        ExploitabilityScore {
            level,
            rationale: rationale.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableEntry {
    pub score: ExploitabilityScore,
    pub overridden: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventScoreTable {
    pub base: BTreeMap<String, TableEntry>,
    pub activity_overrides: BTreeMap<(String, String), TableEntry>,
    pub default_for_unknown: ExploitabilityScore,
}

#[derive(Debug, thiserror::Error)]
pub enum ScoreTableError {
    #[error("cannot read score table {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid score table: {0}")]
    Invalid(String),
}

const WRITE_ACCESS: &str = "requires write access or a repository-content change";
const OPEN: &str = "any account can fire it by external action";

pub fn default_score_table() -> EventScoreTable {
    use Level::*;
    let base_entries: &[(&str, Level, &str)] = &[
        ("push", Restricted, WRITE_ACCESS),
        (
            "schedule",
            Restricted,
            "cron is set by a committed workflow change",
        ),
        (
            "workflow_dispatch",
            Restricted,
            "dispatch requires write access",
        ),
        (
            "repository_dispatch",
            Restricted,
            "dispatch requires a token with write access",
        ),
        (
            "workflow_call",
            Restricted,
            "runs only when a caller workflow invokes it",
        ),
        ("release", Restricted, WRITE_ACCESS),
        ("create", Restricted, WRITE_ACCESS),
        ("delete", Restricted, WRITE_ACCESS),
        ("registry_package", Restricted, WRITE_ACCESS),
        ("deployment", Restricted, WRITE_ACCESS),
        ("deployment_status", Restricted, WRITE_ACCESS),
        ("page_build", Restricted, WRITE_ACCESS),
        (
            "public",
            Restricted,
            "visibility change by an administrator",
        ),
        (
            "label",
            Restricted,
            "label management requires triage access",
        ),
        (
            "milestone",
            Restricted,
            "milestone management requires triage access",
        ),
        ("project", Restricted, WRITE_ACCESS),
        ("project_card", Restricted, WRITE_ACCESS),
        ("project_column", Restricted, WRITE_ACCESS),
        (
            "branch_protection_rule",
            Restricted,
            "administrator setting change",
        ),
        (
            "merge_group",
            Restricted,
            "merge queue entry requires write access",
        ),
        (
            "check_run",
            Restricted,
            "created by integrations with checks permission",
        ),
        (
            "check_suite",
            Restricted,
            "created by integrations with checks permission",
        ),
        ("status", Restricted, "commit statuses require write access"),
        (
            "pull_request",
            Supervised,
            "fork pull requests run after maintainer approval",
        ),
        (
            "pull_request_review",
            Supervised,
            "runs in fork pull request context after approval",
        ),
        (
            "pull_request_review_comment",
            Supervised,
            "runs in fork pull request context after approval",
        ),
        (
            "workflow_run",
            Supervised,
            "inherits the supervision of the triggering workflow",
        ),
        (
            "gollum",
            Supervised,
            "wiki editing is gated by repository settings",
        ),
        ("issues", Unsupervised, OPEN),
        ("issue_comment", Unsupervised, OPEN),
        ("discussion", Unsupervised, OPEN),
        ("discussion_comment", Unsupervised, OPEN),
        ("fork", Unsupervised, OPEN),
        ("watch", Unsupervised, OPEN),
        (
            "pull_request_target",
            Unsupervised,
            "runs in base repository context without approval",
        ),
    ];
    let base = base_entries
        .iter()
        .map(|(name, level, why)| {
            (
                name.to_string(),
                TableEntry {
                    score: ExploitabilityScore::new(*level, *why),
                    overridden: false,
                },
            )
        })
        .collect();

    let triage = "activity is performed by a triager on attacker content";
    let maintainer = "activity is performed only by maintainers";
    let override_entries: &[(&str, &str, Level, &str)] = &[
        ("issues", "assigned", Supervised, triage),
        ("issues", "unassigned", Supervised, triage),
        ("issues", "labeled", Supervised, triage),
        ("issues", "unlabeled", Supervised, triage),
        ("issues", "milestoned", Supervised, triage),
        ("issues", "demilestoned", Supervised, triage),
        ("issues", "pinned", Restricted, maintainer),
        ("issues", "unpinned", Restricted, maintainer),
        ("issues", "locked", Restricted, maintainer),
        ("issues", "unlocked", Restricted, maintainer),
        ("issues", "transferred", Restricted, maintainer),
        ("pull_request_target", "labeled", Supervised, triage),
        ("pull_request_target", "unlabeled", Supervised, triage),
        ("pull_request_target", "assigned", Supervised, triage),
        ("pull_request_target", "unassigned", Supervised, triage),
        (
            "pull_request_target",
            "review_requested",
            Supervised,
            triage,
        ),
        (
            "pull_request_target",
            "closed",
            Supervised,
            "closing is usually a maintainer merge",
        ),
        ("discussion", "labeled", Supervised, triage),
        ("discussion", "unlabeled", Supervised, triage),
        ("discussion", "pinned", Restricted, maintainer),
        (
            "discussion",
            "answered",
            Supervised,
            "answers are marked by the author or a maintainer",
        ),
    ];
    let activity_overrides = override_entries
        .iter()
        .map(|(ev, act, level, why)| {
            (
                (ev.to_string(), act.to_string()),
                TableEntry {
                    score: ExploitabilityScore::new(*level, *why),
                    overridden: false,
                },
            )
        })
        .collect();

    EventScoreTable {
        base,
        activity_overrides,
        default_for_unknown: ExploitabilityScore::new(Supervised, "unknown event"),
    }
}

impl EventScoreTable {
    /// Base score for an event name, falling back to the unknown default.
    pub fn base_score(&self, event: &str) -> ExploitabilityScore {
        self.base
            .get(event)
            .map(|e| e.score.clone())
            .unwrap_or_else(|| self.default_for_unknown.clone())
    }

    /// Merges a YAML override file of `event: level` and
    /// `event/activity: level` entries over this table.
    pub fn merge_overrides(&mut self, yaml_text: &str) -> Result<(), ScoreTableError> {
        let root = match crate::yaml::load(yaml_text) {
            Ok(root) => root,
            // An empty or comment-only file overrides nothing.
            Err(crate::yaml::YamlError::Empty) => return Ok(()),
            Err(e) => return Err(ScoreTableError::Invalid(e.to_string())),
        };
        let entries = match &root.value {
            crate::yaml::Value::Map(m) => m,
            crate::yaml::Value::Null => return Ok(()),
            _ => return Err(ScoreTableError::Invalid("expected a mapping".into())),
        };
        for (k, v) in entries {
            let key = k
                .as_str()
                .ok_or_else(|| ScoreTableError::Invalid("non-scalar key".into()))?
                .trim()
                .to_ascii_lowercase();
            let level: u8 = v
                .as_str()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| ScoreTableError::Invalid(format!("`{key}`: expected 1, 2 or 3")))?;
            let level = Level::try_from(level).map_err(ScoreTableError::Invalid)?;
            let entry = TableEntry {
                score: ExploitabilityScore::new(level, "override"),
                overridden: true,
            };
            match key.split_once('/') {
                Some((ev, act)) if !ev.is_empty() && !act.is_empty() => {
                    self.activity_overrides
                        .insert((ev.to_string(), act.to_string()), entry);
                }
                Some(_) => return Err(ScoreTableError::Invalid(format!("bad key `{key}`"))),
                None if key.is_empty() => {
                    return Err(ScoreTableError::Invalid("empty event name".into()))
                }
                None => {
                    self.base.insert(key, entry);
                }
            }
        }
        Ok(())
    }

    pub fn load_with_overrides(path: Option<&Path>) -> Result<Self, ScoreTableError> {
        let mut table = default_score_table();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|source| ScoreTableError::Io {
                path: path.display().to_string(),
                source,
            })?;
            table.merge_overrides(&text)?;
        }
        Ok(table)
    }

    /// Human-readable dump with one entry per line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (name, entry) in &self.base {
            let tag = if entry.overridden { " (override)" } else { "" };
            out.push_str(&format!(
                "{name} {}{tag}  # {} - {}\n",
                entry.score.level.value(),
                entry.score.level.label(),
                entry.score.rationale
            ));
        }
        for ((ev, act), entry) in &self.activity_overrides {
            let tag = if entry.overridden { " (override)" } else { "" };
            out.push_str(&format!(
                "{ev}/{act} {}{tag}  # {} - {}\n",
                entry.score.level.value(),
                entry.score.level.label(),
                entry.score.rationale
            ));
        }
        out.push_str(&format!(
            "<unknown> {}  # {}\n",
            self.default_for_unknown.level.value(),
            self.default_for_unknown.rationale
        ));
        out
    }
}

/// Scores a trigger event against a table.
pub fn score_event(event: &TriggerEvent, table: &EventScoreTable) -> ExploitabilityScore {
    let base = table.base_score(&event.event_name);
    if event.activity_types.is_empty() {
        return base;
    }
    let mut best: Option<ExploitabilityScore> = None;
    for activity in &event.activity_types {
        let key = (event.event_name.clone(), activity.clone());
        let Some(entry) = table.activity_overrides.get(&key) else {
            // At least one declared type keeps the base score.
            return base;
        };
        let level = entry.score.level.min(base.level);
        if best.as_ref().is_none_or(|b| level > b.level) {
            best = Some(ExploitabilityScore::new(
                level,
                format!("{activity}: {}", entry.score.rationale),
            ));
        }
    }
    best.unwrap_or(base)
}

/// Every event name the default table knows about.
pub fn known_events() -> &'static [&'static str] {
    EVENTS
}

#[cfg(test)]
mod tests {
    use super::*;

    fn score(name: &str, types: &[&str]) -> Level {
        let mut ev = TriggerEvent::named(name);
        ev.activity_types = types.iter().map(|s| s.to_string()).collect();
        score_event(&ev, &default_score_table()).level
    }

    #[test]
    fn anchored_events() {
        assert_eq!(score("push", &[]), Level::Restricted);
        assert_eq!(score("pull_request", &[]), Level::Supervised);
        assert_eq!(score("issues", &[]), Level::Unsupervised);
        assert_eq!(score("workflow_dispatch", &[]), Level::Restricted);
    }

    #[test]
    fn empty_override_file_changes_nothing() {
        let mut table = default_score_table();
        table.merge_overrides("").unwrap();
        table.merge_overrides("# nothing here\n").unwrap();
        assert_eq!(table, default_score_table());
    }

    #[test]
    fn unknown_event_defaults_to_supervised() {
        let s = score_event(&TriggerEvent::named("made_up"), &default_score_table());
        assert_eq!(s.level, Level::Supervised);
        assert_eq!(s.rationale, "unknown event");
    }

    #[test]
    fn table_covers_every_documented_event() {
        let table = default_score_table();
        for ev in known_events() {
            assert!(table.base.contains_key(*ev), "missing {ev}");
        }
    }

    #[test]
    fn filters_only_lower() {
        assert_eq!(score("issues", &["assigned"]), Level::Supervised);
        assert_eq!(
            score("issues", &["assigned", "opened"]),
            Level::Unsupervised
        );
        assert_eq!(score("issues", &["pinned", "labeled"]), Level::Supervised);
        assert_eq!(score("pull_request", &["opened"]), Level::Supervised);
    }

    #[test]
    fn overrides_merge() {
        let mut t = default_score_table();
        t.merge_overrides("issues: 2\npush/anything: 1\n").unwrap();
        let dump = t.render();
        assert!(dump.contains("issues 2 (override)"));
        assert!(dump.contains("push 1  #"));
        assert!(dump.contains("pull_request 2  #"));
        assert!(t.merge_overrides("issues: 7\n").is_err());
        assert!(t.merge_overrides("- a\n").is_err());
        assert!(t.merge_overrides("issues: [1\n").is_err());
    }

    #[test]
    fn level_serde() {
        assert_eq!(serde_json::to_string(&Level::Unsupervised).unwrap(), "3");
        assert!(serde_json::from_str::<Level>("4").is_err());
    }
}
