//! Scan report: per-workflow issue tuples, aggregates and exit status.
//!
//! Each issue is emitted as a 7-element array
//! `[issue, event, job, step, position, "line <n>: <text>", score]`, with
//! kind and conditionality carried in a parallel `issue_details` list so the
//! tuple keeps its fixed shape.

mod human;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use human::render_human;

use crate::checks::{
    CheckOutcome, Conditionality, Finding, Indeterminate, IssueCode, IssueKind, PermissionPosture,
};
use crate::graph::{DiscoveredVia, SscGraph, UnresolvedPackage};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueTuple(
    pub IssueCode,
    pub String,
    pub String,
    pub String,
    pub usize,
    pub String,
    pub u8,
);

impl IssueTuple {
    pub fn issue(&self) -> &IssueCode {
        &self.0
    }

    pub fn event(&self) -> &str {
        &self.1
    }

    pub fn score(&self) -> u8 {
        self.6
    }
}

pub fn to_tuple(finding: &Finding) -> IssueTuple {
    IssueTuple(
        finding.issue.clone(),
        finding.triggering_event.clone(),
        finding.job_name.clone(),
        finding.step_name.clone(),
        finding.step_position,
        format!(
            "line {}: {}",
            finding.issue_line.number, finding.issue_line.text
        ),
        finding.exploitability.level.value(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueDetail {
    pub kind: IssueKind,
    pub conditionality: Conditionality,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkflowEntry {
    pub events: Vec<(String, u8)>,
    pub permissions: PermissionPosture,
    pub issues: Vec<IssueTuple>,
    pub issue_details: Vec<IssueDetail>,
    pub indeterminate: Vec<Indeterminate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanError {
    pub target: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindCounts {
    pub vulnerabilities: usize,
    pub misconfigurations: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PermissionDistribution {
    pub perm_default_pct: f64,
    pub perm_global_pct: f64,
    pub perm_per_job_pct: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub workflows: usize,
    pub total_issues: usize,
    pub vulnerabilities: usize,
    pub misconfigurations: usize,
    pub indeterminate: usize,
    pub by_code: BTreeMap<String, usize>,
    pub by_score: BTreeMap<u8, KindCounts>,
    pub permission_distribution: PermissionDistribution,
}

fn pct(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        (part as f64 * 10_000.0 / whole as f64).round() / 100.0
    }
}

impl AggregateStats {
    pub fn compute(workflows: &BTreeMap<String, WorkflowEntry>) -> Self {
        let mut stats = AggregateStats {
            workflows: workflows.len(),
            ..AggregateStats::default()
        };
        let mut postures = [0usize; 3];
        for entry in workflows.values() {
            postures[match entry.permissions {
                PermissionPosture::Default => 0,
                PermissionPosture::Global => 1,
                PermissionPosture::PerJob => 2,
            }] += 1;
            stats.indeterminate += entry.indeterminate.len();
            for tuple in &entry.issues {
                stats.total_issues += 1;
                *stats.by_code.entry(tuple.issue().to_string()).or_default() += 1;
                let by_score = stats.by_score.entry(tuple.score()).or_default();
                match tuple.issue().kind() {
                    IssueKind::Vulnerability => {
                        stats.vulnerabilities += 1;
                        by_score.vulnerabilities += 1;
                    }
                    IssueKind::Misconfiguration => {
                        stats.misconfigurations += 1;
                        by_score.misconfigurations += 1;
                    }
                }
            }
        }
        stats.permission_distribution = PermissionDistribution {
            perm_default_pct: pct(postures[0], stats.workflows),
            perm_global_pct: pct(postures[1], stats.workflows),
            perm_per_job_pct: pct(postures[2], stats.workflows),
        };
        stats
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepositoryEntry {
    pub repository: String,
    pub discovered_via: DiscoveredVia,
    pub depth: usize,
    pub workflows: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub root: String,
    pub repositories: Vec<RepositoryEntry>,
    pub edges: Vec<(String, String)>,
    pub unresolved_packages: Vec<UnresolvedPackage>,
    pub partial: bool,
    pub warnings: Vec<String>,
}

impl GraphSummary {
    pub fn from_graph(graph: &SscGraph) -> Self {
        GraphSummary {
            root: graph.root_node().identity.to_string(),
            repositories: graph
                .nodes
                .values()
                .map(|n| RepositoryEntry {
                    repository: n.identity.to_string(),
                    discovered_via: n.discovered_via.clone(),
                    depth: n.depth,
                    workflows: n.workflow_refs.len(),
                })
                .collect(),
            edges: graph
                .edges
                .iter()
                .map(|(a, b)| {
                    (
                        graph.nodes[a].identity.to_string(),
                        graph.nodes[b].identity.to_string(),
                    )
                })
                .collect(),
            unresolved_packages: graph.unresolved.clone(),
            partial: graph.partial,
            warnings: graph.warnings.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub tool_version: String,
    pub scan_timestamp: Option<String>,
    pub inputs_digest: String,
    pub graph: Option<GraphSummary>,
    pub workflows: BTreeMap<String, WorkflowEntry>,
    pub errors: Vec<ScanError>,
    pub aggregates: AggregateStats,
}

/// One workflow file after checking.
#[derive(Debug, Clone)]
pub struct ScannedWorkflow {
    /// `<owner>/<repo>:<path>`.
    pub key: String,
    pub source: String,
    pub result: Result<CheckedWorkflow, String>,
}

#[derive(Debug, Clone)]
pub struct CheckedWorkflow {
    pub events: Vec<(String, u8)>,
    pub permissions: PermissionPosture,
    pub outcome: CheckOutcome,
}

pub fn workflow_key(owner_repo: &str, path: &str) -> String {
    format!("{owner_repo}:{path}")
}

/// Folds scan results into a report. Unparseable workflows and `errors`
/// end up in the report's error list; everything else is keyed by workflow.
pub fn assemble_report(
    graph: Option<&SscGraph>,
    scanned: Vec<ScannedWorkflow>,
    mut errors: Vec<ScanError>,
    scan_timestamp: Option<String>,
) -> ScanReport {
    let mut hasher = Sha256::new();
    let mut sorted = scanned;
    sorted.sort_by(|a, b| a.key.cmp(&b.key));
    let mut workflows = BTreeMap::new();
    for wf in sorted {
        hasher.update((wf.key.len() as u64).to_le_bytes());
        hasher.update(wf.key.as_bytes());
        hasher.update((wf.source.len() as u64).to_le_bytes());
        hasher.update(wf.source.as_bytes());
        match wf.result {
            Ok(checked) => {
                let mut events: Vec<(String, u8)> = Vec::new();
                for ev in checked.events {
                    if !events.iter().any(|(n, _)| *n == ev.0) {
                        events.push(ev);
                    }
                }
                let findings = &checked.outcome.findings;
                workflows.insert(
                    wf.key,
                    WorkflowEntry {
                        events,
                        permissions: checked.permissions,
                        issues: findings.iter().map(to_tuple).collect(),
                        issue_details: findings
                            .iter()
                            .map(|f| IssueDetail {
                                kind: f.kind(),
                                conditionality: f.conditionality,
                            })
                            .collect(),
                        indeterminate: checked.outcome.indeterminate,
                    },
                );
            }
            Err(message) => errors.push(ScanError {
                target: wf.key,
                message,
            }),
        }
    }
    errors.sort_by(|a, b| (&a.target, &a.message).cmp(&(&b.target, &b.message)));
    let aggregates = AggregateStats::compute(&workflows);
    ScanReport {
        tool_version: TOOL_VERSION.to_string(),
        scan_timestamp,
        inputs_digest: format!("sha256:{}", hex::encode(hasher.finalize())),
        graph: graph.map(GraphSummary::from_graph),
        workflows,
        errors,
        aggregates,
    }
}

impl ScanReport {
    /// Pretty JSON with a trailing newline; key order is fixed by the types.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// 0 without findings, 1 with misconfigurations only, 2 with any
    /// vulnerability.
    pub fn exit_code(&self) -> i32 {
        if self.aggregates.vulnerabilities > 0 {
            2
        } else if self.aggregates.misconfigurations > 0 {
            1
        } else {
            0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checks::{IssueLine, OfflineResolver};
    use crate::exploitability::{default_score_table, ExploitabilityScore, Level};

    fn finding(code: &str, event: &str, level: Level) -> Finding {
        Finding {
            issue: code.parse().unwrap(),
            triggering_event: event.into(),
            job_name: "build".into(),
            step_name: "Greet".into(),
            step_position: 2,
            issue_line: IssueLine {
                number: 9,
                text: "        run: echo hi".into(),
            },
            exploitability: ExploitabilityScore {
                level,
                rationale: String::new(),
            },
            conditionality: Conditionality::Unconditional,
        }
    }

    fn checked(
        findings: Vec<Finding>,
        posture: PermissionPosture,
    ) -> Result<CheckedWorkflow, String> {
        let mut events: Vec<(String, u8)> = Vec::new();
        for f in &findings {
            events.push((f.triggering_event.clone(), f.exploitability.level.value()));
        }
        Ok(CheckedWorkflow {
            events,
            permissions: posture,
            outcome: CheckOutcome {
                findings,
                indeterminate: Vec::new(),
            },
        })
    }

    fn sample() -> ScanReport {
        let scanned = vec![
            ScannedWorkflow {
                key: "o/r:.github/workflows/b.yml".into(),
                source: "b".into(),
                result: checked(
                    vec![
                        finding("CI_ACTOR", "issues", Level::Unsupervised),
                        finding("CI_ACTOR", "push", Level::Restricted),
                        finding("MISCONF_PERM_GLOBAL", "issues", Level::Unsupervised),
                    ],
                    PermissionPosture::Global,
                ),
            },
            ScannedWorkflow {
                key: "o/r:.github/workflows/a.yml".into(),
                source: "a".into(),
                result: checked(vec![], PermissionPosture::PerJob),
            },
            ScannedWorkflow {
                key: "o/r:.github/workflows/bad.yml".into(),
                source: "::".into(),
                result: Err("malformed YAML".into()),
            },
        ];
        assemble_report(None, scanned, Vec::new(), None)
    }

    #[test]
    fn tuple_shape() {
        let t = to_tuple(&finding("CI_ISSUE_TITLE", "issues", Level::Unsupervised));
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(
            json,
            r#"["CI_ISSUE_TITLE","issues","build","Greet",2,"line 9:         run: echo hi",3]"#
        );
    }

    #[test]
    fn aggregates_and_exit_code() {
        let r = sample();
        assert_eq!(r.workflows.len(), 2);
        assert_eq!(r.errors.len(), 1);
        let a = &r.aggregates;
        assert_eq!(
            (a.total_issues, a.vulnerabilities, a.misconfigurations),
            (3, 2, 1)
        );
        assert_eq!(a.by_code["CI_ACTOR"], 2);
        assert_eq!(
            a.by_score[&3],
            KindCounts {
                vulnerabilities: 1,
                misconfigurations: 1
            }
        );
        assert_eq!(a.permission_distribution.perm_global_pct, 50.0);
        assert_eq!(a.permission_distribution.perm_per_job_pct, 50.0);
        assert_eq!(r.exit_code(), 2);
        assert_eq!(AggregateStats::compute(&r.workflows), *a);
    }

    #[test]
    fn json_round_trip_is_byte_identical() {
        let r = sample();
        let once = r.to_json();
        let again = ScanReport::from_json(&once).unwrap().to_json();
        assert_eq!(once, again);
        assert!(!once.contains("scan_timestamp\": \""));
    }

    #[test]
    fn digest_ignores_input_order() {
        let wf = |k: &str, s: &str| ScannedWorkflow {
            key: k.into(),
            source: s.into(),
            result: Err("x".into()),
        };
        let digest = |v| assemble_report(None, v, vec![], None).inputs_digest;
        let d1 = digest(vec![wf("a", "1"), wf("b", "2")]);
        assert_eq!(d1, digest(vec![wf("b", "2"), wf("a", "1")]));
        assert_ne!(d1, digest(vec![wf("a", "1"), wf("b", "3")]));
        // Length prefixes keep key/source boundaries unambiguous.
        assert_ne!(digest(vec![wf("ab", "")]), digest(vec![wf("a", "b")]));
    }

    #[test]
    fn empty_report() {
        let r = assemble_report(None, vec![], vec![], None);
        assert_eq!(r.aggregates.total_issues, 0);
        assert_eq!(r.exit_code(), 0);
        assert!(render_human(&r).contains("0 issues"));
    }

    #[test]
    fn real_workflow_end_to_end() {
        let src =
            "on: [issues, push]\njobs:\n  a:\n    steps:\n      - run: echo ${{ github.actor }}\n";
        let m = crate::workflow::parse_workflow(src, std::path::Path::new("w.yml")).unwrap();
        let table = default_score_table();
        let outcome =
            crate::checks::run_all_checks(&m, &Default::default(), &OfflineResolver, &table);
        let events = m
            .triggers
            .iter()
            .map(|t| {
                (
                    t.event_name.clone(),
                    crate::exploitability::score_event(t, &table).level.value(),
                )
            })
            .collect();
        let r = assemble_report(
            None,
            vec![ScannedWorkflow {
                key: "local/x:w.yml".into(),
                source: src.into(),
                result: Ok(CheckedWorkflow {
                    events,
                    permissions: crate::checks::permission_posture(&m),
                    outcome,
                }),
            }],
            vec![],
            None,
        );
        let entry = &r.workflows["local/x:w.yml"];
        assert_eq!(
            entry.events,
            [("issues".to_string(), 3), ("push".to_string(), 1)]
        );
        // CI_ACTOR and MISCONF_PERM_DEFAULT, each once per event.
        assert_eq!(entry.issues.len(), 4);
        for t in &entry.issues {
            let listed = entry.events.iter().find(|(n, _)| n == t.event()).unwrap();
            assert_eq!(listed.1, t.score());
        }
    }
}
