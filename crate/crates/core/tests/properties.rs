use std::path::Path;

use proptest::prelude::*;

use wfaudit::checks::{IssueKind, OfflineResolver};
use wfaudit::report::{assemble_report, ScanReport, ScannedWorkflow};
use wfaudit::scan::Analyzer;
use wfaudit::workflow::{extract_expressions, parse_workflow, ParseError};

fn parse(src: &str) -> Result<wfaudit::workflow::WorkflowModel, ParseError> {
    parse_workflow(src, Path::new("wf.yml"))
}

const JOBS: &str = "jobs:\n  a:\n    runs-on: x\n    steps:\n      - run: make\n";

fn event_name() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec![
        "push",
        "pull_request",
        "issues",
        "issue_comment",
        "workflow_dispatch",
        "release",
    ])
}

proptest! {
    #[test]
    fn trigger_forms_are_equivalent(events in prop::sample::subsequence(
        vec!["push", "pull_request", "issues", "issue_comment", "workflow_dispatch", "release"], 1..4)) {
        let scalar_or_list = if events.len() == 1 {
            format!("on: {}\n", events[0])
        } else {
            format!("on: [{}]\n", events.join(", "))
        };
        let list = format!("on: [{}]\n", events.join(", "));
        let flow_map = format!("on: {{{}}}\n", events.iter().map(|e| format!("{e}: {{}}")).collect::<Vec<_>>().join(", "));
        let block_map: String = std::iter::once("on:\n".to_string())
            .chain(events.iter().map(|e| format!("  {e}:\n")))
            .collect();
        let forms: Vec<_> = [scalar_or_list, list, flow_map, block_map]
            .iter()
            .map(|on| parse(&format!("{on}{JOBS}")).unwrap().triggers)
            .collect();
        for f in &forms[1..] {
            prop_assert_eq!(f, &forms[0]);
        }
        let names: Vec<&str> = forms[0].iter().map(|t| t.event_name.as_str()).collect();
        prop_assert_eq!(names, events);
    }

    #[test]
    fn step_indexes_follow_order(jobs in prop::collection::vec(1usize..6, 1..4)) {
        let mut src = String::from("on: push\njobs:\n");
        for (j, n) in jobs.iter().enumerate() {
            src.push_str(&format!("  j{j}:\n    runs-on: x\n    steps:\n"));
            for s in 0..*n {
                src.push_str(&format!("      - name: s{s}\n        run: echo {s}\n"));
            }
        }
        let model = parse(&src).unwrap();
        let all: Vec<_> = model.jobs.iter().flat_map(|j| j.steps.iter().map(move |s| (j.job_id.clone(), s))).collect();
        let mut expected = Vec::new();
        for (j, n) in jobs.iter().enumerate() {
            expected.extend((1..=*n).map(|i| (format!("j{j}"), i)));
        }
        let got: Vec<(String, usize)> = all.iter().map(|(j, s)| (j.clone(), s.index)).collect();
        prop_assert_eq!(got, expected);
        for (_, s) in &all {
            let want = format!("name: s{}", s.index - 1);
            prop_assert!(model.line_text(s.line).contains(&want), "step line of {}", want);
        }
    }

    #[test]
    fn expression_locations_round_trip(
        paths in prop::collection::vec(prop::sample::select(vec![
            "github.actor", "github.event.issue.title", "secrets.TOKEN", "env.X", "github.event.commits[0].message",
        ]), 1..5),
        block in any::<bool>(),
    ) {
        let mut src = String::from("on: push\njobs:\n  a:\n    runs-on: x\n    steps:\n");
        for (i, p) in paths.iter().enumerate() {
            if block {
                src.push_str(&format!("      - run: |\n          echo one\n          echo ${{{{ {p} }}}} {i}\n"));
            } else {
                src.push_str(&format!("      - env:\n          V: pre-${{{{ {p} }}}}\n        run: echo {i}\n"));
            }
        }
        let model = parse(&src).unwrap();
        let occurrences = extract_expressions(&model);
        prop_assert_eq!(occurrences.len(), paths.len());
        for o in &occurrences {
            prop_assert!(model.line_text(o.line).contains(&o.raw), "line {} lacks {}", o.line, o.raw);
            prop_assert_eq!(&src[o.offset..o.offset + o.raw.len()], o.raw.as_str());
            prop_assert_eq!(o.composed, !block);
        }
    }

    #[test]
    fn parsing_is_total(text in "[ -~\n]{0,200}") {
        // Any outcome is fine as long as it is a model or a declared error.
        let _ = parse(&text);
    }

    #[test]
    fn checking_is_idempotent_and_reports_round_trip(
        events in prop::collection::vec(event_name(), 1..3),
        perms in any::<bool>(),
        actor in any::<bool>(),
    ) {
        let mut src = format!("on: [{}]\njobs:\n  a:\n    runs-on: x\n", events.join(", "));
        if perms {
            src.push_str("    permissions:\n      contents: read\n");
        }
        src.push_str("    steps:\n      - uses: org/act@v1\n");
        if actor {
            src.push_str("      - run: echo ${{ github.actor }}\n");
        }
        let analyzer = Analyzer::default();
        let first = analyzer.check(&src, Path::new("wf.yml"), &OfflineResolver).unwrap();
        let second = analyzer.check(&src, Path::new("wf.yml"), &OfflineResolver).unwrap();
        prop_assert_eq!(&first.outcome, &second.outcome);

        let scanned = vec![ScannedWorkflow { key: "o/r:wf.yml".into(), source: src.clone(), result: Ok(first) }];
        let report = assemble_report(None, scanned, Vec::new(), None);
        let json = report.to_json();
        let back = ScanReport::from_json(&json).unwrap();
        prop_assert_eq!(back.to_json(), json);

        // Aggregates agree with the per-workflow lists.
        let a = &report.aggregates;
        let issues: Vec<_> = report.workflows.values().flat_map(|w| w.issues.iter()).collect();
        prop_assert_eq!(a.total_issues, issues.len());
        prop_assert_eq!(a.vulnerabilities + a.misconfigurations, a.total_issues);
        prop_assert_eq!(a.by_code.values().sum::<usize>(), a.total_issues);
        let by_score: usize = a.by_score.values().map(|k| k.vulnerabilities + k.misconfigurations).sum();
        prop_assert_eq!(by_score, a.total_issues);
        let vulns = issues.iter().filter(|t| t.issue().kind() == IssueKind::Vulnerability).count();
        prop_assert_eq!(vulns, a.vulnerabilities);
        let p = &a.permission_distribution;
        prop_assert!((p.perm_default_pct + p.perm_global_pct + p.perm_per_job_pct - 100.0).abs() < 0.02);
    }
}

#[test]
fn declared_parse_errors() {
    assert!(matches!(
        parse("on: push\njobs: {}\n"),
        Err(ParseError::EmptyJobs)
    ));
    assert!(matches!(
        parse("jobs:\n  a:\n    steps:\n      - run: x\n"),
        Err(ParseError::NotAWorkflow(_))
    ));
    assert!(matches!(
        parse("on: [push\n"),
        Err(ParseError::MalformedYaml(_))
    ));
    // A YAML 1.1 emitter writes the `on` key as boolean true.
    let model = parse("true: push\njobs:\n  a:\n    steps:\n      - run: x\n").unwrap();
    assert_eq!(model.triggers[0].event_name, "push");
}
