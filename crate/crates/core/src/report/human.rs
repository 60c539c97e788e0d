use std::collections::BTreeMap;
use std::fmt::Write;

use super::ScanReport;
use crate::checks::{IssueCode, IssueKind};

const TOP_CODES: usize = 10;

/// Terminal summary of a report.
pub fn render_human(report: &ScanReport) -> String {
    let a = &report.aggregates;
    let mut out = String::new();
    let repos = per_repository(report);
    let _ = writeln!(
        out,
        "Scanned {} workflow(s) in {} repositor{}",
        a.workflows,
        repos.len(),
        if repos.len() == 1 { "y" } else { "ies" }
    );
    let _ = writeln!(
        out,
        "{} issues: {} vulnerabilit{}, {} misconfiguration{}",
        a.total_issues,
        a.vulnerabilities,
        if a.vulnerabilities == 1 { "y" } else { "ies" },
        a.misconfigurations,
        if a.misconfigurations == 1 { "" } else { "s" },
    );

    if !repos.is_empty() {
        let _ = writeln!(out, "\nPer repository:");
        let width = repos.keys().map(|k| k.len()).max().unwrap_or(0);
        for (repo, (v, m)) in &repos {
            let _ = writeln!(
                out,
                "  {repo:<width$}  {v} vulnerabilit{}, {m} misconfiguration{}",
                if *v == 1 { "y" } else { "ies" },
                if *m == 1 { "" } else { "s" },
            );
        }
    }

    if !a.by_code.is_empty() {
        let mut codes: Vec<(&String, &usize)> = a.by_code.iter().collect();
        codes.sort_by(|x, y| y.1.cmp(x.1).then(x.0.cmp(y.0)));
        let _ = writeln!(out, "\nTop issue codes:");
        for (code, n) in codes.into_iter().take(TOP_CODES) {
            let kind = match code.parse::<IssueCode>().map(|c| c.kind()) {
                Ok(IssueKind::Vulnerability) => "vulnerability",
                _ => "misconfiguration",
            };
            let _ = writeln!(out, "  {code:<28} {n:>6}  {kind}");
        }
    }

    if a.workflows > 0 {
        let p = &a.permission_distribution;
        let _ = writeln!(out, "\nToken permissions:");
        let _ = writeln!(
            out,
            "  no declaration (default)   {:5.1}%",
            p.perm_default_pct
        );
        let _ = writeln!(
            out,
            "  workflow level only        {:5.1}%",
            p.perm_global_pct
        );
        let _ = writeln!(
            out,
            "  declared on every job      {:5.1}%",
            p.perm_per_job_pct
        );
    }

    if a.indeterminate > 0 {
        let _ = writeln!(
            out,
            "\n{} version check(s) could not be decided (version data unavailable)",
            a.indeterminate
        );
    }
    if !report.errors.is_empty() {
        let _ = writeln!(out, "\nErrors:");
        for e in &report.errors {
            let _ = writeln!(out, "  {}: {}", e.target, e.message);
        }
    }
    out
}

/// Vulnerability and misconfiguration counts keyed by `<owner>/<repo>`.
fn per_repository(report: &ScanReport) -> BTreeMap<&str, (usize, usize)> {
    let mut out: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for (key, entry) in &report.workflows {
        let repo = key.split_once(':').map(|(r, _)| r).unwrap_or(key);
        let counts = out.entry(repo).or_default();
        for t in &entry.issues {
            match t.issue().kind() {
                IssueKind::Vulnerability => counts.0 += 1,
                IssueKind::Misconfiguration => counts.1 += 1,
            }
        }
    }
    out
}
