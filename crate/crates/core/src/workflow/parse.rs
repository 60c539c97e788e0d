use std::path::Path;

use super::vocabulary::activity_types;
use super::{
    ActionRef, JobModel, ParseError, PermissionDecl, StepModel, Text, TriggerEvent, WorkflowModel,
};
use crate::yaml::{self, Node, Value, YamlError};

/// Parses workflow YAML into a [`WorkflowModel`].
///
/// The `on:` clause is accepted as a scalar, a list, or a mapping, and a
/// `true` key is read as `on` for files that went through a YAML 1.1 tool.
pub fn parse_workflow(source: &str, source_path: &Path) -> Result<WorkflowModel, ParseError> {
    let root = yaml::load(source).map_err(|e| match e {
        YamlError::Malformed(msg) => ParseError::MalformedYaml(msg),
        YamlError::MultiDocument(n) => {
            ParseError::NotAWorkflow(format!("{n} YAML documents in one file"))
        }
        YamlError::Empty => ParseError::NotAWorkflow("empty file".into()),
    })?;
    let entries = root
        .as_map()
        .ok_or_else(|| ParseError::NotAWorkflow("top level is not a mapping".into()))?;

    let on = root
        .get("on")
        .or_else(|| root.get("true"))
        .ok_or_else(|| ParseError::NotAWorkflow("missing `on` key".into()))?;
    let jobs_node = root
        .get("jobs")
        .ok_or_else(|| ParseError::NotAWorkflow("missing `jobs` key".into()))?;

    let triggers = parse_triggers(on)?;
    if triggers.is_empty() {
        return Err(ParseError::NotAWorkflow("`on` declares no events".into()));
    }

    let jobs = match &jobs_node.value {
        Value::Map(entries) if entries.is_empty() => return Err(ParseError::EmptyJobs),
        Value::Null => return Err(ParseError::EmptyJobs),
        Value::Map(entries) => entries
            .iter()
            .map(|(k, v)| parse_job(k, v))
            .collect::<Result<Vec<_>, _>>()?,
        _ => return Err(ParseError::NotAWorkflow("`jobs` is not a mapping".into())),
    };

    let mut model = WorkflowModel {
        name: None,
        source_path: source_path.to_path_buf(),
        triggers,
        permissions: None,
        permissions_line: None,
        env: Vec::new(),
        jobs,
        source: source.to_string(),
        raw_lines: source.lines().map(str::to_string).collect(),
        other: Vec::new(),
    };

    for (key, value) in entries {
        match key.as_str().unwrap_or("") {
            "jobs" => {}
            "name" => {
                model.name = value.as_str().map(str::to_string);
                collect_other(value, &mut model.other);
            }
            "permissions" => {
                model.permissions = Some(PermissionDecl::from_node(value));
                model.permissions_line = Some(key.line);
                collect_other(value, &mut model.other);
            }
            "env" => model.env = text_map(value),
            _ => collect_other(value, &mut model.other),
        }
    }
    Ok(model)
}

fn parse_triggers(on: &Node) -> Result<Vec<TriggerEvent>, ParseError> {
    let mut out: Vec<TriggerEvent> = Vec::new();
    let mut push = |ev: TriggerEvent| {
        if !ev.event_name.is_empty() && !out.iter().any(|t| t.event_name == ev.event_name) {
            out.push(ev);
        }
    };
    match &on.value {
        Value::Scalar(name) => push(TriggerEvent::named(name.trim())),
        Value::Seq(items) => {
            for item in items {
                let name = item.as_str().ok_or_else(|| {
                    ParseError::NotAWorkflow("non-scalar event in `on` list".into())
                })?;
                push(TriggerEvent::named(name.trim()));
            }
        }
        Value::Map(entries) => {
            for (k, v) in entries {
                let name = k
                    .as_str()
                    .ok_or_else(|| ParseError::NotAWorkflow("non-scalar event name".into()))?;
                push(parse_event_config(name.trim(), v));
            }
        }
        Value::Null => {}
    }
    Ok(out)
}

fn parse_event_config(name: &str, config: &Node) -> TriggerEvent {
    let mut ev = TriggerEvent::named(name);
    let Some(entries) = config.as_map() else {
        // `schedule` is a list of `cron:` mappings.
        if let Some(items) = config.as_seq() {
            for item in items {
                if let Some(map) = item.as_map() {
                    for (k, v) in map {
                        if let Some(key) = k.as_str() {
                            ev.filters
                                .entry(key.to_string())
                                .or_default()
                                .extend(scalar_list(v));
                        }
                    }
                }
            }
        }
        return ev;
    };
    for (k, v) in entries {
        let Some(key) = k.as_str() else { continue };
        if key == "types" {
            ev.activity_types = scalar_list(v);
        } else {
            let values = match &v.value {
                // `inputs:` / `secrets:` / `outputs:` mappings: keep declared names.
                Value::Map(m) => m
                    .iter()
                    .filter_map(|(k, _)| k.as_str().map(str::to_string))
                    .collect(),
                _ => scalar_list(v),
            };
            ev.filters.insert(key.to_string(), values);
        }
    }
    if let Some(vocab) = activity_types(&ev.event_name) {
        ev.unknown_activity_types = ev
            .activity_types
            .iter()
            .filter(|t| !vocab.contains(&t.as_str()))
            .cloned()
            .collect();
    } else {
        ev.unknown_activity_types = ev.activity_types.clone();
    }
    ev
}

fn scalar_list(node: &Node) -> Vec<String> {
    match &node.value {
        Value::Scalar(s) => vec![s.clone()],
        Value::Seq(items) => items
            .iter()
            .filter_map(|n| n.as_str().map(str::to_string))
            .collect(),
        _ => Vec::new(),
    }
}

fn text(node: &Node) -> Option<Text> {
    node.as_str().map(|s| Text {
        value: s.to_string(),
        line: node.line,
        start: node.start,
        end: node.end,
    })
}

/// `name: value` pairs of a mapping whose values are scalars.
fn text_map(node: &Node) -> Vec<(String, Text)> {
    node.as_map()
        .map(|entries| {
            entries
                .iter()
                .filter_map(|(k, v)| Some((k.as_str()?.to_string(), text(v)?)))
                .collect()
        })
        .unwrap_or_default()
}

fn collect_other(node: &Node, out: &mut Vec<Text>) {
    node.for_each_scalar(&mut |n, _| out.extend(text(n)));
}

fn parse_job(key: &Node, node: &Node) -> Result<JobModel, ParseError> {
    let job_id = key
        .as_str()
        .ok_or_else(|| ParseError::NotAWorkflow("non-scalar job id".into()))?
        .to_string();
    let entries = node
        .as_map()
        .ok_or_else(|| ParseError::NotAWorkflow(format!("job `{job_id}` is not a mapping")))?;
    let mut job = JobModel {
        job_id: job_id.clone(),
        display_name: None,
        permissions: None,
        env: Vec::new(),
        steps: Vec::new(),
        reusable_workflow: None,
        reusable_text: None,
        with_inputs: Vec::new(),
        conditional: None,
        line: key.line,
        other: Vec::new(),
    };
    for (k, v) in entries {
        match k.as_str().unwrap_or("") {
            "name" => {
                job.display_name = v.as_str().map(str::to_string);
                collect_other(v, &mut job.other);
            }
            "permissions" => {
                job.permissions = Some(PermissionDecl::from_node(v));
                collect_other(v, &mut job.other);
            }
            "env" => job.env = text_map(v),
            "if" => job.conditional = text(v),
            "uses" => {
                job.reusable_workflow = v.as_str().map(ActionRef::parse);
                job.reusable_text = text(v);
            }
            "with" => job.with_inputs.extend(text_map(v)),
            "secrets" => match v.as_str() {
                // `secrets: inherit`
                Some(_) => collect_other(v, &mut job.other),
                None => job.with_inputs.extend(text_map(v)),
            },
            "steps" => {
                let items = v.as_seq().unwrap_or(&[]);
                job.steps = items
                    .iter()
                    .enumerate()
                    .map(|(i, s)| parse_step(&job_id, i + 1, s))
                    .collect::<Result<_, _>>()?;
            }
            _ => collect_other(v, &mut job.other),
        }
    }
    match (job.steps.is_empty(), job.reusable_workflow.is_some()) {
        (false, false) | (true, true) => Ok(job),
        (true, false) => Err(ParseError::NotAWorkflow(format!(
            "job `{job_id}` has neither steps nor `uses`"
        ))),
        (false, true) => Err(ParseError::NotAWorkflow(format!(
            "job `{job_id}` has both steps and `uses`"
        ))),
    }
}

fn parse_step(job_id: &str, index: usize, node: &Node) -> Result<StepModel, ParseError> {
    let entries = node.as_map().ok_or_else(|| {
        ParseError::NotAWorkflow(format!("step {index} of job `{job_id}` is not a mapping"))
    })?;
    let line = entries.first().map(|(k, _)| k.line).unwrap_or(node.line);
    let mut step = StepModel {
        index,
        display_name: None,
        run_script: None,
        uses: None,
        uses_text: None,
        env: Vec::new(),
        with_inputs: Vec::new(),
        conditional: None,
        line,
        other: Vec::new(),
    };
    for (k, v) in entries {
        match k.as_str().unwrap_or("") {
            "name" => {
                step.display_name = v.as_str().map(str::to_string);
                collect_other(v, &mut step.other);
            }
            "run" => step.run_script = text(v),
            "uses" => {
                step.uses = v.as_str().map(ActionRef::parse);
                step.uses_text = text(v);
            }
            "env" => step.env = text_map(v),
            "with" => step.with_inputs = text_map(v),
            "if" => step.conditional = text(v),
            _ => collect_other(v, &mut step.other),
        }
    }
    if step.run_script.is_some() && step.uses.is_some() {
        return Err(ParseError::NotAWorkflow(format!(
            "step {index} of job `{job_id}` has both `run` and `uses`"
        )));
    }
    Ok(step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn parse(src: &str) -> Result<WorkflowModel, ParseError> {
        parse_workflow(src, &PathBuf::from("wf.yml"))
    }

    const LISTING_FOUR: &str = r#"name: Pull Request Validation
on:
  pull_request:
    types: [opened, synchronize, reopened, edited]
jobs:
  validate:
    name: -------------
    runs-on: ubuntu-latest
    steps:
    - name: checkout
      uses: actions/checkout@v2
      with:
        ref: ${{github.event.pull_request.head.sha}}
        fetch-depth: 0
    - name: check commit count
      run: |
        cat << EOF | egrep -qsi '^disable-check:.*\<commit-count\>'
        ${{github.event.pull_request.body}}
        EOF
"#;

    #[test]
    fn pull_request_listing() {
        let m = parse(LISTING_FOUR).unwrap();
        assert_eq!(m.triggers.len(), 1);
        assert_eq!(m.triggers[0].event_name, "pull_request");
        assert_eq!(
            m.triggers[0].activity_types,
            vec!["opened", "synchronize", "reopened", "edited"]
        );
        assert!(m.triggers[0].unknown_activity_types.is_empty());
        assert_eq!(m.jobs.len(), 1);
        let steps = &m.jobs[0].steps;
        assert_eq!(
            steps.iter().map(|s| s.index).collect::<Vec<_>>(),
            vec![1, 2]
        );
        assert_eq!(steps[0].line, 10);
        assert_eq!(steps[1].line, 15);
        assert_eq!(
            steps[0].uses_text.as_ref().unwrap().value,
            "actions/checkout@v2"
        );
    }

    #[test]
    fn minimal_workflow() {
        let m = parse("on: push\njobs:\n  a:\n    runs-on: x\n    steps:\n      - run: echo hi\n")
            .unwrap();
        assert_eq!(m.triggers, vec![TriggerEvent::named("push")]);
        assert_eq!(m.jobs[0].steps.len(), 1);
        assert_eq!(
            m.jobs[0].steps[0].run_script.as_ref().unwrap().value,
            "echo hi"
        );
    }

    #[test]
    fn empty_jobs() {
        assert_eq!(parse("on: push\njobs: {}\n"), Err(ParseError::EmptyJobs));
    }

    #[test]
    fn missing_keys() {
        assert!(matches!(
            parse("jobs:\n  a:\n    steps: [{run: x}]\n"),
            Err(ParseError::NotAWorkflow(_))
        ));
        assert!(matches!(
            parse("on: push\n"),
            Err(ParseError::NotAWorkflow(_))
        ));
        assert!(matches!(
            parse("- a\n- b\n"),
            Err(ParseError::NotAWorkflow(_))
        ));
    }

    #[test]
    fn malformed() {
        assert!(matches!(
            parse("on: [push\njobs: {"),
            Err(ParseError::MalformedYaml(_))
        ));
    }

    #[test]
    fn multi_document_rejected() {
        let src = "on: push\njobs:\n  a:\n    steps: [{run: x}]\n---\nfoo: 1\n";
        assert!(matches!(parse(src), Err(ParseError::NotAWorkflow(_))));
    }

    #[test]
    fn trigger_forms_agree() {
        let body = "jobs:\n  a:\n    steps: [{run: x}]\n";
        let a = parse(&format!("on: push\n{body}")).unwrap().triggers;
        let b = parse(&format!("on: [push]\n{body}")).unwrap().triggers;
        let c = parse(&format!("on: {{push: {{}}}}\n{body}"))
            .unwrap()
            .triggers;
        let d = parse(&format!("on:\n  push:\n{body}")).unwrap().triggers;
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_eq!(a, d);
    }

    #[test]
    fn yaml11_true_key() {
        let m = parse("true: [issues]\njobs:\n  a:\n    steps: [{run: x}]\n").unwrap();
        assert_eq!(m.triggers[0].event_name, "issues");
    }

    #[test]
    fn filters_and_unknown_types() {
        let src = "on:\n  push:\n    branches: [main]\n    paths-ignore: ['docs/**']\n  issues:\n    types: [opened, frobnicated]\n  schedule:\n    - cron: '0 0 * * *'\njobs:\n  a:\n    steps: [{run: x}]\n";
        let m = parse(src).unwrap();
        assert_eq!(m.triggers[0].filters["branches"], vec!["main"]);
        assert_eq!(m.triggers[1].unknown_activity_types, vec!["frobnicated"]);
        assert_eq!(m.triggers[2].filters["cron"], vec!["0 0 * * *"]);
    }

    #[test]
    fn anchors_and_merge_keys() {
        let src = r#"on: push
x-env: &common
  A: one
  B: two
jobs:
  a:
    env:
      <<: *common
      B: override
    steps:
      - run: echo
"#;
        let m = parse(src).unwrap();
        let env: Vec<_> = m.jobs[0]
            .env
            .iter()
            .map(|(k, v)| (k.as_str(), v.value.as_str()))
            .collect();
        assert_eq!(env, vec![("B", "override"), ("A", "one")]);
    }

    #[test]
    fn permissions_forms() {
        let src = "on: push\npermissions: read-all\njobs:\n  a:\n    permissions:\n      contents: read\n      bogus: write\n    steps: [{run: x}]\n  b:\n    permissions: {}\n    steps: [{run: y}]\n";
        let m = parse(src).unwrap();
        assert_eq!(m.permissions, Some(PermissionDecl::ReadAll));
        assert_eq!(m.permissions_line, Some(2));
        assert_eq!(
            m.jobs[0].permissions.as_ref().unwrap().unknown_scopes(),
            vec!["bogus"]
        );
        assert_eq!(m.jobs[1].permissions, Some(PermissionDecl::None));
    }

    #[test]
    fn reusable_job() {
        let src = "on: push\njobs:\n  call:\n    uses: octo/ci/.github/workflows/b.yml@v1\n    with:\n      x: 1\n    secrets:\n      token: ${{ secrets.T }}\n";
        let m = parse(src).unwrap();
        let job = &m.jobs[0];
        assert!(job.steps.is_empty());
        assert_eq!(job.reusable_workflow.as_ref().unwrap().repo, "ci");
        assert_eq!(job.with_inputs.len(), 2);
    }

    #[test]
    fn job_without_steps_or_uses() {
        let src = "on: push\njobs:\n  a:\n    runs-on: x\n";
        assert!(matches!(parse(src), Err(ParseError::NotAWorkflow(_))));
    }
}
