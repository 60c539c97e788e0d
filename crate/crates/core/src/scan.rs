//! End-to-end pipeline: build the repository graph, harvest workflows, run
//! the checks and assemble the report.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use crate::checks::{
    permission_posture, run_all_checks, ControllabilityTable, OfflineResolver, VersionResolver,
};
use crate::exploitability::{score_event, EventScoreTable};
use crate::forge::{ForgeClient, ForgeConfig, ForgeMode, Transport};
use crate::graph::{
    build_graph, explicit_graph, local_identity, parse_repo_list, PypiResolver, SscGraph,
    DEFAULT_MAX_DEPTH,
};
use crate::repo::RepoId;
use crate::report::{
    assemble_report, workflow_key, CheckedWorkflow, ScanError, ScanReport, ScannedWorkflow,
};
use crate::workflow::parse_workflow;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Input {
    /// A project checkout: manifests and `.github/workflows/` are read from
    /// disk, dependencies from the forge.
    ProjectDir(PathBuf),
    /// A file listing repositories, one per line.
    RepoList(PathBuf),
    /// A directory of workflow files. No graph and no forge listing; version
    /// checks use recorded fixtures when configured, else stay undecided.
    WorkflowDir(PathBuf),
}

#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub input: Input,
    pub forge: ForgeConfig,
    pub max_depth: usize,
    pub score_table_path: Option<PathBuf>,
    pub controllability_table_path: Option<PathBuf>,
    pub parallelism: usize,
    pub timestamp: bool,
}

impl ScanConfig {
    pub fn new(input: Input) -> Self {
        ScanConfig {
            input,
            forge: ForgeConfig::default(),
            max_depth: DEFAULT_MAX_DEPTH,
            score_table_path: None,
            controllability_table_path: None,
            parallelism: default_parallelism(8),
            timestamp: true,
        }
    }
}

/// Number of processors, capped by the forge's in-flight limit.
pub fn default_parallelism(max_in_flight: usize) -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(max_in_flight.max(1))
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    ScoreTable(#[from] crate::exploitability::ScoreTableError),
    #[error(transparent)]
    Controllability(#[from] crate::checks::TableError),
    #[error(transparent)]
    Forge(#[from] crate::forge::ForgeError),
}

/// Score and controllability tables shared by every workflow check.
pub struct Analyzer {
    pub score_table: EventScoreTable,
    pub controllability: ControllabilityTable,
}

impl Analyzer {
    pub fn load(score: Option<&Path>, controllability: Option<&Path>) -> Result<Self, ConfigError> {
        Ok(Analyzer {
            score_table: EventScoreTable::load_with_overrides(score)?,
            controllability: ControllabilityTable::load_with_overrides(controllability)?,
        })
    }

    pub fn check(
        &self,
        source: &str,
        path: &Path,
        resolver: &dyn VersionResolver,
    ) -> Result<CheckedWorkflow, String> {
        let model = parse_workflow(source, path).map_err(|e| e.to_string())?;
        let events = model
            .triggers
            .iter()
            .map(|t| {
                (
                    t.event_name.clone(),
                    score_event(t, &self.score_table).level.value(),
                )
            })
            .collect();
        Ok(CheckedWorkflow {
            events,
            permissions: permission_posture(&model),
            outcome: run_all_checks(&model, &self.controllability, resolver, &self.score_table),
        })
    }
}

impl Default for Analyzer {
    fn default() -> Self {
        Analyzer {
            score_table: crate::exploitability::default_score_table(),
            controllability: ControllabilityTable::default(),
        }
    }
}

pub struct ScanOutput {
    pub report: ScanReport,
    /// Requests that reached the transport (always 0 in recorded mode).
    pub remote_calls: usize,
}

struct Harvested {
    repo: RepoId,
    files: Result<Vec<(String, String)>, String>,
}

fn validate(config: &ScanConfig) -> Result<(), ConfigError> {
    if config.parallelism == 0 {
        return Err(ConfigError::Invalid(
            "parallelism must be at least 1".into(),
        ));
    }
    let (path, want_dir) = match &config.input {
        Input::ProjectDir(p) | Input::WorkflowDir(p) => (p, true),
        Input::RepoList(p) => (p, false),
    };
    let ok = if want_dir {
        path.is_dir()
    } else {
        path.is_file()
    };
    if !ok {
        let what = if want_dir { "directory" } else { "file" };
        return Err(ConfigError::Invalid(format!(
            "input {what} not found: {}",
            path.display()
        )));
    }
    if let ForgeMode::Recorded(dir) = &config.forge.mode {
        if !dir.is_dir() {
            return Err(ConfigError::Invalid(format!(
                "fixture directory not found: {}",
                dir.display()
            )));
        }
    }
    Ok(())
}

/// Runs a scan. `transport` replaces the HTTP client (tests); it is never
/// used in recorded mode.
pub fn scan(
    config: &ScanConfig,
    transport: Option<Arc<dyn Transport>>,
) -> Result<ScanOutput, ConfigError> {
    validate(config)?;
    let analyzer = Analyzer::load(
        config.score_table_path.as_deref(),
        config.controllability_table_path.as_deref(),
    )?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let timestamp = config.timestamp.then(now_rfc3339);
    pool.install(|| match &config.input {
        Input::WorkflowDir(dir) => scan_workflow_dir(config, dir, &analyzer, transport, timestamp),
        Input::ProjectDir(dir) => scan_project(config, dir, &analyzer, transport, timestamp),
        Input::RepoList(file) => scan_repo_list(config, file, &analyzer, transport, timestamp),
    })
}

fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn scan_workflow_dir(
    config: &ScanConfig,
    dir: &Path,
    analyzer: &Analyzer,
    transport: Option<Arc<dyn Transport>>,
    timestamp: Option<String>,
) -> Result<ScanOutput, ConfigError> {
    let client = match config.forge.mode {
        ForgeMode::Recorded(_) => Some(ForgeClient::new(&config.forge, transport)?),
        _ => None,
    };
    let resolver: &dyn VersionResolver = match &client {
        Some(c) => c,
        None => &OfflineResolver,
    };
    let owner_repo = local_identity(dir).slug();
    // A checkout root is accepted too; its workflow directory is used.
    let nested = dir.join(".github").join("workflows");
    let root = if nested.is_dir() {
        nested
    } else {
        dir.to_path_buf()
    };
    let (files, mut errors) = local_workflows(&root, &root);
    let scanned = check_all(analyzer, resolver, &owner_repo, files);
    errors
        .iter_mut()
        .for_each(|e| e.target = workflow_key(&owner_repo, &e.target));
    Ok(ScanOutput {
        report: assemble_report(None, scanned, errors, timestamp),
        remote_calls: client.map(|c| c.remote_calls()).unwrap_or(0),
    })
}

fn scan_project(
    config: &ScanConfig,
    dir: &Path,
    analyzer: &Analyzer,
    transport: Option<Arc<dyn Transport>>,
    timestamp: Option<String>,
) -> Result<ScanOutput, ConfigError> {
    let client = ForgeClient::new(&config.forge, transport.clone())?;
    let pypi = PypiResolver::new(&config.forge, transport)?;
    let mut graph = build_graph(dir, &pypi, &client, config.max_depth);

    let root = graph.root.clone();
    let (root_files, mut errors) = local_workflows(&dir.join(".github").join("workflows"), dir);
    let root_slug = graph.nodes[&root].identity.slug();
    errors
        .iter_mut()
        .for_each(|e| e.target = workflow_key(&root_slug, &e.target));
    let mut harvested = vec![Harvested {
        repo: graph.nodes[&root].identity.clone(),
        files: Ok(root_files),
    }];
    let others: Vec<RepoId> = graph
        .nodes
        .iter()
        .filter(|(k, _)| **k != root)
        .map(|(_, n)| n.identity.clone())
        .collect();
    harvested.extend(harvest(&client, others));

    let (scanned, harvest_errors) = check_harvest(analyzer, &client, &mut graph, harvested);
    errors.extend(harvest_errors);
    let remote_calls = client.remote_calls() + pypi.remote_calls();
    Ok(ScanOutput {
        report: assemble_report(Some(&graph), scanned, errors, timestamp),
        remote_calls,
    })
}

fn scan_repo_list(
    config: &ScanConfig,
    file: &Path,
    analyzer: &Analyzer,
    transport: Option<Arc<dyn Transport>>,
    timestamp: Option<String>,
) -> Result<ScanOutput, ConfigError> {
    let text = fs::read_to_string(file)
        .map_err(|e| ConfigError::Invalid(format!("{}: {e}", file.display())))?;
    let repos = parse_repo_list(&text).map_err(ConfigError::Invalid)?;
    let client = ForgeClient::new(&config.forge, transport)?;
    let Some(mut graph) = explicit_graph(&repos) else {
        return Err(ConfigError::Invalid(format!(
            "{}: no repositories listed",
            file.display()
        )));
    };
    let harvested = harvest(&client, repos);
    let (scanned, errors) = check_harvest(analyzer, &client, &mut graph, harvested);
    Ok(ScanOutput {
        report: assemble_report(Some(&graph), scanned, errors, timestamp),
        remote_calls: client.remote_calls(),
    })
}

/// Lists and downloads workflows of every repository concurrently. Order
/// follows `repos`.
fn harvest(client: &ForgeClient, repos: Vec<RepoId>) -> Vec<Harvested> {
    repos
        .into_par_iter()
        .map(|repo| {
            let files = client
                .list_workflows(&repo)
                .map(|fs| fs.into_iter().map(|f| (f.path, f.content)).collect())
                .map_err(|e| e.to_string());
            Harvested { repo, files }
        })
        .collect()
}

fn check_harvest(
    analyzer: &Analyzer,
    resolver: &dyn VersionResolver,
    graph: &mut SscGraph,
    harvested: Vec<Harvested>,
) -> (Vec<ScannedWorkflow>, Vec<ScanError>) {
    let mut errors = Vec::new();
    let mut jobs = Vec::new();
    for h in harvested {
        match h.files {
            Ok(files) => {
                if let Some(node) = graph.nodes.get_mut(&h.repo.canonical()) {
                    node.workflow_refs = files.iter().map(|(p, _)| p.clone()).collect();
                }
                jobs.push((h.repo.slug(), files));
            }
            Err(message) => errors.push(ScanError {
                target: h.repo.slug(),
                message,
            }),
        }
    }
    let scanned = jobs
        .into_par_iter()
        .flat_map(|(slug, files)| check_all(analyzer, resolver, &slug, files))
        .collect();
    (scanned, errors)
}

fn check_all(
    analyzer: &Analyzer,
    resolver: &dyn VersionResolver,
    owner_repo: &str,
    files: Vec<(String, String)>,
) -> Vec<ScannedWorkflow> {
    files
        .into_par_iter()
        .map(|(path, source)| {
            let result = analyzer.check(&source, Path::new(&path), resolver);
            ScannedWorkflow {
                key: workflow_key(owner_repo, &path),
                source,
                result,
            }
        })
        .collect()
}

fn is_workflow_file(p: &Path) -> bool {
    p.is_file() && matches!(p.extension().and_then(|e| e.to_str()), Some("yml" | "yaml"))
}

/// `.yml`/`.yaml` files under `root`, recursively, with paths relative to
/// `base` using `/` separators. Unreadable files become errors whose target
/// is the relative path.
fn local_workflows(root: &Path, base: &Path) -> (Vec<(String, String)>, Vec<ScanError>) {
    let mut paths = Vec::new();
    collect_files(root, &mut paths);
    paths.sort();
    let mut files = Vec::new();
    let mut errors = Vec::new();
    for p in paths {
        let rel = p
            .strip_prefix(base)
            .unwrap_or(&p)
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        match fs::read_to_string(&p) {
            Ok(text) => files.push((rel, text)),
            Err(e) => errors.push(ScanError {
                target: rel,
                message: e.to_string(),
            }),
        }
    }
    (files, errors)
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) {
    let Ok(entries) = fs::read_dir(dir) else {
        return;
    };
    for entry in entries.flatten() {
        let p = entry.path();
        if p.is_dir() {
            if p.file_name().is_some_and(|n| n != ".git") {
                collect_files(&p, out);
            }
        } else if is_workflow_file(&p) {
            out.push(p);
        }
    }
}
