//! Supply-chain graph of code repositories, discovered breadth-first from a
//! project's dependency manifests.

mod manifest;
mod pypi;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use manifest::{
    dependencies, normalize_package_name, requirement_name, Manifest, ManifestError, MANIFEST_FILES,
};
pub use pypi::{repository_from_metadata, PypiResolver, PYPI_BASE};

use crate::forge::{ForgeClient, ForgeError};
use crate::repo::RepoId;

pub const DEFAULT_MAX_DEPTH: usize = 2;

/// Maps a package name to the repository hosting its source.
pub trait PackageResolver: Sync {
    /// `Ok(None)` when the package exists but names no repository.
    fn resolve(&self, package: &str) -> Result<Option<RepoId>, ForgeError>;
}

/// Supplies the dependency manifests of a remote repository.
pub trait ManifestSource: Sync {
    fn manifests(&self, repo: &RepoId) -> Result<Vec<Manifest>, ForgeError>;
}

impl ManifestSource for ForgeClient {
    fn manifests(&self, repo: &RepoId) -> Result<Vec<Manifest>, ForgeError> {
        let mut out = Vec::new();
        for file_name in MANIFEST_FILES {
            if let Some(content) = self.fetch_file(repo, file_name)? {
                out.push(Manifest {
                    file_name: file_name.to_string(),
                    content,
                });
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscoveredVia {
    Root,
    Dependency { parent: RepoId, package: String },
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoNode {
    pub identity: RepoId,
    pub discovered_via: DiscoveredVia,
    /// Length of the shortest discovery path from the root.
    pub depth: usize,
    pub workflow_refs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnresolvedPackage {
    pub package: String,
    pub required_by: RepoId,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SscGraph {
    /// Canonical identity of the root.
    pub root: RepoId,
    /// Keyed by canonical (lowercased) identity.
    pub nodes: BTreeMap<RepoId, RepoNode>,
    pub edges: BTreeSet<(RepoId, RepoId)>,
    pub unresolved: Vec<UnresolvedPackage>,
    /// True when some resolution or manifest fetch failed.
    pub partial: bool,
    pub warnings: Vec<String>,
}

impl SscGraph {
    fn with_root(root: RepoId, via: DiscoveredVia) -> Self {
        let key = root.canonical();
        let mut nodes = BTreeMap::new();
        nodes.insert(
            key.clone(),
            RepoNode {
                identity: root,
                discovered_via: via,
                depth: 0,
                workflow_refs: Vec::new(),
            },
        );
        SscGraph {
            root: key,
            nodes,
            edges: BTreeSet::new(),
            unresolved: Vec::new(),
            partial: false,
            warnings: Vec::new(),
        }
    }

    pub fn root_node(&self) -> &RepoNode {
        &self.nodes[&self.root]
    }
}

/// Every repository of the graph, ordered by identity.
pub fn unique_repositories(graph: &SscGraph) -> Vec<&RepoNode> {
    graph.nodes.values().collect()
}

/// Graph of explicitly listed repositories; no dependency expansion. The
/// first entry plays the root.
pub fn explicit_graph(repos: &[RepoId]) -> Option<SscGraph> {
    let (first, rest) = repos.split_first()?;
    let mut graph = SscGraph::with_root(first.clone(), DiscoveredVia::Explicit);
    for repo in rest {
        graph.nodes.entry(repo.canonical()).or_insert(RepoNode {
            identity: repo.clone(),
            discovered_via: DiscoveredVia::Explicit,
            depth: 0,
            workflow_refs: Vec::new(),
        });
    }
    Some(graph)
}

/// Parses a newline-separated repository list; blank lines and `#`
/// comments are skipped.
pub fn parse_repo_list(text: &str) -> Result<Vec<RepoId>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let repo = RepoId::parse(line)
            .ok_or_else(|| format!("line {}: not a repository: {line}", i + 1))?;
        if !out
            .iter()
            .any(|r: &RepoId| r.canonical() == repo.canonical())
        {
            out.push(repo);
        }
    }
    Ok(out)
}

/// Identity of a local checkout: its `origin` remote when one is
/// configured, else `local/<directory name>`.
pub fn local_identity(project_dir: &Path) -> RepoId {
    let from_git = std::fs::read_to_string(project_dir.join(".git").join("config"))
        .ok()
        .and_then(|cfg| origin_url(&cfg))
        .and_then(|url| RepoId::parse(&url));
    from_git.unwrap_or_else(|| {
        let name = project_dir
            .canonicalize()
            .ok()
            .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .unwrap_or_else(|| "project".to_string());
        RepoId::new("local", "local", &name)
    })
}

fn origin_url(git_config: &str) -> Option<String> {
    let mut in_origin = false;
    for line in git_config.lines() {
        let line = line.trim();
        if line.starts_with('[') {
            in_origin = line == r#"[remote "origin"]"#;
        } else if in_origin {
            if let Some((k, v)) = line.split_once('=') {
                if k.trim() == "url" {
                    return Some(v.trim().to_string());
                }
            }
        }
    }
    None
}

/// Manifests present in a local directory.
pub fn local_manifests(project_dir: &Path) -> Vec<Manifest> {
    MANIFEST_FILES
        .iter()
        .filter_map(|f| {
            std::fs::read_to_string(project_dir.join(f))
                .ok()
                .map(|content| Manifest {
                    file_name: f.to_string(),
                    content,
                })
        })
        .collect()
}

/// Builds the graph of `project_dir`: its own manifests are read from disk,
/// dependency repositories' manifests come from `source`.
pub fn build_graph(
    project_dir: &Path,
    resolver: &dyn PackageResolver,
    source: &dyn ManifestSource,
    max_depth: usize,
) -> SscGraph {
    let root = local_identity(project_dir);
    let manifests = local_manifests(project_dir);
    let mut graph = SscGraph::with_root(root, DiscoveredVia::Root);
    if manifests.is_empty() {
        graph.warnings.push(format!(
            "no supported manifest in {}",
            project_dir.display()
        ));
        return graph;
    }
    expand(&mut graph, manifests, resolver, source, max_depth);
    graph
}

/// Builds the graph starting from a repository whose manifests come from
/// `source` as well.
pub fn build_graph_from(
    root: RepoId,
    resolver: &dyn PackageResolver,
    source: &dyn ManifestSource,
    max_depth: usize,
) -> SscGraph {
    let mut graph = SscGraph::with_root(root.clone(), DiscoveredVia::Root);
    match source.manifests(&root) {
        Ok(m) if m.is_empty() => graph
            .warnings
            .push(format!("no supported manifest in {root}")),
        Ok(m) => expand(&mut graph, m, resolver, source, max_depth),
        Err(e) => {
            graph.partial = true;
            graph.warnings.push(format!("{root}: {e}"));
        }
    }
    graph
}

/// Breadth-first expansion. Each identity is expanded at most once, at its
/// shortest depth; nodes at `max_depth` are recorded but not expanded.
/// Work within a level runs in parallel; merging is sequential and in
/// frontier order so the result is deterministic.
fn expand(
    graph: &mut SscGraph,
    root_manifests: Vec<Manifest>,
    resolver: &dyn PackageResolver,
    source: &dyn ManifestSource,
    max_depth: usize,
) {
    if max_depth == 0 {
        return;
    }
    let mut frontier: Vec<(RepoId, Result<Vec<Manifest>, ForgeError>)> =
        vec![(graph.root.clone(), Ok(root_manifests))];
    let mut depth = 0;
    while !frontier.is_empty() && depth < max_depth {
        let mut packages_of: Vec<(RepoId, Vec<String>)> = Vec::new();
        for (repo, manifests) in frontier {
            let manifests = match manifests {
                Ok(m) => m,
                Err(e) => {
                    graph.partial = true;
                    graph.warnings.push(format!("{repo}: {e}"));
                    continue;
                }
            };
            let mut names: Vec<String> = Vec::new();
            for m in &manifests {
                match dependencies(m) {
                    Ok(deps) => {
                        for d in deps {
                            if !names.contains(&d) {
                                names.push(d);
                            }
                        }
                    }
                    Err(e) => graph.warnings.push(format!("{repo}: {e}")),
                }
            }
            packages_of.push((repo, names));
        }

        let distinct: BTreeSet<&String> = packages_of.iter().flat_map(|(_, n)| n).collect();
        let resolved: BTreeMap<&String, Result<Option<RepoId>, ForgeError>> = distinct
            .into_par_iter()
            .map(|p| (p, resolver.resolve(p)))
            .collect::<Vec<_>>()
            .into_iter()
            .collect();

        let mut next: Vec<RepoId> = Vec::new();
        for (parent, names) in &packages_of {
            for name in names {
                let target = match &resolved[name] {
                    Ok(Some(r)) => r,
                    Ok(None) => {
                        graph.unresolved.push(UnresolvedPackage {
                            package: name.clone(),
                            required_by: parent.clone(),
                            reason: "no repository in package metadata".into(),
                        });
                        continue;
                    }
                    Err(e) => {
                        graph.partial = true;
                        graph.unresolved.push(UnresolvedPackage {
                            package: name.clone(),
                            required_by: parent.clone(),
                            reason: e.to_string(),
                        });
                        continue;
                    }
                };
                let key = target.canonical();
                if &key == parent {
                    continue;
                }
                if !graph.nodes.contains_key(&key) {
                    graph.nodes.insert(
                        key.clone(),
                        RepoNode {
                            identity: target.clone(),
                            discovered_via: DiscoveredVia::Dependency {
                                parent: graph.nodes[parent].identity.clone(),
                                package: name.clone(),
                            },
                            depth: depth + 1,
                            workflow_refs: Vec::new(),
                        },
                    );
                    next.push(key.clone());
                }
                graph.edges.insert((parent.clone(), key));
            }
        }

        depth += 1;
        frontier = if depth < max_depth {
            next.into_par_iter()
                .map(|r| {
                    let m = source.manifests(&graph.nodes[&r].identity);
                    (r, m)
                })
                .collect()
        } else {
            Vec::new()
        };
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    /// Package `pkg-x` lives in repository `o/x`; repository `o/x` depends on
    /// the packages listed in `deps`.
    struct World {
        deps: HashMap<String, Vec<&'static str>>,
        missing_meta: Vec<&'static str>,
    }

    impl PackageResolver for World {
        fn resolve(&self, package: &str) -> Result<Option<RepoId>, ForgeError> {
            if package == "broken" {
                return Err(ForgeError::Network("down".into()));
            }
            if self.missing_meta.contains(&package) {
                return Ok(None);
            }
            Ok(package.strip_prefix("pkg-").map(|n| RepoId::github("o", n)))
        }
    }

    impl ManifestSource for World {
        fn manifests(&self, repo: &RepoId) -> Result<Vec<Manifest>, ForgeError> {
            Ok(self
                .deps
                .get(&repo.name)
                .map(|d| {
                    vec![Manifest {
                        file_name: "requirements.txt".into(),
                        content: d.join("\n"),
                    }]
                })
                .unwrap_or_default())
        }
    }

    fn world(pairs: &[(&str, &[&'static str])]) -> World {
        World {
            deps: pairs
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_vec()))
                .collect(),
            missing_meta: vec!["nometa"],
        }
    }

    fn build(w: &World, depth: usize) -> SscGraph {
        build_graph_from(RepoId::github("o", "root"), w, w, depth)
    }

    #[test]
    fn single_dependency() {
        let g = build(&world(&[("root", &["pkg-r"])]), 2);
        assert_eq!(g.nodes.len(), 2);
        assert_eq!(g.edges.len(), 1);
        assert!(g
            .edges
            .contains(&(RepoId::github("o", "root"), RepoId::github("o", "r"))));
    }

    #[test]
    fn empty_manifest_gives_root_only() {
        let g = build(&world(&[("root", &[])]), 2);
        assert_eq!(g.nodes.len(), 1);
        assert!(g.edges.is_empty());
        let g = build(&world(&[]), 2);
        assert_eq!(g.nodes.len(), 1);
        assert_eq!(g.warnings.len(), 1);
    }

    #[test]
    fn cycle_terminates() {
        let w = world(&[("root", &["pkg-a"]), ("a", &["pkg-b"]), ("b", &["pkg-a"])]);
        let g = build(&w, 10);
        assert_eq!(g.nodes.len(), 3);
        // root->a, a->b, b->a
        assert_eq!(g.edges.len(), 3);
    }

    #[test]
    fn depth_bound() {
        let w = world(&[("root", &["pkg-a"]), ("a", &["pkg-b"]), ("b", &["pkg-c"])]);
        assert_eq!(build(&w, 0).nodes.len(), 1);
        assert_eq!(build(&w, 1).nodes.len(), 2);
        let g = build(&w, 2);
        assert_eq!(g.nodes.len(), 3);
        assert!(g.nodes.values().all(|n| n.depth <= 2));
    }

    #[test]
    fn dedup_and_side_list() {
        let w = world(&[("root", &["pkg-a", "PKG_A", "pkg-root", "nometa", "broken"])]);
        let g = build(&w, 2);
        assert_eq!(unique_repositories(&g).len(), 2);
        assert_eq!(g.unresolved.len(), 2);
        assert!(g.partial);
    }

    #[test]
    fn repo_list_parsing() {
        let list = parse_repo_list(
            "# deps\npallets/flask\n\nhttps://github.com/psf/requests # http\nPallets/Flask\n",
        )
        .unwrap();
        assert_eq!(
            list,
            [
                RepoId::github("pallets", "flask"),
                RepoId::github("psf", "requests")
            ]
        );
        assert!(parse_repo_list("flask\n").is_err());
        assert_eq!(explicit_graph(&list).unwrap().nodes.len(), 2);
    }

    #[test]
    fn git_origin() {
        let cfg = "[core]\n\tbare = false\n[remote \"origin\"]\n\turl = git@github.com:pallets/flask.git\n";
        assert_eq!(
            origin_url(cfg).as_deref(),
            Some("git@github.com:pallets/flask.git")
        );
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(local_identity(dir.path()).host, "local");
    }
}
