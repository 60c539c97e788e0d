//! Remote access to the code-hosting platform: workflow listing and
//! download, latest-version lookup and ref resolution.
//!
//! All requests go through a [`Store`], which memoizes answers, bounds
//! concurrency, handles rate limiting and can replay recorded fixtures.

mod store;
mod transport;
pub mod version;

use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use serde::Deserialize;

use crate::checks::VersionResolver;
use crate::repo::{RepoId, DEFAULT_HOST};
use crate::workflow::RefKind;

pub use store::{fixture_key, RateLimitPolicy, Response, Sleeper, Store, StoreMode};
pub use transport::{HttpResponse, Transport, UreqTransport};

pub const GITHUB_API: &str = "https://api.github.com";
pub const TOKEN_VARS: [&str; 2] = ["WFAUDIT_TOKEN", "GITHUB_TOKEN"];

const JSON: &str = "application/vnd.github+json";
const RAW: &str = "application/vnd.github.raw";
const SHA: &str = "application/vnd.github.sha";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ForgeError {
    #[error("repository not found: {0}")]
    RepoNotFound(String),
    #[error("ref `{reference}` not found in {repo}")]
    RefNotFound { repo: String, reference: String },
    #[error("rate limited{}", retry_after.map(|d| format!(", retry after {}s", d.as_secs())).unwrap_or_default())]
    RateLimited { retry_after: Option<Duration> },
    #[error("network error: {0}")]
    Network(String),
    #[error("HTTP {status} for {path}")]
    Http { status: u16, path: String },
    #[error("no recorded fixture for {0}")]
    FixtureMiss(String),
    #[error("version data unavailable: {0}")]
    Unavailable(String),
    #[error("cannot decode response: {0}")]
    Decode(String),
    #[error("cache write failed: {0}")]
    Io(String),
    #[error("unsupported host: {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ForgeMode {
    Live,
    /// Replay fixtures from this directory; never opens a connection.
    Recorded(PathBuf),
    /// Query live and write every answer into `cache_dir`.
    RecordWhileLive,
}

#[derive(Clone)]
pub struct ForgeConfig {
    pub api_base_url: String,
    pub auth_token: Option<String>,
    pub cache_dir: Option<PathBuf>,
    pub mode: ForgeMode,
    pub max_in_flight: usize,
}

impl fmt::Debug for ForgeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ForgeConfig")
            .field("api_base_url", &self.api_base_url)
            .field(
                "auth_token",
                &self.auth_token.as_ref().map(|_| "<redacted>"),
            )
            .field("cache_dir", &self.cache_dir)
            .field("mode", &self.mode)
            .field("max_in_flight", &self.max_in_flight)
            .finish()
    }
}

impl Default for ForgeConfig {
    fn default() -> Self {
        ForgeConfig {
            api_base_url: GITHUB_API.to_string(),
            auth_token: None,
            cache_dir: None,
            mode: ForgeMode::Live,
            max_in_flight: 8,
        }
    }
}

impl ForgeConfig {
    pub fn recorded(dir: impl Into<PathBuf>) -> Self {
        ForgeConfig {
            mode: ForgeMode::Recorded(dir.into()),
            ..ForgeConfig::default()
        }
    }

    /// Reads the token from the first set variable in [`TOKEN_VARS`].
    pub fn with_env_token(mut self) -> Self {
        self.auth_token = TOKEN_VARS
            .iter()
            .find_map(|v| std::env::var(v).ok().filter(|t| !t.is_empty()));
        self
    }

    fn store_mode(&self) -> Result<StoreMode, ForgeError> {
        Ok(match &self.mode {
            ForgeMode::Live => StoreMode::Live,
            ForgeMode::Recorded(dir) => StoreMode::Recorded(dir.clone()),
            ForgeMode::RecordWhileLive => StoreMode::RecordWhileLive(
                self.cache_dir
                    .clone()
                    .ok_or_else(|| ForgeError::Io("recording requires a cache directory".into()))?,
            ),
        })
    }

    /// A store for `base_url` sharing this configuration's mode. In recorded
    /// mode no transport is built at all.
    pub fn store(
        &self,
        base_url: &str,
        transport: Option<Arc<dyn Transport>>,
        with_token: bool,
    ) -> Result<Store, ForgeError> {
        let mode = self.store_mode()?;
        let transport = match (&mode, transport) {
            (StoreMode::Recorded(_), _) => None,
            (_, Some(t)) => Some(t),
            (_, None) => Some(Arc::new(UreqTransport::default()) as Arc<dyn Transport>),
        };
        let token = if with_token {
            self.auth_token.clone()
        } else {
            None
        };
        Ok(Store::new(
            base_url,
            mode,
            transport,
            token,
            self.max_in_flight,
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatestVersion {
    pub tag: String,
    pub commit_sha: String,
    pub published_at: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkflowFile {
    pub path: String,
    pub content: String,
}

#[derive(Deserialize)]
struct ContentEntry {
    name: String,
    path: String,
    #[serde(rename = "type")]
    kind: String,
}

#[derive(Deserialize)]
struct Release {
    tag_name: String,
    published_at: Option<String>,
}

#[derive(Deserialize)]
struct Tag {
    name: String,
    commit: TagCommit,
}

#[derive(Deserialize)]
struct TagCommit {
    sha: String,
}

pub struct ForgeClient {
    store: Store,
}

impl ForgeClient {
    pub fn new(
        config: &ForgeConfig,
        transport: Option<Arc<dyn Transport>>,
    ) -> Result<Self, ForgeError> {
        Ok(ForgeClient {
            store: config.store(&config.api_base_url, transport, true)?,
        })
    }

    pub fn remote_calls(&self) -> usize {
        self.store.remote_calls()
    }

    fn get(&self, path: &str, accept: &str) -> Result<Arc<Response>, ForgeError> {
        self.store.get(path, accept)
    }

    fn check_host(repo: &RepoId) -> Result<(), ForgeError> {
        if repo.host == DEFAULT_HOST {
            Ok(())
        } else {
            Err(ForgeError::Unsupported(repo.to_string()))
        }
    }

    fn repo_path(owner: &str, name: &str) -> String {
        format!("repos/{}/{}", encode(owner), encode(name))
    }

    /// Every `.yml`/`.yaml` file under `.github/workflows/` at the default
    /// branch head, sorted by path.
    pub fn list_workflows(&self, repo: &RepoId) -> Result<Vec<WorkflowFile>, ForgeError> {
        Self::check_host(repo)?;
        let base = Self::repo_path(&repo.owner, &repo.name);
        let listing = self.get(&format!("{base}/contents/.github/workflows"), JSON)?;
        match listing.status {
            200 => {}
            404 => {
                return match self.get(&base, JSON)?.status {
                    200 => Ok(Vec::new()),
                    404 => Err(ForgeError::RepoNotFound(repo.slug())),
                    status => Err(ForgeError::Http { status, path: base }),
                }
            }
            status => {
                return Err(ForgeError::Http {
                    status,
                    path: format!("{base}/contents/.github/workflows"),
                })
            }
        }
        let entries: Vec<ContentEntry> =
            serde_json::from_str(&listing.body).map_err(|e| ForgeError::Decode(e.to_string()))?;
        let mut paths: Vec<String> = entries
            .into_iter()
            .filter(|e| e.kind == "file" && (e.name.ends_with(".yml") || e.name.ends_with(".yaml")))
            .map(|e| e.path)
            .collect();
        paths.sort();
        paths
            .into_iter()
            .map(|path| {
                let content = self
                    .fetch_file(repo, &path)?
                    .ok_or_else(|| ForgeError::Http {
                        status: 404,
                        path: path.clone(),
                    })?;
                Ok(WorkflowFile { path, content })
            })
            .collect()
    }

    /// Raw file contents at the default branch head; `None` when absent.
    pub fn fetch_file(&self, repo: &RepoId, path: &str) -> Result<Option<String>, ForgeError> {
        Self::check_host(repo)?;
        let encoded: Vec<String> = path.split('/').map(encode).collect();
        let url = format!(
            "{}/contents/{}",
            Self::repo_path(&repo.owner, &repo.name),
            encoded.join("/")
        );
        let resp = self.get(&url, RAW)?;
        match resp.status {
            200 => Ok(Some(resp.body.clone())),
            404 => Ok(None),
            status => Err(ForgeError::Http { status, path: url }),
        }
    }

    /// Commit sha a ref points at. 404 and 422 both mean the ref is unknown.
    fn commit_of(&self, owner: &str, name: &str, reference: &str) -> Result<String, ForgeError> {
        let url = format!(
            "{}/commits/{}",
            Self::repo_path(owner, name),
            encode(reference)
        );
        let resp = self.get(&url, SHA)?;
        match resp.status {
            200 => {
                let sha = resp.body.trim().to_ascii_lowercase();
                if crate::workflow::is_commit_sha(&sha) {
                    Ok(sha)
                } else {
                    Err(ForgeError::Decode(format!("not a commit sha from {url}")))
                }
            }
            404 | 422 => Err(ForgeError::RefNotFound {
                repo: format!("{owner}/{name}"),
                reference: reference.to_string(),
            }),
            status => Err(ForgeError::Http { status, path: url }),
        }
    }

    /// Latest release, else the highest version-like tag, else the default
    /// branch head (reported with tag `HEAD`).
    pub fn latest_version(&self, owner: &str, name: &str) -> Result<LatestVersion, ForgeError> {
        let base = Self::repo_path(owner, name);
        let release = self.get(&format!("{base}/releases/latest"), JSON)?;
        if release.status == 200 {
            let r: Release = serde_json::from_str(&release.body)
                .map_err(|e| ForgeError::Decode(e.to_string()))?;
            let commit_sha = self.commit_of(owner, name, &r.tag_name)?;
            return Ok(LatestVersion {
                tag: r.tag_name,
                commit_sha,
                published_at: r.published_at,
            });
        } else if release.status != 404 {
            return Err(ForgeError::Http {
                status: release.status,
                path: format!("{base}/releases/latest"),
            });
        }

        let tags_path = format!("{base}/tags?per_page=100");
        let tags = self.get(&tags_path, JSON)?;
        match tags.status {
            200 => {
                let tags: Vec<Tag> = serde_json::from_str(&tags.body)
                    .map_err(|e| ForgeError::Decode(e.to_string()))?;
                if let Some(i) = version::highest(tags.iter().map(|t| t.name.as_str())) {
                    return Ok(LatestVersion {
                        tag: tags[i].name.clone(),
                        commit_sha: tags[i].commit.sha.to_ascii_lowercase(),
                        published_at: None,
                    });
                }
            }
            404 => return Err(ForgeError::RepoNotFound(format!("{owner}/{name}"))),
            status => {
                return Err(ForgeError::Http {
                    status,
                    path: tags_path,
                })
            }
        }

        match self.commit_of(owner, name, "HEAD") {
            Ok(commit_sha) => Ok(LatestVersion {
                tag: "HEAD".into(),
                commit_sha,
                published_at: None,
            }),
            Err(ForgeError::RefNotFound { .. }) => {
                Err(ForgeError::RepoNotFound(format!("{owner}/{name}")))
            }
            Err(e) => Err(e),
        }
    }

    pub fn resolve_ref(
        &self,
        owner: &str,
        name: &str,
        reference: &RefKind,
    ) -> Result<String, ForgeError> {
        match reference {
            RefKind::CommitSha(sha) => Ok(sha.clone()),
            RefKind::Tag(r) | RefKind::Branch(r) if !r.is_empty() => self.commit_of(owner, name, r),
            other => Err(ForgeError::RefNotFound {
                repo: format!("{owner}/{name}"),
                reference: format!("{other:?}"),
            }),
        }
    }
}

impl VersionResolver for ForgeClient {
    fn latest_version(&self, owner: &str, repo: &str) -> Result<LatestVersion, ForgeError> {
        ForgeClient::latest_version(self, owner, repo)
    }

    fn resolve_ref(
        &self,
        owner: &str,
        repo: &str,
        reference: &RefKind,
    ) -> Result<String, ForgeError> {
        ForgeClient::resolve_ref(self, owner, repo, reference)
    }
}

/// Percent-encodes one URL path segment.
pub(crate) fn encode(segment: &str) -> String {
    let mut out = String::with_capacity(segment.len());
    for b in segment.bytes() {
        match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'.' | b'-' | b'_' | b'~' => {
                out.push(b as char)
            }
            other => out.push_str(&format!("%{other:02X}")),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;
    use std::sync::Mutex;

    /// Serves canned responses keyed by URL path; unknown paths are 404.
    #[derive(Default)]
    struct Canned {
        routes: HashMap<String, HttpResponse>,
        seen: Mutex<Vec<String>>,
    }

    impl Canned {
        fn route(mut self, path: &str, body: &str) -> Self {
            self.routes.insert(path.to_string(), HttpResponse::ok(body));
            self
        }
    }

    impl Transport for Canned {
        fn get(&self, url: &str, _: &[(&str, &str)]) -> Result<HttpResponse, String> {
            let path = url
                .strip_prefix("https://api.github.com/")
                .unwrap()
                .to_string();
            self.seen.lock().unwrap().push(path.clone());
            Ok(self
                .routes
                .get(&path)
                .cloned()
                .unwrap_or_else(|| HttpResponse::status(404)))
        }
    }

    const A: &str = "aaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaa";
    const B: &str = "bbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbb";

    fn client(t: Canned) -> (ForgeClient, Arc<Canned>) {
        let t = Arc::new(t);
        let c = ForgeClient::new(&ForgeConfig::default(), Some(t.clone())).unwrap();
        (c, t)
    }

    #[test]
    fn release_takes_precedence() {
        let (c, _) = client(
            Canned::default()
                .route(
                    "repos/o/r/releases/latest",
                    r#"{"tag_name":"v2","published_at":"2022-07-01T00:00:00Z"}"#,
                )
                .route("repos/o/r/commits/v2", B)
                .route(
                    "repos/o/r/tags?per_page=100",
                    &format!(r#"[{{"name":"v9","commit":{{"sha":"{A}"}}}}]"#),
                ),
        );
        let v = c.latest_version("o", "r").unwrap();
        assert_eq!((v.tag.as_str(), v.commit_sha.as_str()), ("v2", B));
    }

    #[test]
    fn highest_tag_when_no_release() {
        let tags = format!(
            r#"[{{"name":"v1.9","commit":{{"sha":"{A}"}}}},{{"name":"v1.10","commit":{{"sha":"{B}"}}}}]"#
        );
        let (c, _) = client(Canned::default().route("repos/o/r/tags?per_page=100", &tags));
        let v = c.latest_version("o", "r").unwrap();
        assert_eq!((v.tag.as_str(), v.commit_sha.as_str()), ("v1.10", B));
    }

    #[test]
    fn head_when_no_tags() {
        let (c, _) = client(
            Canned::default()
                .route("repos/o/r/tags?per_page=100", "[]")
                .route("repos/o/r/commits/HEAD", A),
        );
        let v = c.latest_version("o", "r").unwrap();
        assert_eq!((v.tag.as_str(), v.commit_sha.as_str()), ("HEAD", A));
    }

    #[test]
    fn resolves_refs() {
        let (c, t) = client(Canned::default().route("repos/o/r/commits/v2", A));
        assert_eq!(
            c.resolve_ref("o", "r", &RefKind::CommitSha(B.into()))
                .unwrap(),
            B
        );
        assert_eq!(
            c.resolve_ref("o", "r", &RefKind::Tag("v2".into())).unwrap(),
            A
        );
        assert!(matches!(
            c.resolve_ref("o", "r", &RefKind::Branch("gone".into())),
            Err(ForgeError::RefNotFound { .. })
        ));
        // Memoized: asking again does not hit the transport.
        c.resolve_ref("o", "r", &RefKind::Tag("v2".into())).unwrap();
        assert_eq!(t.seen.lock().unwrap().len(), 2);
    }

    #[test]
    fn lists_workflows() {
        let listing = r#"[
            {"name":"ci.yml","path":".github/workflows/ci.yml","type":"file"},
            {"name":"README.md","path":".github/workflows/README.md","type":"file"},
            {"name":"a.yaml","path":".github/workflows/a.yaml","type":"file"}]"#;
        let (c, _) = client(
            Canned::default()
                .route("repos/o/r/contents/.github/workflows", listing)
                .route("repos/o/r/contents/.github/workflows/ci.yml", "on: push\n")
                .route(
                    "repos/o/r/contents/.github/workflows/a.yaml",
                    "on: issues\n",
                )
                .route("repos/o/empty", "{}"),
        );
        let files = c.list_workflows(&RepoId::github("o", "r")).unwrap();
        let paths: Vec<_> = files.iter().map(|f| f.path.as_str()).collect();
        assert_eq!(
            paths,
            [".github/workflows/a.yaml", ".github/workflows/ci.yml"]
        );
        assert_eq!(files[1].content, "on: push\n");
        assert!(c
            .list_workflows(&RepoId::github("o", "empty"))
            .unwrap()
            .is_empty());
        assert!(matches!(
            c.list_workflows(&RepoId::github("o", "missing")),
            Err(ForgeError::RepoNotFound(_))
        ));
    }

    #[test]
    fn token_not_in_debug_output() {
        let cfg = ForgeConfig {
            auth_token: Some("ghp_secret".into()),
            ..ForgeConfig::default()
        };
        assert!(!format!("{cfg:?}").contains("ghp_secret"));
    }
}
