//! Response store shared by every remote endpoint.
//!
//! Answers each `(host, path, accept)` query at most once per run. Depending
//! on the mode, answers come from the network, from recorded fixture files,
//! or from the network while being written to fixture files.
//!
//! Fixture layout: `<dir>/<host>/<key>.body` holds the response body
//! verbatim; an optional `<key>.status` holds a non-200 status code. The key
//! is the request path with `/` mapped to `~` and every other byte outside
//! `[A-Za-z0-9._-]` percent-encoded.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use super::transport::{HttpResponse, Transport};
use super::ForgeError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StoreMode {
    Live,
    Recorded(PathBuf),
    RecordWhileLive(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub status: u16,
    pub body: String,
}

pub type Sleeper = Arc<dyn Fn(Duration) + Send + Sync>;

pub struct RateLimitPolicy {
    pub max_retries: u32,
    /// Waits longer than this are reported as `RateLimited` instead.
    pub max_wait: Duration,
}

impl Default for RateLimitPolicy {
    fn default() -> Self {
        RateLimitPolicy {
            max_retries: 3,
            max_wait: Duration::from_secs(120),
        }
    }
}

/// Counting semaphore bounding in-flight requests.
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Gate {
    fn new(n: usize) -> Self {
        Gate {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> GateGuard<'_> {
        let mut free = self.free.lock().unwrap();
        while *free == 0 {
            free = self.cv.wait(free).unwrap();
        }
        *free -= 1;
        GateGuard(self)
    }
}

struct GateGuard<'a>(&'a Gate);

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap() += 1;
        self.0.cv.notify_one();
    }
}

type Slot = Arc<Mutex<Option<Result<Arc<Response>, ForgeError>>>>;

pub struct Store {
    base_url: String,
    host: String,
    mode: StoreMode,
    transport: Option<Arc<dyn Transport>>,
    auth_token: Option<String>,
    memo: Mutex<HashMap<String, Slot>>,
    gate: Gate,
    remote_calls: AtomicUsize,
    policy: RateLimitPolicy,
    sleeper: Sleeper,
}

impl Store {
    /// `transport` is ignored in `Recorded` mode, which never touches the
    /// network.
    pub fn new(
        base_url: &str,
        mode: StoreMode,
        transport: Option<Arc<dyn Transport>>,
        auth_token: Option<String>,
        max_in_flight: usize,
    ) -> Self {
        let base_url = base_url.trim_end_matches('/').to_string();
        let host = base_url
            .split_once("://")
            .map(|(_, rest)| rest)
            .unwrap_or(&base_url)
            .split('/')
            .next()
            .unwrap_or_default()
            .to_string();
        let transport = match mode {
            StoreMode::Recorded(_) => None,
            _ => transport,
        };
        Store {
            base_url,
            host,
            mode,
            transport,
            auth_token,
            memo: Mutex::new(HashMap::new()),
            gate: Gate::new(max_in_flight),
            remote_calls: AtomicUsize::new(0),
            policy: RateLimitPolicy::default(),
            sleeper: Arc::new(std::thread::sleep),
        }
    }

    pub fn with_policy(mut self, policy: RateLimitPolicy, sleeper: Sleeper) -> Self {
        self.policy = policy;
        self.sleeper = sleeper;
        self
    }

    pub fn remote_calls(&self) -> usize {
        self.remote_calls.load(Ordering::SeqCst)
    }

    pub fn is_recorded(&self) -> bool {
        matches!(self.mode, StoreMode::Recorded(_))
    }

    /// Fetches `path` (relative to the base URL, query included).
    pub fn get(&self, path: &str, accept: &str) -> Result<Arc<Response>, ForgeError> {
        let key = format!("{path}\n{accept}");
        let slot = {
            let mut memo = self.memo.lock().unwrap();
            memo.entry(key).or_default().clone()
        };
        // Holding the slot lock makes concurrent identical queries wait for
        // the first answer instead of issuing their own.
        let mut guard = slot.lock().unwrap();
        if let Some(answer) = guard.as_ref() {
            return answer.clone();
        }
        let answer = self.fetch(path, accept).map(Arc::new);
        *guard = Some(answer.clone());
        answer
    }

    fn fetch(&self, path: &str, accept: &str) -> Result<Response, ForgeError> {
        match &self.mode {
            StoreMode::Recorded(dir) => self.read_fixture(dir, path),
            StoreMode::Live => self.fetch_live(path, accept),
            StoreMode::RecordWhileLive(dir) => {
                let resp = self.fetch_live(path, accept)?;
                self.write_fixture(dir, path, &resp)?;
                Ok(resp)
            }
        }
    }

    fn fetch_live(&self, path: &str, accept: &str) -> Result<Response, ForgeError> {
        let transport = self
            .transport
            .as_ref()
            .ok_or_else(|| ForgeError::Unavailable("no transport configured".into()))?;
        let url = format!("{}/{}", self.base_url, path.trim_start_matches('/'));
        let auth = self.auth_token.as_ref().map(|t| format!("Bearer {t}"));
        let mut headers: Vec<(&str, &str)> = vec![("Accept", accept)];
        if let Some(auth) = &auth {
            headers.push(("Authorization", auth));
        }
        let mut attempt = 0;
        loop {
            let resp = {
                let _permit = self.gate.acquire();
                self.remote_calls.fetch_add(1, Ordering::SeqCst);
                transport.get(&url, &headers).map_err(ForgeError::Network)?
            };
            match rate_limit_wait(&resp) {
                None => {
                    return Ok(Response {
                        status: resp.status,
                        body: resp.body,
                    })
                }
                Some(wait) => {
                    if attempt >= self.policy.max_retries || wait > self.policy.max_wait {
                        return Err(ForgeError::RateLimited {
                            retry_after: Some(wait),
                        });
                    }
                    attempt += 1;
                    log::warn!("rate limited on {url}, waiting {}s", wait.as_secs());
                    (self.sleeper)(wait);
                }
            }
        }
    }

    /// `<dir>/<host>/<key>.<suffix>`; keys may contain dots, so the suffix
    /// is appended rather than set as an extension.
    fn fixture_path(&self, dir: &Path, path: &str, suffix: &str) -> PathBuf {
        dir.join(&self.host)
            .join(format!("{}.{suffix}", fixture_key(path)))
    }

    fn read_fixture(&self, dir: &Path, path: &str) -> Result<Response, ForgeError> {
        let body_path = self.fixture_path(dir, path, "body");
        let status_path = self.fixture_path(dir, path, "status");
        let status = match fs::read_to_string(&status_path) {
            Ok(s) => s.trim().parse().map_err(|_| {
                ForgeError::Decode(format!("bad status file {}", status_path.display()))
            })?,
            Err(_) => 200,
        };
        match fs::read_to_string(&body_path) {
            Ok(body) => Ok(Response { status, body }),
            Err(_) if status != 200 => Ok(Response {
                status,
                body: String::new(),
            }),
            Err(_) => Err(ForgeError::FixtureMiss(format!("{}/{path}", self.host))),
        }
    }

    fn write_fixture(&self, dir: &Path, path: &str, resp: &Response) -> Result<(), ForgeError> {
        let body_path = self.fixture_path(dir, path, "body");
        let parent = body_path.parent().unwrap_or(dir);
        fs::create_dir_all(parent).map_err(|e| ForgeError::Io(e.to_string()))?;
        atomic_write(&body_path, resp.body.as_bytes())?;
        if resp.status != 200 {
            let status_path = self.fixture_path(dir, path, "status");
            atomic_write(&status_path, resp.status.to_string().as_bytes())?;
        }
        Ok(())
    }
}

fn atomic_write(target: &Path, bytes: &[u8]) -> Result<(), ForgeError> {
    let mut tmp = target.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, target)
    })();
    result.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        ForgeError::Io(format!("{}: {e}", target.display()))
    })
}

/// File name (without extension) used to store a request path.
pub fn fixture_key(path: &str) -> String {
    let mut out = String::with_capacity(path.len());
    for b in path.trim_start_matches('/').bytes() {
        match b {
            b'/' => out.push('~'),
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'.' | b'-' | b'_' => out.push(b as char),
            other => out.push_str(&format!("%{other:02X}")),
        }
    }
    out
}

/// How long to wait before retrying, when the response signals throttling.
fn rate_limit_wait(resp: &HttpResponse) -> Option<Duration> {
    let throttled = resp.status == 429
        || (resp.status == 403
            && (resp.header("x-ratelimit-remaining") == Some("0")
                || resp.header("retry-after").is_some()));
    if !throttled {
        return None;
    }
    if let Some(secs) = resp
        .header("retry-after")
        .and_then(|v| v.trim().parse::<u64>().ok())
    {
        return Some(Duration::from_secs(secs));
    }
    if let Some(reset) = resp
        .header("x-ratelimit-reset")
        .and_then(|v| v.trim().parse::<u64>().ok())
    {
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        return Some(Duration::from_secs(reset.saturating_sub(now).max(1)));
    }
    // Secondary limits without a hint: wait a minute.
    Some(Duration::from_secs(60))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Mutex as StdMutex;

    struct Scripted {
        responses: StdMutex<Vec<HttpResponse>>,
        calls: AtomicUsize,
    }

    impl Transport for Scripted {
        fn get(&self, _: &str, _: &[(&str, &str)]) -> Result<HttpResponse, String> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            let mut r = self.responses.lock().unwrap();
            if r.len() > 1 {
                Ok(r.remove(0))
            } else {
                Ok(r[0].clone())
            }
        }
    }

    fn scripted(responses: Vec<HttpResponse>) -> Arc<Scripted> {
        Arc::new(Scripted {
            responses: StdMutex::new(responses),
            calls: AtomicUsize::new(0),
        })
    }

    #[test]
    fn key_escaping() {
        assert_eq!(
            fixture_key("repos/a/b/contents/.github/workflows"),
            "repos~a~b~contents~.github~workflows"
        );
        assert_eq!(
            fixture_key("repos/a/b/tags?per_page=100"),
            "repos~a~b~tags%3Fper_page%3D100"
        );
    }

    #[test]
    fn repeated_queries_hit_memo() {
        let t = scripted(vec![HttpResponse::ok("x")]);
        let store = Store::new(
            "https://api.example",
            StoreMode::Live,
            Some(t.clone()),
            None,
            2,
        );
        let a = store.get("p", "a").unwrap();
        let b = store.get("p", "a").unwrap();
        assert_eq!(a, b);
        assert_eq!(t.calls.load(Ordering::SeqCst), 1);
        assert_eq!(store.remote_calls(), 1);
    }

    #[test]
    fn backs_off_on_retry_after() {
        let mut limited = HttpResponse::status(429);
        limited.headers.push(("retry-after".into(), "7".into()));
        let t = scripted(vec![limited, HttpResponse::ok("done")]);
        let slept = Arc::new(StdMutex::new(Vec::new()));
        let s2 = slept.clone();
        let store = Store::new(
            "https://api.example",
            StoreMode::Live,
            Some(t.clone()),
            None,
            1,
        )
        .with_policy(
            RateLimitPolicy::default(),
            Arc::new(move |d| s2.lock().unwrap().push(d)),
        );
        assert_eq!(store.get("p", "a").unwrap().body, "done");
        assert_eq!(*slept.lock().unwrap(), vec![Duration::from_secs(7)]);
        assert_eq!(t.calls.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn gives_up_after_retries() {
        let mut limited = HttpResponse::status(403);
        limited
            .headers
            .push(("x-ratelimit-remaining".into(), "0".into()));
        limited.headers.push(("retry-after".into(), "1".into()));
        let t = scripted(vec![limited]);
        let store = Store::new(
            "https://api.example",
            StoreMode::Live,
            Some(t.clone()),
            None,
            1,
        )
        .with_policy(
            RateLimitPolicy {
                max_retries: 2,
                max_wait: Duration::from_secs(10),
            },
            Arc::new(|_| {}),
        );
        assert!(matches!(
            store.get("p", "a"),
            Err(ForgeError::RateLimited { .. })
        ));
        assert_eq!(t.calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn recorded_mode_reads_fixtures_and_never_calls_transport() {
        let dir = tempfile::tempdir().unwrap();
        let host = dir.path().join("api.example");
        fs::create_dir_all(&host).unwrap();
        fs::write(host.join("repos~a~b.body"), "{}").unwrap();
        fs::write(host.join("repos~a~gone.status"), "404").unwrap();
        fs::write(host.join("repos~a~b~commits~v3.1.0.body"), "sha").unwrap();
        let t = scripted(vec![HttpResponse::ok("live")]);
        let store = Store::new(
            "https://api.example",
            StoreMode::Recorded(dir.path().to_path_buf()),
            Some(t.clone()),
            None,
            1,
        );
        assert_eq!(store.get("repos/a/b", "x").unwrap().body, "{}");
        assert_eq!(store.get("repos/a/gone", "x").unwrap().status, 404);
        assert_eq!(
            store.get("repos/a/b/commits/v3.1.0", "x").unwrap().body,
            "sha"
        );
        assert!(matches!(
            store.get("repos/a/c", "x"),
            Err(ForgeError::FixtureMiss(_))
        ));
        assert_eq!(t.calls.load(Ordering::SeqCst), 0);
        assert_eq!(store.remote_calls(), 0);
    }

    #[test]
    fn record_while_live_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let t = scripted(vec![HttpResponse::ok("payload"), HttpResponse::status(404)]);
        let live = Store::new(
            "https://api.example",
            StoreMode::RecordWhileLive(dir.path().to_path_buf()),
            Some(t),
            Some("secret-token".into()),
            1,
        );
        live.get("one", "a").unwrap();
        live.get("two", "a").unwrap();
        let replay = Store::new(
            "https://api.example",
            StoreMode::Recorded(dir.path().to_path_buf()),
            None,
            None,
            1,
        );
        assert_eq!(replay.get("one", "a").unwrap().body, "payload");
        assert_eq!(replay.get("two", "a").unwrap().status, 404);
        for entry in walk(dir.path()) {
            let text = fs::read_to_string(entry).unwrap();
            assert!(!text.contains("secret-token"));
        }
    }

    fn walk(dir: &Path) -> Vec<PathBuf> {
        let mut out = Vec::new();
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                out.extend(walk(&p));
            } else {
                out.push(p);
            }
        }
        out
    }
}
