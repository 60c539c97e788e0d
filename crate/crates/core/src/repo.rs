use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const DEFAULT_HOST: &str = "github.com";

/// A code repository on a forge, e.g. `github.com/pallets/flask`.
/// Serialized as that `host/owner/name` string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RepoId {
    pub host: String,
    pub owner: String,
    pub name: String,
}

impl RepoId {
    pub fn new(host: &str, owner: &str, name: &str) -> Self {
        RepoId {
            host: host.to_ascii_lowercase(),
            owner: owner.to_string(),
            name: name.to_string(),
        }
    }

    pub fn github(owner: &str, name: &str) -> Self {
        RepoId::new(DEFAULT_HOST, owner, name)
    }

    /// Parses `owner/name`, `host/owner/name`, forge URLs (`https://`,
    /// `git+https://`, `git@host:owner/name.git`) and trims `.git` and any
    /// trailing path such as `/tree/main`.
    pub fn parse(input: &str) -> Option<RepoId> {
        let mut s = input.trim();
        if s.is_empty() {
            return None;
        }
        s = s.strip_prefix("git+").unwrap_or(s);
        let (rest, has_host) = if let Some(scp) = s.strip_prefix("git@") {
            (scp.replacen(':', "/", 1), true)
        } else if let Some((_, after)) = s.split_once("://") {
            (after.to_string(), true)
        } else {
            (s.to_string(), false)
        };
        let parts: Vec<&str> = rest
            .split(['/', '#', '?'])
            .filter(|p| !p.is_empty())
            .collect();
        let (host, owner, name) = match parts.as_slice() {
            [owner, name] if !has_host => (DEFAULT_HOST, *owner, *name),
            [host, owner, name, ..] if host.contains('.') => (*host, *owner, *name),
            _ => return None,
        };
        let host = host.rsplit('@').next().unwrap_or(host);
        let host = host.strip_prefix("www.").unwrap_or(host);
        let name = name.strip_suffix(".git").unwrap_or(name);
        if owner.is_empty() || name.is_empty() {
            return None;
        }
        Some(RepoId::new(host, owner, name))
    }

    pub fn slug(&self) -> String {
        format!("{}/{}", self.owner, self.name)
    }

    /// Case-insensitive identity used for deduplication.
    pub fn canonical(&self) -> RepoId {
        RepoId {
            host: self.host.to_ascii_lowercase(),
            owner: self.owner.to_ascii_lowercase(),
            name: self.name.to_ascii_lowercase(),
        }
    }
}

impl fmt::Display for RepoId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.host, self.owner, self.name)
    }
}

impl Serialize for RepoId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RepoId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        match text.split('/').collect::<Vec<_>>().as_slice() {
            [host, owner, name] if [host, owner, name].iter().all(|p| !p.is_empty()) => {
                Ok(RepoId::new(host, owner, name))
            }
            _ => Err(serde::de::Error::custom(format!(
                "not host/owner/name: {text}"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_common_forms() {
        let want = RepoId::github("pallets", "flask");
        for input in [
            "pallets/flask",
            "github.com/pallets/flask",
            "https://github.com/pallets/flask",
            "https://github.com/pallets/flask.git",
            "https://www.github.com/pallets/flask/tree/main/src",
            "git+https://github.com/pallets/flask.git",
            "git@github.com:pallets/flask.git",
        ] {
            assert_eq!(RepoId::parse(input), Some(want.clone()), "{input}");
        }
        assert_eq!(
            RepoId::parse("https://gitlab.com/a/b").unwrap().host,
            "gitlab.com"
        );
        assert_eq!(RepoId::parse("flask"), None);
        assert_eq!(RepoId::parse("https://example.org/project"), None);
        assert_eq!(RepoId::parse(""), None);
    }

    #[test]
    fn serializes_as_string() {
        let id = RepoId::new("local", "local", "project");
        let json = serde_json::to_string(&id).unwrap();
        assert_eq!(json, "\"local/local/project\"");
        assert_eq!(serde_json::from_str::<RepoId>(&json).unwrap(), id);
        assert!(serde_json::from_str::<RepoId>("\"a/b\"").is_err());
    }
}
