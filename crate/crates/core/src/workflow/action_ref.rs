use std::fmt;

/// The version selector after `@` in a `uses:` reference.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RefKind {
    Tag(String),
    Branch(String),
    /// Exactly 40 lowercase hex characters.
    CommitSha(String),
    LocalPath(String),
    DockerImage(String),
}

impl RefKind {
    /// Classifies a ref string. Tags and branches cannot be told apart
    /// syntactically; version-looking refs and `latest` are taken as tags.
    pub fn classify(reference: &str) -> RefKind {
        if is_commit_sha(reference) {
            RefKind::CommitSha(reference.to_ascii_lowercase())
        } else if looks_like_version(reference) || reference == "latest" {
            RefKind::Tag(reference.to_string())
        } else {
            RefKind::Branch(reference.to_string())
        }
    }

    /// The ref as it would be passed to the forge.
    pub fn as_query(&self) -> Option<&str> {
        match self {
            RefKind::Tag(s) | RefKind::Branch(s) | RefKind::CommitSha(s) => Some(s),
            RefKind::LocalPath(_) | RefKind::DockerImage(_) => None,
        }
    }

    pub fn is_pinned(&self) -> bool {
        matches!(self, RefKind::CommitSha(_))
    }
}

pub fn is_commit_sha(s: &str) -> bool {
    s.len() == 40 && s.bytes().all(|b| b.is_ascii_hexdigit())
}

fn looks_like_version(s: &str) -> bool {
    let s = s
        .strip_prefix('v')
        .or_else(|| s.strip_prefix('V'))
        .unwrap_or(s);
    s.chars().next().is_some_and(|c| c.is_ascii_digit())
}

/// A parsed `uses:` reference to an action or reusable workflow.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionRef {
    pub owner: String,
    pub repo: String,
    pub subpath: Option<String>,
    pub reference: RefKind,
}

impl ActionRef {
    pub fn parse(uses: &str) -> ActionRef {
        let uses = uses.trim();
        if uses.starts_with("./") || uses.starts_with("../") || uses == "." {
            return ActionRef {
                owner: String::new(),
                repo: String::new(),
                subpath: Some(uses.to_string()),
                reference: RefKind::LocalPath(uses.to_string()),
            };
        }
        if let Some(image) = uses.strip_prefix("docker://") {
            return ActionRef {
                owner: String::new(),
                repo: String::new(),
                subpath: None,
                reference: RefKind::DockerImage(image.to_string()),
            };
        }
        let (path, reference) = match uses.rsplit_once('@') {
            Some((p, r)) => (p, RefKind::classify(r)),
            None => (uses, RefKind::Branch(String::new())),
        };
        let mut parts = path.splitn(3, '/');
        let owner = parts.next().unwrap_or_default().to_string();
        let repo = parts.next().unwrap_or_default().to_string();
        let subpath = parts.next().filter(|s| !s.is_empty()).map(str::to_string);
        ActionRef {
            owner,
            repo,
            subpath,
            reference,
        }
    }

    /// Whether pinning checks apply: remote refs only.
    pub fn is_remote(&self) -> bool {
        !matches!(
            self.reference,
            RefKind::LocalPath(_) | RefKind::DockerImage(_)
        ) && !self.owner.is_empty()
            && !self.repo.is_empty()
    }

    pub fn repo_slug(&self) -> String {
        format!("{}/{}", self.owner, self.repo)
    }
}

impl fmt::Display for ActionRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.reference {
            RefKind::LocalPath(p) => f.write_str(p),
            RefKind::DockerImage(i) => write!(f, "docker://{i}"),
            RefKind::Tag(r) | RefKind::Branch(r) | RefKind::CommitSha(r) => {
                write!(f, "{}/{}", self.owner, self.repo)?;
                if let Some(sub) = &self.subpath {
                    write!(f, "/{sub}")?;
                }
                write!(f, "@{r}")
            }
        }
    }
}
