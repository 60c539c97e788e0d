//! Python dependency manifests: `requirements.txt` and `pyproject.toml`.
//! Version specifiers, extras and markers are dropped; only names remain.

pub const MANIFEST_FILES: [&str; 2] = ["pyproject.toml", "requirements.txt"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub file_name: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{file}: {message}")]
pub struct ManifestError {
    pub file: String,
    pub message: String,
}

/// Lowercase with runs of `-`, `_` and `.` collapsed to `-`.
pub fn normalize_package_name(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    let mut pending_sep = false;
    for c in name.trim().chars() {
        if matches!(c, '-' | '_' | '.') {
            pending_sep = true;
        } else {
            if pending_sep && !out.is_empty() {
                out.push('-');
            }
            pending_sep = false;
            out.push(c.to_ascii_lowercase());
        }
    }
    out
}

/// Name part of a requirement string such as `requests[socks]>=2; python_version<"3.8"`.
pub fn requirement_name(spec: &str) -> Option<String> {
    let spec = spec.trim();
    let end = spec
        .find(|c: char| !(c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.')))
        .unwrap_or(spec.len());
    let name = &spec[..end];
    if name.is_empty() || !name.starts_with(|c: char| c.is_ascii_alphanumeric()) {
        return None;
    }
    // Local paths and archive URLs are not registry packages.
    let rest = spec[end..].trim_start();
    if rest.starts_with("://") || rest.starts_with('/') {
        return None;
    }
    Some(normalize_package_name(name))
}

fn parse_requirements(content: &str) -> Vec<String> {
    content
        .lines()
        .filter_map(|line| {
            let line = match line
                .find(" #")
                .or_else(|| line.starts_with('#').then_some(0))
            {
                Some(i) => &line[..i],
                None => line,
            };
            let line = line.trim();
            let bare_url = line.contains("://") && !line.contains(" @ ");
            if line.is_empty() || line.starts_with(['-', '.', '/']) || bare_url {
                return None;
            }
            requirement_name(line)
        })
        .collect()
}

fn parse_pyproject(content: &str) -> Result<Vec<String>, String> {
    let doc: toml::Table = toml::from_str(content).map_err(|e| e.to_string())?;
    let mut names = Vec::new();
    if let Some(deps) = doc
        .get("project")
        .and_then(|p| p.get("dependencies"))
        .and_then(|d| d.as_array())
    {
        names.extend(
            deps.iter()
                .filter_map(|d| d.as_str())
                .filter_map(requirement_name),
        );
    }
    if let Some(deps) = doc
        .get("tool")
        .and_then(|t| t.get("poetry"))
        .and_then(|p| p.get("dependencies"))
        .and_then(|d| d.as_table())
    {
        names.extend(
            deps.keys()
                .filter(|k| !k.eq_ignore_ascii_case("python"))
                .map(|k| normalize_package_name(k)),
        );
    }
    Ok(names)
}

/// Package names declared by one manifest, deduplicated in first-seen order.
pub fn dependencies(manifest: &Manifest) -> Result<Vec<String>, ManifestError> {
    let names = match manifest.file_name.as_str() {
        "requirements.txt" => parse_requirements(&manifest.content),
        "pyproject.toml" => {
            parse_pyproject(&manifest.content).map_err(|message| ManifestError {
                file: manifest.file_name.clone(),
                message,
            })?
        }
        other => {
            return Err(ManifestError {
                file: other.to_string(),
                message: "unsupported manifest".into(),
            })
        }
    };
    let mut out: Vec<String> = Vec::new();
    for n in names {
        if !out.contains(&n) {
            out.push(n);
        }
    }
    Ok(out)
}
