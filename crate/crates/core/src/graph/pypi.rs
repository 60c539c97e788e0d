use std::collections::BTreeMap;

use serde::Deserialize;

use super::PackageResolver;
use crate::forge::{encode, ForgeConfig, ForgeError, Store, Transport};
use crate::repo::{RepoId, DEFAULT_HOST};

pub const PYPI_BASE: &str = "https://pypi.org";

/// Project URL labels checked first, in this order. Any other label whose
/// value is a repository URL is used after these, then `home_page`.
const PREFERRED_LABELS: [&str; 7] = [
    "source",
    "source code",
    "repository",
    "code",
    "github",
    "homepage",
    "home",
];

/// Path owners that are site sections rather than accounts.
const NOT_OWNERS: [&str; 6] = [
    "sponsors",
    "orgs",
    "features",
    "marketplace",
    "apps",
    "topics",
];

#[derive(Deserialize)]
struct Project {
    info: Info,
}

#[derive(Deserialize)]
struct Info {
    project_urls: Option<BTreeMap<String, Option<String>>>,
    home_page: Option<String>,
}

/// Maps package names to repositories via the registry's JSON metadata.
pub struct PypiResolver {
    store: Store,
}

impl PypiResolver {
    pub fn new(
        config: &ForgeConfig,
        transport: Option<std::sync::Arc<dyn Transport>>,
    ) -> Result<Self, ForgeError> {
        Ok(PypiResolver {
            store: config.store(PYPI_BASE, transport, false)?,
        })
    }

    pub fn remote_calls(&self) -> usize {
        self.store.remote_calls()
    }
}

impl PackageResolver for PypiResolver {
    fn resolve(&self, package: &str) -> Result<Option<RepoId>, ForgeError> {
        let resp = self.store.get(
            &format!("pypi/{}/json", encode(package)),
            "application/json",
        )?;
        match resp.status {
            200 => {}
            404 => return Ok(None),
            status => {
                return Err(ForgeError::Http {
                    status,
                    path: format!("pypi/{package}/json"),
                })
            }
        }
        let project: Project =
            serde_json::from_str(&resp.body).map_err(|e| ForgeError::Decode(e.to_string()))?;
        Ok(repository_from_metadata(
            &project.info.project_urls.unwrap_or_default(),
            project.info.home_page.as_deref(),
        ))
    }
}

fn as_repo(url: &str) -> Option<RepoId> {
    if !url.contains("://") && !url.starts_with("git@") {
        return None;
    }
    RepoId::parse(url).filter(|r| {
        r.host == DEFAULT_HOST && !NOT_OWNERS.contains(&r.owner.to_ascii_lowercase().as_str())
    })
}

/// The repository named by a package's metadata, if any.
pub fn repository_from_metadata(
    project_urls: &BTreeMap<String, Option<String>>,
    home_page: Option<&str>,
) -> Option<RepoId> {
    let labelled: Vec<(String, &str)> = project_urls
        .iter()
        .filter_map(|(k, v)| Some((k.trim().to_ascii_lowercase(), v.as_deref()?)))
        .collect();
    let preferred = PREFERRED_LABELS.iter().find_map(|label| {
        labelled
            .iter()
            .filter(|(k, _)| k == label)
            .find_map(|(_, v)| as_repo(v))
    });
    preferred
        .or_else(|| labelled.iter().find_map(|(_, v)| as_repo(v)))
        .or_else(|| home_page.and_then(as_repo))
}
