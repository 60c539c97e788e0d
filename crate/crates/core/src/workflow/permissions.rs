use std::collections::BTreeMap;

use super::vocabulary::PERMISSION_SCOPES;
use crate::yaml::{Node, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum AccessLevel {
    None,
    Read,
    Write,
    /// Anything outside read/write/none, preserved for reporting.
    Unknown,
}

impl AccessLevel {
    fn parse(s: &str) -> AccessLevel {
        match s.trim() {
            "read" => AccessLevel::Read,
            "write" => AccessLevel::Write,
            "none" => AccessLevel::None,
            _ => AccessLevel::Unknown,
        }
    }
}

/// A `permissions:` block at workflow or job level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PermissionDecl {
    /// `permissions: {}`: the token gets no scopes at all.
    None,
    ReadAll,
    WriteAll,
    Scoped(BTreeMap<String, AccessLevel>),
}

impl PermissionDecl {
    pub(crate) fn from_node(node: &Node) -> PermissionDecl {
        match &node.value {
            Value::Scalar(s) => match s.trim() {
                "read-all" => PermissionDecl::ReadAll,
                "write-all" => PermissionDecl::WriteAll,
                _ => PermissionDecl::Scoped(BTreeMap::new()),
            },
            Value::Map(entries) if entries.is_empty() => PermissionDecl::None,
            Value::Map(entries) => PermissionDecl::Scoped(
                entries
                    .iter()
                    .filter_map(|(k, v)| {
                        let level = v.as_str().map(AccessLevel::parse)?;
                        Some((k.as_str()?.to_string(), level))
                    })
                    .collect(),
            ),
            Value::Null | Value::Seq(_) => PermissionDecl::None,
        }
    }

    /// Scopes not in the documented vocabulary.
    pub fn unknown_scopes(&self) -> Vec<&str> {
        match self {
            PermissionDecl::Scoped(map) => map
                .keys()
                .map(String::as_str)
                .filter(|k| !PERMISSION_SCOPES.contains(k))
                .collect(),
            _ => Vec::new(),
        }
    }
}
