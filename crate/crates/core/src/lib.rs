//! Security analyzer for GitHub Actions workflows across a project's
//! software supply chain.
pub mod checks;
pub mod exploitability;
pub mod forge;
pub mod graph;
pub mod repo;
pub mod report;
pub mod scan;
pub mod workflow;
pub mod yaml;
