//! Shared test support for the workspace.

pub mod fixtures;
pub mod gen;
pub mod oracle;
