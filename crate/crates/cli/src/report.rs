//! Machine-readable verification reports.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::RunConfig;
use cohq::Conventions;

#[derive(Debug, Clone, Serialize)]
pub struct TestRecord {
    pub name: String,
    pub status: String,
    pub value: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub runtime_ms: u64,
}

impl TestRecord {
    pub fn passed(&self) -> bool {
        self.status == "pass"
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub config: RunConfig,
    pub conventions: Conventions,
    pub tests: Vec<TestRecord>,
    /// Truncation diagnostics (theta term counts, Poincare tail estimates).
    pub truncation: BTreeMap<String, f64>,
    pub overall: String,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.tests.iter().all(|t| t.passed())
    }

    pub fn finalize(&mut self) {
        self.overall = if self.all_passed() { "pass".into() } else { "fail".into() };
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}
