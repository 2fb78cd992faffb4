//! CSV and JSON emission. Every CSV row carries the artifact version and the
//! config hash; nothing time-dependent is written, so equal seeds and configs
//! give byte-identical files.

use std::fs;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::{CliError, CliResult, Context, ARTIFACT_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.to_string(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Everything a subcommand produces.
pub struct Outcome {
    pub config: Value,
    pub table: Table,
    pub result: Value,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn new<C: Serialize, R: Serialize>(config: &C, table: Table, result: &R, checks: Vec<Check>) -> CliResult<Self> {
        Ok(Outcome { config: serde_json::to_value(config)?, table, result: serde_json::to_value(result)?, checks })
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn config_hash(&self, ctx: &Context) -> CliResult<String> {
        let canonical = serde_json::to_string(&json!({ "command": ctx.command, "seed": ctx.seed, "config": self.config }))?;
        Ok(Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn write(&self, ctx: &Context) -> CliResult<()> {
        fs::create_dir_all(&ctx.out).map_err(|source| CliError::Io { path: ctx.out.clone(), source })?;
        let hash = self.config_hash(ctx)?;
        let csv_path = ctx.path("csv");
        let mut w = csv::Writer::from_path(&csv_path)?;
        let mut header = vec!["artifact_version".to_string(), "config_hash".to_string()];
        header.extend(self.table.columns.iter().cloned());
        w.write_record(&header)?;
        for row in &self.table.rows {
            let mut r = vec![ARTIFACT_VERSION.to_string(), hash.clone()];
            r.extend(row.iter().cloned());
            w.write_record(&r)?;
        }
        w.flush().map_err(|source| CliError::Io { path: csv_path.clone(), source })?;
        let summary = json!({
            "command": ctx.command,
            "artifact_version": ARTIFACT_VERSION,
            "config_hash": hash,
            "seed": ctx.seed,
            "config": self.config,
            "passed": self.passed(),
            "checks": self.checks,
            "result": self.result,
        });
        let json_path = ctx.path("json");
        fs::write(&json_path, serde_json::to_string_pretty(&summary)? + "\n")
            .map_err(|source| CliError::Io { path: json_path.clone(), source })?;
        if !ctx.quiet {
            println!("{} (seed {}, config {})", ctx.command, ctx.seed, &hash[..12]);
            for c in &self.checks {
                println!("  {} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            println!("  wrote {} and {}", csv_path.display(), json_path.display());
        }
        Ok(())
    }
}
