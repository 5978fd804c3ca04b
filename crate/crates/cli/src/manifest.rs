//! `manifest.json`: written with status `running` before an experiment starts
//! and rewritten once it ends, so an interrupted run is recognisable.

use std::path::Path;

use chrono::{SecondsFormat, Utc};
use serde::Serialize;

use v2xsim_core::engine::ScenarioConfig;

use crate::Failure;

pub const FILE: &str = "manifest.json";

#[derive(Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Running,
    Complete,
    Failed,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub status: Status,
    pub tool_version: String,
    pub master_seed: u64,
    pub started_at: String,
    pub finished_at: Option<String>,
    pub outputs: Vec<String>,
    pub error: Option<String>,
    pub config: ScenarioConfig,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl Manifest {
    pub fn start(command: &str, version: &str, cfg: &ScenarioConfig) -> Self {
        Self {
            command: command.to_string(),
            status: Status::Running,
            tool_version: version.to_string(),
            master_seed: cfg.master_seed,
            started_at: now(),
            finished_at: None,
            outputs: Vec::new(),
            error: None,
            config: cfg.clone(),
        }
    }

    pub fn finish(&mut self, outputs: Vec<String>, error: Option<String>) {
        self.status = if error.is_some() { Status::Failed } else { Status::Complete };
        self.finished_at = Some(now());
        self.outputs = outputs;
        self.error = error;
    }

    /// Replaces the file atomically so readers never see a partial manifest.
    pub fn write(&self, out: &Path) -> Result<(), Failure> {
        let fail = |e: &dyn std::fmt::Display| Failure::Runtime(format!("cannot write manifest in {}: {e}", out.display()));
        let text = serde_json::to_string_pretty(self).map_err(|e| fail(&e))?;
        let tmp = out.join(format!("{FILE}.tmp"));
        std::fs::write(&tmp, text + "\n").map_err(|e| fail(&e))?;
        std::fs::rename(&tmp, out.join(FILE)).map_err(|e| fail(&e))
    }
}
