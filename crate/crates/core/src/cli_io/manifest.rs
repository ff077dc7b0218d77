use serde::Serialize;

use super::config::RunConfig;

/// Provenance record written next to (or embedded in) every output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_digest: String,
    pub master_seed: u64,
    pub tool_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub started_at: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finished_at: Option<String>,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn start(command: &str, config: &RunConfig, timestamps: bool) -> Self {
        Self {
            command: command.to_string(),
            config_digest: config.digest(),
            master_seed: config.seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_at: timestamps.then(now),
            finished_at: None,
        }
    }

    pub fn finish(mut self) -> Self {
        if self.started_at.is_some() {
            self.finished_at = Some(now());
        }
        self
    }
}
