//! Run manifest: the resolved configuration and provenance of one result
//! directory. Exactly one manifest is written per emitted directory.

use std::path::Path;

use anyhow::Result;
use cytoseg_core::pipeline::{PipelineConfig, StageTimings};
use serde::Serialize;

#[derive(Serialize)]
pub struct RunManifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub created: String,
    pub input: String,
    pub jobs: Option<usize>,
    pub config: &'a PipelineConfig,
    pub timings: StageTimings,
}

impl<'a> RunManifest<'a> {
    pub fn new(
        input: &Path,
        jobs: Option<usize>,
        config: &'a PipelineConfig,
        timings: StageTimings,
    ) -> Self {
        RunManifest {
            tool: "cytoseg",
            version: env!("CARGO_PKG_VERSION"),
            created: chrono::Utc::now().to_rfc3339(),
            input: input.display().to_string(),
            jobs,
            config,
            timings,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(dir.join("manifest.json"), json)?;
        Ok(())
    }
}
