//! Run manifest written next to every output.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use dmdwatch::background::SeparationConfig;
use dmdwatch::synth::SyntheticScenario;
use dmdwatch::window::WindowConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectorSettings {
    pub threshold: f64,
    pub cooldown: usize,
    pub suppression: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationSettings {
    pub window: usize,
    #[serde(flatten)]
    pub config: SeparationConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationSettings {
    pub d_star: usize,
    pub c: f64,
    pub half_second_tol: usize,
    pub cooldown: usize,
    pub suppression: bool,
    /// `[min, max, count]` of the linear threshold grid, when one was used.
    pub grid: Option<(f64, f64, usize)>,
    pub folds: Option<usize>,
    pub cv_seed: Option<u64>,
}

/// Every setting that determines a run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub inputs: Vec<String>,
    pub window: WindowConfig,
    pub fps: f64,
    pub operator_seed: u64,
    pub parallel: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detector: Option<DetectorSettings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub separation: Option<SeparationSettings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<EvaluationSettings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<SyntheticScenario>,
}

impl RunManifest {
    pub fn new(command: &str, inputs: Vec<String>, window: WindowConfig, fps: f64, operator_seed: u64) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            inputs,
            window,
            fps,
            operator_seed,
            parallel: dmdwatch::parallel::is_parallel(),
            detector: None,
            separation: None,
            evaluation: None,
            scenario: None,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}
