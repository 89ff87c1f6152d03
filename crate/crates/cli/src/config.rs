//! Run configuration: a structured document (JSON or TOML) merged with CLI
//! flag overrides.  Flags win over file values.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use impulse_core::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub schema_version: Option<u32>,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub simulation: SimSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    /// "threshold" or "band" (usually implied by the model).
    #[serde(default)]
    pub kind: Option<String>,
    #[serde(default)]
    pub window: Option<(f64, f64)>,
    #[serde(default)]
    pub a_grid_points: Option<usize>,
    #[serde(default)]
    pub qc_grid: Option<usize>,
    #[serde(default)]
    pub pd_grid: Option<usize>,
    #[serde(default)]
    pub q_range: Option<(f64, f64)>,
    #[serde(default)]
    pub c_range: Option<(f64, f64)>,
    #[serde(default)]
    pub curve_range: Option<(f64, f64)>,
    #[serde(default)]
    pub curve_samples: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default)]
    pub paths: Option<usize>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub bridge_correction: Option<bool>,
    #[serde(default)]
    pub antithetic: Option<bool>,
    #[serde(default)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub out_dir: Option<String>,
}

impl RunConfig {
    /// Load a JSON or TOML config, decided by extension (falling back to
    /// trying both parsers).
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let by_ext = path.extension().and_then(|s| s.to_str()).unwrap_or("");
        let parsed: std::result::Result<Self, String> = match by_ext {
            "json" => serde_json::from_str(&text).map_err(|e| e.to_string()),
            "toml" => toml::from_str(&text).map_err(|e| e.to_string()),
            _ => serde_json::from_str(&text)
                .map_err(|e| e.to_string())
                .or_else(|json_err| {
                    toml::from_str(&text)
                        .map_err(|toml_err| format!("json: {json_err}; toml: {toml_err}"))
                }),
        };
        let cfg =
            parsed.map_err(|e| Error::Config(format!("config {}: {e}", path.display())))?;
        if let Some(v) = cfg.schema_version {
            if v != SCHEMA_VERSION {
                return Err(Error::Config(format!(
                    "unsupported config schema_version {v} (expected {SCHEMA_VERSION})"
                )));
            }
        }
        Ok(cfg)
    }
}
