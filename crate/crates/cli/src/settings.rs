//! Flat key-value configuration with flags > file > defaults precedence.

use serde::Deserialize;
use std::path::Path;

/// Optional overrides read from the TOML config file. Every key is also
/// a CLI flag; unset values fall back to built-in defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub single_fraction: Option<f64>,
    pub adjacent_confusion: Option<f64>,
    pub cap_ms: Option<i64>,
    pub strict: Option<bool>,
    pub alpha: Option<f64>,
    pub grid_step: Option<f64>,
    pub keep_fraction: Option<f64>,
    pub min_pair_rows: Option<usize>,
    pub gbt_rounds: Option<usize>,
    pub gbt_depth: Option<usize>,
    pub gbt_eta: Option<f64>,
    pub gbt_lambda: Option<f64>,
    pub gbt_gamma: Option<f64>,
    pub short_dwell_lt: Option<f64>,
    pub jaccard_tokens: Option<String>,
    pub bootstrap_n: Option<usize>,
    pub coverage_target: Option<f64>,
    pub lime_samples: Option<usize>,
    pub lime_top_k: Option<usize>,
    pub hot_frequency: Option<f64>,
    pub cold_frequency: Option<f64>,
    pub short_duration_ms: Option<f64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        match path {
            None => Ok(FileConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", p.display()))?;
                Ok(toml::from_str(&text)
                    .map_err(|e| anyhow::anyhow!("bad config {}: {e}", p.display()))?)
            }
        }
    }
}

/// flags > file > default
pub fn pick<T: Copy>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}
