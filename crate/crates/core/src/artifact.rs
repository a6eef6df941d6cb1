//! Versioned model artifact: one JSON document holding the trained
//! models plus every statistic prediction needs (feature config, dwell
//! cap, imputation medians, standardization, training marginals, query
//! stats, page-metric cuts).

use crate::eval::PageCuts;
use crate::explain::TrainMarginals;
use crate::features::{FeatureConfig, FeatureId, QueryStatsTable, ReducedId};
use crate::hybrid::{FinalModel, PredictContext};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Current artifact format version.
pub const FORMAT_VERSION: u32 = 1;

/// The single persisted model document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format_version: u32,
    pub model_kind: String,
    pub class_list: Vec<usize>,
    pub feature_schema: Vec<String>,
    pub reduced_schema: Vec<String>,
    pub feature_config: FeatureConfig,
    pub dwell_cap_ms: i64,
    /// Median imputation for the full feature slots.
    pub imputation_stats: Vec<f64>,
    /// Post-imputation (mean, stddev) per full slot.
    pub standardization_stats: Vec<(f64, f64)>,
    /// Training marginals for explanation.
    pub marginals: TrainMarginals,
    pub query_stats: QueryStatsTable,
    /// Training quantile cuts mapping page metrics onto labels.
    pub page_cuts: PageCuts,
    pub model: FinalModel,
}

impl ModelArtifact {
    pub fn schema_names() -> Vec<String> {
        FeatureId::ALL.iter().map(|f| f.name().to_string()).collect()
    }

    pub fn reduced_names() -> Vec<String> {
        ReducedId::ALL.iter().map(|f| f.name().to_string()).collect()
    }

    pub fn predict_context(&self) -> PredictContext {
        PredictContext {
            feature_config: self.feature_config.clone(),
            imputation: self.imputation_stats.clone(),
            query_stats: self.query_stats.clone(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut writer = std::io::BufWriter::new(file);
        serde_json::to_writer(&mut writer, self)?;
        use std::io::Write;
        writer.write_all(b"\n")?;
        writer.flush()?;
        Ok(())
    }

    /// Load and version-check an artifact. A missing file is reported as
    /// `model.NotFound`; an unknown format version is rejected.
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::ModelNotFound(path.display().to_string()));
        }
        let data = std::fs::read_to_string(path)?;

        #[derive(Deserialize)]
        struct Probe {
            format_version: u32,
        }
        let probe: Probe = serde_json::from_str(&data)?;
        if probe.format_version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: probe.format_version,
                supported: FORMAT_VERSION,
            });
        }
        Ok(serde_json::from_str(&data)?)
    }
}
