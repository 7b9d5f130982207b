//! Engine configuration: every tunable constant in one TOML document.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::GraphConfig;
use crate::ingest::SeniorityRules;
use crate::lexical::{Bm25Config, Bm25ConfigError};
use crate::pipeline::{FusionConfig, FusionConfigError};
use crate::rerank::{RerankConfig, WeightError};
use crate::vector::{EmbedderSpec, KnnConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Bm25(#[from] Bm25ConfigError),
    #[error(transparent)]
    Fusion(#[from] FusionConfigError),
    #[error("default weights: {0}")]
    Weights(#[from] WeightError),
    #[error("invalid constant {0}")]
    Invalid(&'static str),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub bm25: Bm25Config,
    pub fusion: FusionConfig,
    pub graph: GraphConfig,
    pub embedder: EmbedderSpec,
    pub knn: KnnConfig,
    pub rerank: RerankConfig,
    pub seniority: SeniorityRules,
}

impl EngineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: EngineConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("engine config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.bm25.validate()?;
        self.fusion.validate()?;
        self.rerank.default_weights.normalized()?;
        if self
            .graph
            .hop_weights
            .iter()
            .any(|w| !(w.is_finite() && *w >= 0.0))
        {
            return Err(ConfigError::Invalid("graph.hop_weights"));
        }
        if self.graph.neighborhood_budget == 0 {
            return Err(ConfigError::Invalid("graph.neighborhood_budget"));
        }
        self.rerank.validate().map_err(ConfigError::Invalid)?;
        Ok(())
    }
}
