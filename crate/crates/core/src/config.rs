//! JSON run configuration and its canonical hash.
//!
//! ```json
//! {
//!   "model": {"kind": "toy_ar", "vocab_size": 64, "hidden_size": 32, "seed": 7},
//!   "generation": {
//!     "schedule": {"alpha": 0.3395, "beta": 1.3339, "l0": 5, "delta": 0.5479, "horizon": 40},
//!     "temperature": 1.0, "max_steps": 40, "branches": 8, "seed": 0, "uag_enabled": true
//!   }
//! }
//! ```
//!
//! `model.kind` is one of `toy_ar`, `bigram` (with `path`, relative to the
//! config file) or `toy_diffusion`. The hash is SHA-256 over the effective
//! configuration (defaults filled in) serialized with sorted keys.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, UagError};
use crate::process::{BigramModel, GenerationConfig, LanguageModel, ToyArModel, ToyArSpec, ToyDiffusion, ToyDiffusionSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    ToyAr(ToyArSpec),
    Bigram { path: PathBuf },
    ToyDiffusion(ToyDiffusionSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub generation: GenerationConfig,
}

/// Parse failure with its position in the source.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ConfigError {}

impl From<serde_json::Error> for ConfigError {
    fn from(e: serde_json::Error) -> Self {
        Self { line: e.line(), column: e.column(), message: e.to_string() }
    }
}

pub enum LoadedModel {
    Language(Box<dyn LanguageModel>),
    Diffusion(ToyDiffusion),
}

impl RunConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.generation.validate()?;
        if let ModelSpec::ToyDiffusion(spec) = &self.model {
            if spec.steps != self.generation.max_steps {
                return Err(UagError::InvalidConfig(format!(
                    "diffusion steps {} differ from max_steps {}",
                    spec.steps, self.generation.max_steps
                )));
            }
        }
        Ok(())
    }

    /// SHA-256 hex digest of the canonical serialization.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        hex::encode(Sha256::digest(value.to_string().as_bytes()))
    }

    /// Builds the model; relative bigram paths resolve against `base_dir`.
    pub fn load_model(&self, base_dir: &Path) -> Result<LoadedModel> {
        Ok(match &self.model {
            ModelSpec::ToyAr(spec) => LoadedModel::Language(Box::new(ToyArModel::new(*spec)?)),
            ModelSpec::Bigram { path } => {
                let model = BigramModel::load(&base_dir.join(path)).map_err(UagError::InvalidConfig)?;
                LoadedModel::Language(Box::new(model))
            }
            ModelSpec::ToyDiffusion(spec) => LoadedModel::Diffusion(ToyDiffusion::new(*spec)?),
        })
    }
}
