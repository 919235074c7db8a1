//! Run configuration files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{gen_synthetic, load_dnerf, Dataset, SyntheticSceneSpec};
use crate::error::{Result, WavePlanesError};
use crate::field::ModelConfig;
use crate::optim::TrainConfig;
use crate::render::Background;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    Dnerf,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub kind: DataKind,
    /// Dataset directory for `dnerf`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Scene description for `synthetic`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<SyntheticSceneSpec>,
    #[serde(default)]
    pub background: Background,
}

fn default_directory() -> PathBuf {
    PathBuf::from("runs/default")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: PathBuf,
    /// Steps between validation renders; 0 renders only after training.
    #[serde(default)]
    pub val_every: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: default_directory(),
            val_every: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainConfig,
    pub data: DataConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| WavePlanesError::Config(e.to_string()))?;
        cfg.resolved()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| WavePlanesError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            WavePlanesError::Config(m) => WavePlanesError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Validates every section and fills in derived values, so the result
    /// is self-contained.
    pub fn resolved(mut self) -> Result<Self> {
        self.model = self.model.validated()?;
        self.train.validate()?;
        match self.data.kind {
            DataKind::Dnerf => {
                if self.data.path.is_none() {
                    return Err(WavePlanesError::Config("data.path is required for dnerf data".into()));
                }
                if self.data.spec.is_some() {
                    return Err(WavePlanesError::Config("data.spec only applies to synthetic data".into()));
                }
            }
            DataKind::Synthetic => {
                let mut spec = self.data.spec.take().unwrap_or_default();
                spec.background = self.data.background;
                spec.validate()?;
                self.data.spec = Some(spec);
            }
        }
        Ok(self)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    pub fn load_dataset(&self) -> Result<Dataset> {
        match self.data.kind {
            DataKind::Dnerf => {
                let path = self
                    .data
                    .path
                    .as_ref()
                    .ok_or_else(|| WavePlanesError::Config("data.path is required for dnerf data".into()))?;
                load_dnerf(path, self.data.background)
            }
            DataKind::Synthetic => {
                let spec = self.data.spec.clone().unwrap_or_default();
                gen_synthetic(&spec).map(|(data, _)| data)
            }
        }
    }
}
