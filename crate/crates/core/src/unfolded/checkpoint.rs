//! Versioned JSON checkpoints. Floats are written in shortest round-trip
//! form, so save/load is lossless.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::layer::LayerParams;
use super::model::UnfoldedModel;
use super::train::{TrainConfig, TrainHistory};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingMetadata {
    pub config: TrainConfig,
    pub history: TrainHistory,
    pub train_items: usize,
    pub val_items: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: UnfoldedModel,
    pub training: Option<TrainingMetadata>,
}

#[allow(non_snake_case)]
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    format_version: u32,
    T: usize,
    C: usize,
    tied: bool,
    rho: f64,
    layers: Vec<LayerParams>,
    #[serde(default)]
    training: Option<TrainingMetadata>,
}

impl Checkpoint {
    pub fn new(model: UnfoldedModel) -> Self {
        Checkpoint {
            model,
            training: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let m = &self.model;
        let doc = Document {
            format_version: FORMAT_VERSION,
            T: m.layers_count,
            C: m.segments,
            tied: m.tied,
            rho: m.rho,
            layers: m.layers.clone(),
            training: self.training.clone(),
        };
        serde_json::to_string_pretty(&doc).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Document =
            serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if doc.format_version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                doc.format_version
            )));
        }
        let model = UnfoldedModel {
            layers_count: doc.T,
            segments: doc.C,
            tied: doc.tied,
            rho: doc.rho,
            layers: doc.layers,
        };
        model
            .validate()
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        Ok(Checkpoint {
            model,
            training: doc.training,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
