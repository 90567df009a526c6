//! The model container: one JSON file holding the label space, the
//! flattened weight vector, the fitted standardizer, and the name tables.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use hcrf_core::{LabelSpace, Standardizer, WeightPack};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};

pub const MODEL_FORMAT: &str = "hcrf-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub space: LabelSpace,
    /// Weights in the frozen flattening order.
    pub weights: Vec<f64>,
    /// Standardizer fitted on the training split, when one was used.
    pub standardizer: Option<Standardizer>,
    pub action_names: Vec<String>,
    pub activity_names: Vec<String>,
}

impl ModelFile {
    pub fn new(
        weights: &WeightPack,
        standardizer: Option<Standardizer>,
        action_names: Vec<String>,
        activity_names: Vec<String>,
    ) -> Self {
        Self {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            space: *weights.space(),
            weights: weights.flatten(),
            standardizer,
            action_names,
            activity_names,
        }
    }

    /// Rebuilds the weight pack; fails if the stored vector does not
    /// match the stored space.
    pub fn weight_pack(&self) -> Result<WeightPack> {
        Ok(WeightPack::unflatten(self.space, &self.weights)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(io_err(path))?;
        let model: ModelFile =
            serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
        if model.format != MODEL_FORMAT || model.version != MODEL_VERSION {
            return Err(Error::SchemaVersionUnsupported {
                path: path.to_path_buf(),
                format: model.format,
                version: model.version,
                expected_format: MODEL_FORMAT,
                expected_version: MODEL_VERSION,
            });
        }
        model.weight_pack()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(io_err(path))?;
        let mut out = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut out, self).map_err(|e| Error::Parse {
            line: 0,
            column: 0,
            message: e.to_string(),
        })?;
        out.write_all(b"\n").map_err(io_err(path))?;
        out.flush().map_err(io_err(path))?;
        Ok(())
    }
}
