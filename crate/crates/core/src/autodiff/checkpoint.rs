use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AutodiffError, ParamStore, Tensor};

pub const CHECKPOINT_FORMAT: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

/// Self-describing parameter file: names, shapes and row-major values,
/// plus an echo of the producing configuration and its RNG seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub seed: u64,
    pub config: serde_json::Value,
    #[serde(default)]
    pub extra: serde_json::Value,
    pub params: Vec<NamedTensor>,
}

impl Checkpoint {
    pub fn from_store(store: &ParamStore, config: serde_json::Value, seed: u64) -> Self {
        let params = store
            .iter()
            .map(|(_, name, t)| NamedTensor {
                name: name.to_string(),
                shape: t.shape().to_vec(),
                values: t.data().to_vec(),
            })
            .collect();
        Self { format_version: CHECKPOINT_FORMAT, seed, config, extra: serde_json::Value::Null, params }
    }

    pub fn to_store(&self) -> Result<ParamStore, AutodiffError> {
        let mut store = ParamStore::new();
        for p in &self.params {
            store.insert(&p.name, Tensor::new(p.shape.clone(), p.values.clone())?)?;
        }
        Ok(store)
    }

    /// Copies values into an existing store, checking names and shapes.
    pub fn load_into(&self, store: &mut ParamStore) -> Result<(), AutodiffError> {
        if self.params.len() != store.len() {
            return Err(AutodiffError::Checkpoint(format!(
                "checkpoint has {} tensors, model has {}",
                self.params.len(),
                store.len()
            )));
        }
        for p in &self.params {
            let id = store
                .id(&p.name)
                .ok_or_else(|| AutodiffError::Checkpoint(format!("unknown tensor {}", p.name)))?;
            if store.get(id).shape() != p.shape.as_slice() {
                return Err(AutodiffError::Checkpoint(format!(
                    "{}: shape {:?} vs {:?}",
                    p.name,
                    p.shape,
                    store.get(id).shape()
                )));
            }
            *store.get_mut(id) = Tensor::new(p.shape.clone(), p.values.clone())?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), AutodiffError> {
        let text = serde_json::to_string(self).map_err(|e| AutodiffError::Checkpoint(e.to_string()))?;
        fs::write(path, text).map_err(|e| AutodiffError::Checkpoint(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, AutodiffError> {
        let text =
            fs::read_to_string(path).map_err(|e| AutodiffError::Checkpoint(format!("{}: {e}", path.display())))?;
        let ck: Checkpoint = serde_json::from_str(&text).map_err(|e| AutodiffError::Checkpoint(e.to_string()))?;
        if ck.format_version != CHECKPOINT_FORMAT {
            return Err(AutodiffError::Checkpoint(format!(
                "format version {} (expected {CHECKPOINT_FORMAT})",
                ck.format_version
            )));
        }
        Ok(ck)
    }
}
