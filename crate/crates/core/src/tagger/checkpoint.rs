//! Self-describing JSON checkpoints.
//!
//! ```json
//! {"format": "cwi-bilstm", "version": 1, "input_dim": 300, "hidden": 128,
//!  "threshold": 0.5,
//!  "tensors": [{"name": "forward.w", "shape": [512, 300], "data": [...]}, ...]}
//! ```
//!
//! Tensor data is row-major. Floats are written in shortest round-trip form,
//! so identical models produce identical files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{TaggerModel, TaggerParams};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "cwi-bilstm";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub input_dim: usize,
    pub hidden: usize,
    pub threshold: f64,
    pub tensors: Vec<TensorRecord>,
}

fn shapes(d: usize, h: usize) -> [Vec<usize>; 8] {
    [
        vec![4 * h, d],
        vec![4 * h, h],
        vec![4 * h],
        vec![4 * h, d],
        vec![4 * h, h],
        vec![4 * h],
        vec![2 * h],
        vec![],
    ]
}

impl Checkpoint {
    pub fn from_model(model: &TaggerModel) -> Self {
        let (d, h) = (model.input_dim(), model.hidden());
        let tensors = TaggerParams::TENSOR_NAMES
            .iter()
            .zip(shapes(d, h))
            .zip(model.params().tensors())
            .map(|((name, shape), data)| TensorRecord {
                name: name.to_string(),
                shape,
                data: data.to_vec(),
            })
            .collect();
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            input_dim: d,
            hidden: h,
            threshold: model.threshold(),
            tensors,
        }
    }

    pub fn into_model(self) -> Result<TaggerModel> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::invalid(format!(
                "not a tagger checkpoint: format '{}'",
                self.format
            )));
        }
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::invalid(format!(
                "unsupported checkpoint version {}",
                self.version
            )));
        }
        let (d, h) = (self.input_dim, self.hidden);
        let mut params = TaggerParams::zeros(d, h);
        let expected = shapes(d, h);
        if self.tensors.len() != expected.len() {
            return Err(Error::invalid("checkpoint has the wrong number of tensors"));
        }
        for (((rec, name), shape), slot) in self
            .tensors
            .iter()
            .zip(TaggerParams::TENSOR_NAMES)
            .zip(&expected)
            .zip(params.tensors_mut())
        {
            if rec.name != name || &rec.shape != shape || rec.data.len() != slot.len() {
                return Err(Error::invalid(format!(
                    "tensor '{}' {:?} does not match expected '{name}' {shape:?}",
                    rec.name, rec.shape
                )));
            }
            slot.copy_from_slice(&rec.data);
        }
        TaggerModel::from_params(params, d, h, self.threshold)
    }
}

pub fn save(model: &TaggerModel, path: &Path) -> Result<()> {
    let json = serde_json::to_string(&Checkpoint::from_model(model)).map_err(|e| Error::Json {
        context: "serializing checkpoint".into(),
        source: e,
    })?;
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<TaggerModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ck: Checkpoint = serde_json::from_str(&text).map_err(|e| Error::Json {
        context: path.display().to_string(),
        source: e,
    })?;
    ck.into_model()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn save_load_round_trip() {
        let m = TaggerModel::init(5, 3, 11).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        save(&m, &p).unwrap();
        let back = load(&p).unwrap();
        assert_eq!(back.params(), m.params());
        assert_eq!(back.threshold(), 0.5);
        let first = fs::read(&p).unwrap();
        save(&back, &p).unwrap();
        assert_eq!(fs::read(&p).unwrap(), first);
    }

    #[test]
    fn rejects_wrong_shape() {
        let m = TaggerModel::init(5, 3, 11).unwrap();
        let mut ck = Checkpoint::from_model(&m);
        ck.tensors[1].shape = vec![3, 12];
        assert!(ck.clone().into_model().is_err());
        ck = Checkpoint::from_model(&m);
        ck.version = 99;
        assert!(ck.into_model().is_err());
    }
}
