//! Model checkpoints: a JSON header describing the topology plus one `.fvb`
//! blob per weight matrix and bias vector. Blobs are 32-bit on disk.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use super::mlp::{Dense, MlpModel, MlpShape};
use super::mvnet::MvNetModel;
use super::{Network, TrainConfig};
use crate::dataset::{read_fvb, write_fvb};
use crate::error::{Error, Result};

pub const CHECKPOINT_FILE: &str = "checkpoint.json";

#[derive(Debug, Clone, PartialEq)]
pub enum CheckpointModel {
    Mlp(MlpModel),
    MvNet(MvNetModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub kind: String,
    branches: Vec<MlpShape>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    head: Option<MlpShape>,
    pub seed: u64,
    pub train: TrainConfig,
    /// `[weights, bias]` file pairs in parameter order.
    files: Vec<[String; 2]>,
}

fn layers_of(model: &CheckpointModel) -> Vec<&Dense> {
    match model {
        CheckpointModel::Mlp(m) => m.params(),
        CheckpointModel::MvNet(m) => m.params(),
    }
}

pub fn save_checkpoint(dir: &Path, model: &CheckpointModel, seed: u64, train: &TrainConfig) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for (i, layer) in layers_of(model).into_iter().enumerate() {
        let w = format!("layer{i:03}_w.fvb");
        let b = format!("layer{i:03}_b.fvb");
        write_fvb(&dir.join(&w), layer.w.view())?;
        write_fvb(&dir.join(&b), layer.b.view().insert_axis(ndarray::Axis(0)))?;
        files.push([w, b]);
    }
    let (kind, branches, head) = match model {
        CheckpointModel::Mlp(m) => ("mlp", vec![MlpShape::from(m)], None),
        CheckpointModel::MvNet(m) => (
            "mvnet",
            m.branches().iter().map(MlpShape::from).collect(),
            Some(MlpShape::from(m.head())),
        ),
    };
    let header = Checkpoint {
        kind: kind.to_string(),
        branches,
        head,
        seed,
        train: *train,
        files,
    };
    let path = dir.join(CHECKPOINT_FILE);
    fs::write(&path, serde_json::to_string_pretty(&header)? + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn load_checkpoint(path: &Path) -> Result<(CheckpointModel, Checkpoint)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let header: Checkpoint = serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut blobs = header.files.iter();

    let mut read_mlp = |shape: &MlpShape| -> Result<MlpModel> {
        let mut layers = Vec::new();
        for pair in shape.dims.windows(2) {
            let [w, b] = blobs
                .next()
                .ok_or_else(|| Error::format(path, "fewer weight files than layers"))?;
            let w = read_fvb(&base.join(w))?;
            let b = read_fvb(&base.join(b))?;
            if w.dim() != (pair[0], pair[1]) || b.dim() != (1, pair[1]) {
                return Err(Error::format(path, format!("layer blob shape does not match {pair:?}")));
            }
            layers.push(Dense {
                w,
                b: Array1::from_iter(b.iter().copied()),
            });
        }
        MlpModel::from_layers(layers, shape.l2_coeff)
    };

    let model = match (header.kind.as_str(), &header.head) {
        ("mlp", None) if header.branches.len() == 1 => CheckpointModel::Mlp(read_mlp(&header.branches[0])?),
        ("mvnet", Some(head)) => {
            let branches = header.branches.iter().map(&mut read_mlp).collect::<Result<Vec<_>>>()?;
            let head = read_mlp(head)?;
            CheckpointModel::MvNet(MvNetModel::new(branches, head)?)
        }
        (kind, _) => return Err(Error::format(path, format!("unsupported checkpoint kind {kind:?}"))),
    };
    Ok((model, header))
}
