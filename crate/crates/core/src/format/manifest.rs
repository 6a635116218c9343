//! JSON model manifests backed by a raw little-endian `f32` weight blob, and
//! the JSON form of a compiled keyed model.
//!
//! ```json
//! {
//!   "input_dims": [3, 32, 32],
//!   "weights": "model.bin",
//!   "layers": [
//!     {"type": "conv2d", "in_channels": 3, "out_channels": 8, "kernel": 3,
//!      "stride": 1, "padding": 1,
//!      "weight": {"blob_offset": 0, "shape": [8, 3, 3, 3]},
//!      "bias": {"blob_offset": 864, "shape": [8]}},
//!     {"type": "relu"},
//!     {"type": "maxpool2d", "window": 2, "stride": 2, "padding": 0},
//!     {"type": "residual_add", "from": 1},
//!     {"type": "global_avg_pool"},
//!     {"type": "dense", "weight": {...}, "bias": {...}}
//!   ]
//! }
//! ```
//!
//! `blob_offset` is in bytes from the start of the weight file and must be a
//! multiple of 4. References must be in bounds and must not overlap.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{read_bytes, write_atomic};
use crate::deform::{ConvParams, OffsetVolume, PoolParams};
use crate::error::{Error, Result};
use crate::key::{KeyChain, PermKey};
use crate::keyed::{KeyedModel, LayerOffsets};
use crate::model::{Layer, ModelSpec};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub input_dims: [usize; 3],
    /// Weight blob path, relative to the manifest's directory.
    pub weights: String,
    pub layers: Vec<LayerEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobRef {
    pub blob_offset: u64,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum LayerEntry {
    #[serde(rename = "conv2d")]
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        weight: BlobRef,
        bias: BlobRef,
    },
    #[serde(rename = "maxpool2d")]
    MaxPool2d {
        window: usize,
        stride: usize,
        padding: usize,
    },
    #[serde(rename = "relu")]
    Relu,
    #[serde(rename = "affine")]
    Affine { scale: BlobRef, shift: BlobRef },
    #[serde(rename = "residual_add")]
    ResidualAdd { from: usize },
    #[serde(rename = "global_avg_pool")]
    GlobalAvgPool,
    #[serde(rename = "flatten")]
    Flatten,
    #[serde(rename = "dense")]
    Dense { weight: BlobRef, bias: BlobRef },
}

impl LayerEntry {
    fn blobs(&self) -> Vec<&BlobRef> {
        match self {
            LayerEntry::Conv2d { weight, bias, .. } | LayerEntry::Dense { weight, bias } => vec![weight, bias],
            LayerEntry::Affine { scale, shift } => vec![scale, shift],
            _ => Vec::new(),
        }
    }
}

fn blob_tensor(blob: &[u8], r: &BlobRef, layer: usize) -> Result<Tensor> {
    let count: usize = r.shape.iter().product();
    if r.shape.is_empty() || count == 0 {
        return Err(Error::model(layer, format!("blob shape {:?} is empty", r.shape)));
    }
    if !r.blob_offset.is_multiple_of(4) {
        return Err(Error::Integrity(format!(
            "layer {}: blob offset {} is not 4-byte aligned",
            layer, r.blob_offset
        )));
    }
    let start = r.blob_offset as usize;
    let end = start
        .checked_add(count * 4)
        .filter(|&e| e <= blob.len())
        .ok_or_else(|| {
            Error::Integrity(format!(
                "layer {}: blob reference {}+{} bytes dangles past the {}-byte weight file",
                layer,
                start,
                count * 4,
                blob.len()
            ))
        })?;
    let data: Vec<f32> = blob[start..end]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Integrity(format!("layer {}: non-finite weight", layer)));
    }
    Tensor::new(&r.shape, data).map_err(|e| Error::model(layer, e.to_string()))
}

fn check_no_overlap(layers: &[LayerEntry]) -> Result<()> {
    let mut ranges: Vec<(u64, u64, usize)> = layers
        .iter()
        .enumerate()
        .flat_map(|(i, l)| {
            l.blobs().into_iter().map(move |b| {
                let len = b.shape.iter().product::<usize>() as u64 * 4;
                (b.blob_offset, b.blob_offset.saturating_add(len), i)
            })
        })
        .collect();
    ranges.sort();
    for pair in ranges.windows(2) {
        if pair[1].0 < pair[0].1 {
            return Err(Error::Integrity(format!(
                "blob references of layers {} and {} overlap",
                pair[0].2, pair[1].2
            )));
        }
    }
    Ok(())
}

/// Builds a validated model from a parsed manifest and its weight blob.
pub fn model_from_manifest(manifest: &Manifest, blob: &[u8]) -> Result<ModelSpec> {
    check_no_overlap(&manifest.layers)?;
    let mut layers = Vec::with_capacity(manifest.layers.len());
    for (i, entry) in manifest.layers.iter().enumerate() {
        let t = |r: &BlobRef| blob_tensor(blob, r, i).map(Arc::new);
        layers.push(match entry {
            LayerEntry::Conv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
                padding,
                weight,
                bias,
            } => Layer::Conv2d {
                params: ConvParams::new(*in_channels, *out_channels, *kernel, *stride, *padding),
                weight: t(weight)?,
                bias: t(bias)?,
            },
            LayerEntry::MaxPool2d {
                window,
                stride,
                padding,
            } => Layer::MaxPool2d(PoolParams::new(*window, *stride, *padding)),
            LayerEntry::Relu => Layer::Relu,
            LayerEntry::Affine { scale, shift } => Layer::Affine {
                scale: t(scale)?,
                shift: t(shift)?,
            },
            LayerEntry::ResidualAdd { from } => Layer::ResidualAdd { from: *from },
            LayerEntry::GlobalAvgPool => Layer::GlobalAvgPool,
            LayerEntry::Flatten => Layer::Flatten,
            LayerEntry::Dense { weight, bias } => Layer::Dense {
                weight: t(weight)?,
                bias: t(bias)?,
            },
        });
    }
    ModelSpec::new(manifest.input_dims, layers)
}

/// Serializes a model into a manifest plus blob bytes, tensors laid out in
/// layer order.
pub fn manifest_from_model(model: &ModelSpec, weights_name: &str) -> (Manifest, Vec<u8>) {
    let mut blob = Vec::new();
    let mut put = |t: &Tensor| {
        let r = BlobRef {
            blob_offset: blob.len() as u64,
            shape: t.dims().to_vec(),
        };
        for v in t.data() {
            blob.extend_from_slice(&v.to_le_bytes());
        }
        r
    };
    let layers = model
        .layers()
        .iter()
        .map(|l| match l {
            Layer::Conv2d { params, weight, bias } => LayerEntry::Conv2d {
                in_channels: params.in_channels,
                out_channels: params.out_channels,
                kernel: params.kernel,
                stride: params.stride,
                padding: params.padding,
                weight: put(weight),
                bias: put(bias),
            },
            Layer::MaxPool2d(p) => LayerEntry::MaxPool2d {
                window: p.window,
                stride: p.stride,
                padding: p.padding,
            },
            Layer::Relu => LayerEntry::Relu,
            Layer::Affine { scale, shift } => LayerEntry::Affine {
                scale: put(scale),
                shift: put(shift),
            },
            Layer::ResidualAdd { from } => LayerEntry::ResidualAdd { from: *from },
            Layer::GlobalAvgPool => LayerEntry::GlobalAvgPool,
            Layer::Flatten => LayerEntry::Flatten,
            Layer::Dense { weight, bias } => LayerEntry::Dense {
                weight: put(weight),
                bias: put(bias),
            },
        })
        .collect();
    (
        Manifest {
            input_dims: model.input_dims(),
            weights: weights_name.to_string(),
            layers,
        },
        blob,
    )
}

fn sibling(manifest_path: &Path, name: &str) -> PathBuf {
    match manifest_path.parent() {
        Some(dir) => dir.join(name),
        None => PathBuf::from(name),
    }
}

pub fn load_model(manifest_path: &Path) -> Result<ModelSpec> {
    let text = read_bytes(manifest_path)?;
    let manifest: Manifest = serde_json::from_slice(&text)?;
    let blob = read_bytes(&sibling(manifest_path, &manifest.weights))?;
    model_from_manifest(&manifest, &blob)
}

/// Writes `manifest_path` and a weight blob next to it named after the
/// manifest with a `.bin` extension.
pub fn save_model(model: &ModelSpec, manifest_path: &Path) -> Result<()> {
    let weights_name = manifest_path
        .with_extension("bin")
        .file_name()
        .and_then(|n| n.to_str())
        .map(str::to_string)
        .ok_or_else(|| Error::Param(format!("bad manifest path {}", manifest_path.display())))?;
    let (manifest, blob) = manifest_from_model(model, &weights_name);
    write_atomic(&sibling(manifest_path, &weights_name), &blob)?;
    write_atomic(manifest_path, &serde_json::to_vec_pretty(&manifest)?)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KeyEntry {
    height: usize,
    width: usize,
    map: Vec<u32>,
}

impl From<&PermKey> for KeyEntry {
    fn from(k: &PermKey) -> Self {
        KeyEntry {
            height: k.height(),
            width: k.width(),
            map: k.map().to_vec(),
        }
    }
}

impl TryFrom<KeyEntry> for PermKey {
    type Error = Error;
    fn try_from(e: KeyEntry) -> Result<Self> {
        PermKey::new(e.height, e.width, e.map)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OffsetEntry {
    layer: usize,
    out_height: usize,
    out_width: usize,
    kernel: usize,
    values: Vec<f32>,
}

const COMPILED_FORMAT: &str = "keyed-model";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CompiledFile {
    format: String,
    version: u32,
    /// Plain model manifest; relative paths resolve against this file's
    /// directory.
    model: PathBuf,
    session_seed: u64,
    chain: Vec<KeyEntry>,
    offsets: Vec<OffsetEntry>,
    final_unshuffle: Option<KeyEntry>,
}

/// Writes a compiled model that references the plain manifest at
/// `manifest_path` for its weights.
pub fn save_compiled(path: &Path, keyed: &KeyedModel, manifest_path: &Path) -> Result<()> {
    let model = std::fs::canonicalize(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let file = CompiledFile {
        format: COMPILED_FORMAT.into(),
        version: 1,
        model,
        session_seed: keyed.chain().session_seed,
        chain: keyed.chain().entries.iter().map(KeyEntry::from).collect(),
        offsets: keyed
            .offsets()
            .iter()
            .map(|o| {
                let (h, w, _) = o.volume.shape();
                OffsetEntry {
                    layer: o.layer,
                    out_height: h,
                    out_width: w,
                    kernel: o.volume.kernel(),
                    values: o.volume.values().to_vec(),
                }
            })
            .collect(),
        final_unshuffle: keyed.final_unshuffle().map(KeyEntry::from),
    };
    write_atomic(path, &serde_json::to_vec(&file)?)
}

/// Loads a compiled model and re-derives its offsets against the key chain.
pub fn load_compiled(path: &Path) -> Result<KeyedModel> {
    let file: CompiledFile = serde_json::from_slice(&read_bytes(path)?)?;
    if file.format != COMPILED_FORMAT || file.version != 1 {
        return Err(Error::Format(format!(
            "not a compiled keyed model (format {:?}, version {})",
            file.format, file.version
        )));
    }
    let model_path = if file.model.is_relative() {
        sibling(path, &file.model.to_string_lossy())
    } else {
        file.model.clone()
    };
    let spec = load_model(&model_path)?;
    let entries = file
        .chain
        .into_iter()
        .map(PermKey::try_from)
        .collect::<Result<Vec<_>>>()?;
    let offsets = file
        .offsets
        .into_iter()
        .map(|o| {
            Ok(LayerOffsets {
                layer: o.layer,
                volume: OffsetVolume::new(o.out_height, o.out_width, o.kernel, o.values)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let final_unshuffle = file.final_unshuffle.map(PermKey::try_from).transpose()?;
    KeyedModel::from_parts(
        spec,
        KeyChain {
            entries,
            session_seed: file.session_seed,
        },
        offsets,
        final_unshuffle,
    )
}
