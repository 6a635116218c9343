//! On-disk formats.
//!
//! * `PKEY` key files and `TNSR` tensor files: little-endian binary, see
//!   [`binary`].
//! * Binary PPM (`P6`) and PGM (`P5`) image import, see [`pnm`].
//! * JSON model manifests with a raw `f32` weight blob, and compiled keyed
//!   models, see [`manifest`].
//!
//! Every writer goes through a temporary file in the destination directory
//! and renames it into place, so a failed write never leaves partial output.

pub mod binary;
pub mod manifest;
pub mod pnm;

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub use binary::{
    decode_key, decode_tensor, encode_key, encode_tensor, read_key, read_tensor, write_key, write_tensor,
};
pub use manifest::{
    load_compiled, load_model, manifest_from_model, model_from_manifest, save_compiled, save_model, Manifest,
};

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

/// Loads an image or tensor by extension: `.ppm`/`.pgm`/`.pnm` through the
/// netpbm importer, anything else as a `TNSR` file.
pub fn read_image(path: &Path) -> Result<Tensor> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    match ext.as_deref() {
        Some("ppm" | "pgm" | "pnm") => pnm::decode(&read_bytes(path)?),
        _ => read_tensor(path),
    }
}
