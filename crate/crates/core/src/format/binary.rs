//! `PKEY` and `TNSR` binary formats.
//!
//! ```text
//! PKEY:  "PKEY" | version u8 = 1 | height u32 | width u32 | height·width × u32 source index
//! TNSR:  "TNSR" | version u8 = 1 | rank u8 (1..=4) | rank × u32 dim | values f32
//! ```
//!
//! All integers and floats are little-endian. A key file is plaintext; any
//! at-rest sealing wraps the whole byte string from the outside.

use std::path::Path;

use super::{read_bytes, write_atomic};
use crate::error::{Error, Result};
use crate::key::PermKey;
use crate::tensor::{Tensor, MAX_RANK};

pub const KEY_MAGIC: &[u8; 4] = b"PKEY";
pub const TENSOR_MAGIC: &[u8; 4] = b"TNSR";
pub const VERSION: u8 = 1;
pub const KEY_HEADER_LEN: usize = 13;

pub fn encode_key(key: &PermKey) -> Vec<u8> {
    let mut out = Vec::with_capacity(KEY_HEADER_LEN + 4 * key.len());
    out.extend_from_slice(KEY_MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(key.height() as u32).to_le_bytes());
    out.extend_from_slice(&(key.width() as u32).to_le_bytes());
    for &s in key.map() {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

fn check_header(bytes: &[u8], magic: &[u8; 4], what: &str) -> Result<()> {
    if bytes.len() < 5 {
        return Err(Error::Integrity(format!(
            "{} file truncated: {} bytes",
            what,
            bytes.len()
        )));
    }
    if &bytes[..4] != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&bytes[..4]),
            std::str::from_utf8(magic).unwrap()
        )));
    }
    if bytes[4] != VERSION {
        return Err(Error::Format(format!("unsupported {} version {}", what, bytes[4])));
    }
    Ok(())
}

pub fn decode_key(bytes: &[u8]) -> Result<PermKey> {
    check_header(bytes, KEY_MAGIC, "key")?;
    if bytes.len() < KEY_HEADER_LEN {
        return Err(Error::Integrity(format!("key file truncated: {} bytes", bytes.len())));
    }
    let h = u32_at(bytes, 5) as usize;
    let w = u32_at(bytes, 9) as usize;
    let want = (h as u64 * w as u64)
        .checked_mul(4)
        .and_then(|p| p.checked_add(KEY_HEADER_LEN as u64));
    if want != Some(bytes.len() as u64) {
        return Err(Error::Integrity(format!(
            "key file for {}x{} grid should be {} bytes, found {}",
            h,
            w,
            want.map_or("too many".to_string(), |n| n.to_string()),
            bytes.len()
        )));
    }
    let map = bytes[KEY_HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    PermKey::new(h, w, map)
}

pub fn encode_tensor(t: &Tensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(6 + 4 * t.rank() + 4 * t.len());
    out.extend_from_slice(TENSOR_MAGIC);
    out.push(VERSION);
    out.push(t.rank() as u8);
    for &d in t.dims() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_tensor(bytes: &[u8]) -> Result<Tensor> {
    check_header(bytes, TENSOR_MAGIC, "tensor")?;
    let rank = *bytes
        .get(5)
        .ok_or_else(|| Error::Integrity("tensor file truncated before rank".into()))? as usize;
    if rank == 0 || rank > MAX_RANK {
        return Err(Error::Format(format!("tensor rank {} outside 1..={}", rank, MAX_RANK)));
    }
    let header = 6 + 4 * rank;
    if bytes.len() < header {
        return Err(Error::Integrity(format!(
            "tensor file truncated: {} bytes",
            bytes.len()
        )));
    }
    let dims: Vec<usize> = (0..rank).map(|i| u32_at(bytes, 6 + 4 * i) as usize).collect();
    if dims.contains(&0) {
        return Err(Error::Format(format!("zero extent in tensor dims {:?}", dims)));
    }
    let count = dims.iter().try_fold(1u64, |acc, &d| acc.checked_mul(d as u64));
    let want = count
        .and_then(|c| c.checked_mul(4))
        .and_then(|b| b.checked_add(header as u64));
    if want != Some(bytes.len() as u64) {
        return Err(Error::Integrity(format!(
            "tensor {:?} payload length mismatch: file is {} bytes",
            dims,
            bytes.len()
        )));
    }
    let data: Vec<f32> = bytes[header..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::Integrity(format!("non-finite value at element {}", pos)));
    }
    Tensor::new(&dims, data)
}

pub fn write_key(path: &Path, key: &PermKey) -> Result<()> {
    write_atomic(path, &encode_key(key))
}

pub fn read_key(path: &Path) -> Result<PermKey> {
    decode_key(&read_bytes(path)?)
}

pub fn write_tensor(path: &Path, t: &Tensor) -> Result<()> {
    write_atomic(path, &encode_tensor(t))
}

pub fn read_tensor(path: &Path) -> Result<Tensor> {
    decode_tensor(&read_bytes(path)?)
}
