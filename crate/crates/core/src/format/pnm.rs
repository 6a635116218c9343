//! Binary netpbm import: `P6` (RGB) to a 3-channel tensor, `P5` (grey) to a
//! 1-channel tensor, samples scaled by `1/maxval` into `[0, 1]`.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

struct Header {
    channels: usize,
    width: usize,
    height: usize,
    maxval: u32,
    data_start: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let channels = match bytes.get(..2) {
        Some(b"P6") => 3,
        Some(b"P5") => 1,
        _ => return Err(Error::Format("not a binary PPM (P6) or PGM (P5) file".into())),
    };
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in fields.iter_mut() {
        // Whitespace and comments run to end of line.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("malformed netpbm header".into()));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format("netpbm header value out of range".into()))?;
    }
    // Exactly one whitespace byte separates the header from the raster.
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::Format("missing separator after netpbm header".into()));
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(Error::Format(format!("empty {}x{} image", width, height)));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("maxval {} outside 1..=65535", maxval)));
    }
    Ok(Header {
        channels,
        width: width as usize,
        height: height as usize,
        maxval,
        data_start: pos + 1,
    })
}

/// Decodes a binary PPM/PGM into a planar `C×H×W` tensor.
pub fn decode(bytes: &[u8]) -> Result<Tensor> {
    let hdr = parse_header(bytes)?;
    let wide = hdr.maxval > 255;
    let sample_bytes = if wide { 2 } else { 1 };
    let (c, h, w) = (hdr.channels, hdr.height, hdr.width);
    let need = c * h * w * sample_bytes;
    let raster = &bytes[hdr.data_start..];
    if raster.len() < need {
        return Err(Error::Integrity(format!(
            "netpbm raster truncated: need {} bytes, found {}",
            need,
            raster.len()
        )));
    }
    let scale = hdr.maxval as f32;
    let sample = |k: usize| -> f32 {
        let v = if wide {
            u16::from_be_bytes([raster[2 * k], raster[2 * k + 1]]) as u32
        } else {
            raster[k] as u32
        };
        v.min(hdr.maxval) as f32 / scale
    };
    // Interleaved pixels to planar channels.
    let mut data = vec![0.0f32; c * h * w];
    for p in 0..h * w {
        for ch in 0..c {
            data[ch * h * w + p] = sample(p * c + ch);
        }
    }
    Tensor::new(&[c, h, w], data)
}

/// Encodes a 1- or 3-channel tensor with values in `[0, 1]` as 8-bit PGM/PPM.
pub fn encode(t: &Tensor) -> Result<Vec<u8>> {
    let (c, h, w) = t.chw()?;
    let magic = match c {
        1 => "P5",
        3 => "P6",
        _ => return Err(Error::Shape(format!("netpbm needs 1 or 3 channels, got {}", c))),
    };
    let mut out = format!("{}\n{} {}\n255\n", magic, w, h).into_bytes();
    for p in 0..h * w {
        for ch in 0..c {
            let v = t.data()[ch * h * w + p].clamp(0.0, 1.0);
            out.push((v * 255.0).round() as u8);
        }
    }
    Ok(out)
}
