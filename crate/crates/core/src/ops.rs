//! Plain reference operators.
//!
//! These define ground truth for every equivalence check in the crate, so the
//! floating-point evaluation order of each one is fixed:
//!
//! * convolution starts from the bias, iterates input channels in the outer
//!   loop and kernel taps `(a, b)` row-major in the inner loop, and multiplies
//!   every tap including padded ones (which read `0.0`);
//! * max pooling scans taps row-major and keeps the first maximum seen, with
//!   padded taps reading `-inf`;
//! * global average pooling sums row-major then divides by `H·W`;
//! * dense layers start from the bias and add `w·x` for ascending `d`.

use crate::error::{Error, Result};
use crate::key::PermKey;
use crate::tensor::Tensor;

/// Output extent of a sliding window, or `None` if no window fits.
pub fn output_extent(input: usize, kernel: usize, stride: usize, padding: usize) -> Option<usize> {
    let span = input + 2 * padding;
    if stride == 0 || kernel == 0 || span < kernel {
        return None;
    }
    Some((span - kernel) / stride + 1)
}

pub(crate) fn check_window(kernel: usize, stride: usize, padding: usize) -> Result<()> {
    if kernel == 0 || stride == 0 {
        return Err(Error::Param(format!(
            "kernel {} and stride {} must be positive",
            kernel, stride
        )));
    }
    if padding >= kernel {
        return Err(Error::Param(format!(
            "padding {} must be smaller than kernel {}",
            padding, kernel
        )));
    }
    Ok(())
}

pub(crate) fn window_output(
    h: usize,
    w: usize,
    kernel: usize,
    stride: usize,
    padding: usize,
) -> Result<(usize, usize)> {
    check_window(kernel, stride, padding)?;
    match (
        output_extent(h, kernel, stride, padding),
        output_extent(w, kernel, stride, padding),
    ) {
        (Some(oh), Some(ow)) => Ok((oh, ow)),
        _ => Err(Error::Shape(format!(
            "{}x{} input too small for kernel {} with padding {}",
            h, w, kernel, padding
        ))),
    }
}

#[inline]
fn read_padded(plane: &[f32], h: usize, w: usize, y: isize, x: isize, pad: f32) -> f32 {
    if y >= 0 && x >= 0 && (y as usize) < h && (x as usize) < w {
        plane[y as usize * w + x as usize]
    } else {
        pad
    }
}

pub fn conv2d_ref(input: &Tensor, weights: &Tensor, bias: &Tensor, stride: usize, padding: usize) -> Result<Tensor> {
    let (cin, h, w) = input.chw()?;
    let (cout, wcin, n) = match weights.dims()[..] {
        [o, c, a, b] if a == b => (o, c, a),
        _ => {
            return Err(Error::Shape(format!(
                "conv weights must be Cout×Cin×n×n, got {:?}",
                weights.dims()
            )))
        }
    };
    if wcin != cin {
        return Err(Error::Shape(format!(
            "input has {} channels, weights expect {}",
            cin, wcin
        )));
    }
    if bias.dims() != [cout] {
        return Err(Error::Shape(format!(
            "bias dims {:?}, expected [{}]",
            bias.dims(),
            cout
        )));
    }
    let (oh, ow) = window_output(h, w, n, stride, padding)?;
    let wd = weights.data();
    let mut out = Vec::with_capacity(cout * oh * ow);
    for o in 0..cout {
        for i in 0..oh {
            for j in 0..ow {
                let mut acc = bias.data()[o];
                for c in 0..cin {
                    let plane = input.channel(c);
                    let wbase = (o * cin + c) * n * n;
                    for a in 0..n {
                        let y = (i * stride + a) as isize - padding as isize;
                        for b in 0..n {
                            let x = (j * stride + b) as isize - padding as isize;
                            let v = read_padded(plane, h, w, y, x, 0.0);
                            acc += wd[wbase + a * n + b] * v;
                        }
                    }
                }
                out.push(acc);
            }
        }
    }
    Tensor::new(&[cout, oh, ow], out)
}

pub fn maxpool2d_ref(input: &Tensor, window: usize, stride: usize, padding: usize) -> Result<Tensor> {
    let (ch, h, w) = input.chw()?;
    let (oh, ow) = window_output(h, w, window, stride, padding)?;
    let mut out = Vec::with_capacity(ch * oh * ow);
    for c in 0..ch {
        let plane = input.channel(c);
        for i in 0..oh {
            for j in 0..ow {
                let mut best = f32::NEG_INFINITY;
                for a in 0..window {
                    let y = (i * stride + a) as isize - padding as isize;
                    for b in 0..window {
                        let x = (j * stride + b) as isize - padding as isize;
                        let v = read_padded(plane, h, w, y, x, f32::NEG_INFINITY);
                        if v > best {
                            best = v;
                        }
                    }
                }
                out.push(best);
            }
        }
    }
    Tensor::new(&[ch, oh, ow], out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pointwise {
    Relu,
    Affine,
}

/// ReLU or per-channel affine (`scale[c]·x + shift[c]`). Never reads spatial
/// position, so it commutes with any spatial permutation.
pub fn pointwise_ref(
    input: &Tensor,
    kind: Pointwise,
    scale: Option<&Tensor>,
    shift: Option<&Tensor>,
) -> Result<Tensor> {
    match kind {
        Pointwise::Relu => Ok(relu(input)),
        Pointwise::Affine => {
            let (scale, shift) = match (scale, shift) {
                (Some(s), Some(t)) => (s, t),
                _ => return Err(Error::Param("affine needs both scale and shift".into())),
            };
            affine(input, scale, shift)
        }
    }
}

pub fn relu(input: &Tensor) -> Tensor {
    let mut out = input.clone();
    for v in out.data_mut() {
        *v = v.max(0.0);
    }
    out
}

pub fn affine(input: &Tensor, scale: &Tensor, shift: &Tensor) -> Result<Tensor> {
    let (c, h, w) = input.chw()?;
    if scale.dims() != [c] || shift.dims() != [c] {
        return Err(Error::Shape(format!(
            "affine on {} channels needs scale/shift of length {}, got {:?}/{:?}",
            c,
            c,
            scale.dims(),
            shift.dims()
        )));
    }
    let mut out = input.clone();
    let plane = h * w;
    for (k, v) in out.data_mut().iter_mut().enumerate() {
        let ch = k / plane;
        *v = scale.data()[ch] * *v + shift.data()[ch];
    }
    Ok(out)
}

/// Per-channel mean over the spatial grid, summed row-major.
pub fn gap_ref(input: &Tensor) -> Result<Tensor> {
    let (c, h, w) = input.chw()?;
    let area = (h * w) as f32;
    let out = (0..c)
        .map(|ch| {
            let mut sum = 0.0f32;
            for &v in input.channel(ch) {
                sum += v;
            }
            sum / area
        })
        .collect();
    Tensor::vector(out)
}

pub fn dense_ref(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let d = match input.dims() {
        [d] => *d,
        dims => return Err(Error::Shape(format!("dense input must be a vector, got {:?}", dims))),
    };
    let k = match weights.dims() {
        [k, wd] if *wd == d => *k,
        dims => {
            return Err(Error::Shape(format!(
                "dense weights {:?} do not accept input of length {}",
                dims, d
            )))
        }
    };
    if bias.dims() != [k] {
        return Err(Error::Shape(format!("dense bias {:?}, expected [{}]", bias.dims(), k)));
    }
    let x = input.data();
    let out = (0..k)
        .map(|row| {
            let wrow = &weights.data()[row * d..(row + 1) * d];
            let mut acc = bias.data()[row];
            for (wv, xv) in wrow.iter().zip(x) {
                acc += wv * xv;
            }
            acc
        })
        .collect();
    Tensor::vector(out)
}

/// `out[c, q] = input[c, key.map[q]]` for every channel. Pure data movement.
pub fn gather_spatial(input: &Tensor, key: &PermKey) -> Result<Tensor> {
    let (c, h, w) = input.chw()?;
    key.check_grid(h, w)?;
    let mut out = Vec::with_capacity(input.len());
    for ch in 0..c {
        let plane = input.channel(ch);
        out.extend(key.map().iter().map(|&s| plane[s as usize]));
    }
    Tensor::new(&[c, h, w], out)
}
