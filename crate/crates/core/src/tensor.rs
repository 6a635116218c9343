//! Dense row-major `f32` tensor of rank 1 to 4.

use crate::error::{Error, Result};

pub const MAX_RANK: usize = 4;

/// A dense, row-major tensor of single-precision values.
///
/// Images and feature maps are `C×H×W`, convolution weights are
/// `Cout×Cin×n×n`, dense weights are `K×D`, and per-channel vectors are `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: &[usize], data: Vec<f32>) -> Result<Self> {
        check_dims(dims)?;
        let len: usize = dims.iter().product();
        if len != data.len() {
            return Err(Error::Shape(format!(
                "dims {:?} need {} values, got {}",
                dims,
                len,
                data.len()
            )));
        }
        Ok(Tensor {
            dims: dims.to_vec(),
            data,
        })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        Self::full(dims, 0.0)
    }

    pub fn full(dims: &[usize], value: f32) -> Result<Self> {
        check_dims(dims)?;
        let len = dims.iter().product();
        Ok(Tensor {
            dims: dims.to_vec(),
            data: vec![value; len],
        })
    }

    pub fn from_fn(dims: &[usize], mut f: impl FnMut(usize) -> f32) -> Result<Self> {
        check_dims(dims)?;
        let len: usize = dims.iter().product();
        Ok(Tensor {
            dims: dims.to_vec(),
            data: (0..len).map(&mut f).collect(),
        })
    }

    pub fn vector(data: Vec<f32>) -> Result<Self> {
        let n = data.len();
        Self::new(&[n], data)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    /// Same values under new dims with equal element count.
    pub fn reshape(self, dims: &[usize]) -> Result<Self> {
        Tensor::new(dims, self.data)
    }

    /// Interprets the tensor as `C×H×W` and returns the three extents.
    pub fn chw(&self) -> Result<(usize, usize, usize)> {
        match self.dims[..] {
            [c, h, w] => Ok((c, h, w)),
            _ => Err(Error::Shape(format!(
                "expected a C×H×W tensor, got dims {:?}",
                self.dims
            ))),
        }
    }

    /// Channel `c` of a `C×H×W` tensor as a flat `H·W` slice.
    pub fn channel(&self, c: usize) -> &[f32] {
        let plane = self.dims[self.rank() - 2] * self.dims[self.rank() - 1];
        &self.data[c * plane..(c + 1) * plane]
    }

    /// Bitwise equality, distinguishing `-0.0` from `0.0`.
    pub fn bit_eq(&self, other: &Tensor) -> bool {
        self.dims == other.dims
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<(usize, f32)> = None;
        for (i, &v) in self.data.iter().enumerate() {
            match best {
                Some((_, b)) if v <= b => {}
                _ => best = Some((i, v)),
            }
        }
        best.map(|(i, _)| i)
    }
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() || dims.len() > MAX_RANK {
        return Err(Error::Shape(format!(
            "rank must be 1..={}, got {}",
            MAX_RANK,
            dims.len()
        )));
    }
    if dims.contains(&0) {
        return Err(Error::Shape(format!("zero extent in dims {:?}", dims)));
    }
    Ok(())
}

/// Largest absolute elementwise difference; `inf` when shapes differ.
pub fn max_abs_diff(a: &Tensor, b: &Tensor) -> f32 {
    if a.dims() != b.dims() {
        return f32::INFINITY;
    }
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f32::max)
}

/// `‖a − b‖₂ / ‖b‖₂`, accumulated in `f64`. Returns `inf` on shape mismatch and
/// the absolute norm of the difference when `b` is all zeros.
pub fn relative_l2(a: &Tensor, b: &Tensor) -> f64 {
    if a.dims() != b.dims() {
        return f64::INFINITY;
    }
    let mut diff = 0.0f64;
    let mut norm = 0.0f64;
    for (&x, &y) in a.data().iter().zip(b.data()) {
        let d = x as f64 - y as f64;
        diff += d * d;
        norm += (y as f64) * (y as f64);
    }
    if norm == 0.0 {
        diff.sqrt()
    } else {
        (diff / norm).sqrt()
    }
}
