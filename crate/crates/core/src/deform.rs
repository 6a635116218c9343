//! Deformable convolution and max pooling, and the derivation of sampling
//! offsets from a pair of permutation keys.
//!
//! Given a feature map shuffled by `key_in`, the derived offsets steer every
//! kernel tap to wherever its plain-grid target pixel ended up, and emit the
//! output already shuffled by `key_out`. Padded taps are sent to the absolute
//! coordinate `(-1, -1)`, which is out of bounds for every grid, so they read
//! `0.0` in convolution and `-inf` in pooling exactly like the plain operator.
//!
//! Offset layout: for output `(i, j)` and tap `(a, b)`, element
//! `2·(a·n + b)` of the last axis is `Δy` and the next one is `Δx`.

use crate::error::{Error, Result};
use crate::key::{invert_key, PermKey};
use crate::ops::{check_window, window_output};
use crate::tensor::Tensor;

/// Absolute sampling coordinate used for padded taps.
pub const SENTINEL: (isize, isize) = (-1, -1);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvParams {
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub in_channels: usize,
    pub out_channels: usize,
}

impl ConvParams {
    pub fn new(in_channels: usize, out_channels: usize, kernel: usize, stride: usize, padding: usize) -> Self {
        ConvParams {
            kernel,
            stride,
            padding,
            in_channels,
            out_channels,
        }
    }

    pub fn window(&self) -> Window {
        Window {
            size: self.kernel,
            stride: self.stride,
            padding: self.padding,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 || self.out_channels == 0 {
            return Err(Error::Param("conv channel counts must be positive".into()));
        }
        self.window().validate()
    }

    pub fn output_dims(&self, height: usize, width: usize) -> Result<(usize, usize)> {
        self.validate()?;
        self.window().output_dims(height, width)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolParams {
    pub window: usize,
    pub stride: usize,
    pub padding: usize,
}

impl PoolParams {
    pub fn new(window: usize, stride: usize, padding: usize) -> Self {
        PoolParams {
            window,
            stride,
            padding,
        }
    }

    pub fn geometry(&self) -> Window {
        Window {
            size: self.window,
            stride: self.stride,
            padding: self.padding,
        }
    }

    pub fn output_dims(&self, height: usize, width: usize) -> Result<(usize, usize)> {
        self.geometry().output_dims(height, width)
    }
}

/// Square sliding-window geometry shared by convolution and pooling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub size: usize,
    pub stride: usize,
    pub padding: usize,
}

impl Window {
    pub fn validate(&self) -> Result<()> {
        check_window(self.size, self.stride, self.padding)
    }

    pub fn output_dims(&self, height: usize, width: usize) -> Result<(usize, usize)> {
        window_output(height, width, self.size, self.stride, self.padding)
    }

    /// Plain-grid position of tap `(a, b)` for output `(i, j)`.
    #[inline]
    pub fn base(&self, i: usize, j: usize, a: usize, b: usize) -> (isize, isize) {
        (
            (i * self.stride + a) as isize - self.padding as isize,
            (j * self.stride + b) as isize - self.padding as isize,
        )
    }
}

/// Per-output-position, per-tap displacements of shape `h'×w'×(2·n·n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetVolume {
    out_height: usize,
    out_width: usize,
    kernel: usize,
    values: Vec<f32>,
}

impl OffsetVolume {
    pub fn new(out_height: usize, out_width: usize, kernel: usize, values: Vec<f32>) -> Result<Self> {
        if out_height == 0 || out_width == 0 || kernel == 0 {
            return Err(Error::Shape(format!(
                "offset volume {}x{} with kernel {} is empty",
                out_height, out_width, kernel
            )));
        }
        let want = out_height * out_width * 2 * kernel * kernel;
        if values.len() != want {
            return Err(Error::Shape(format!(
                "offset volume {}x{}x{} needs {} values, got {}",
                out_height,
                out_width,
                2 * kernel * kernel,
                want,
                values.len()
            )));
        }
        Ok(OffsetVolume {
            out_height,
            out_width,
            kernel,
            values,
        })
    }

    pub fn zeros(out_height: usize, out_width: usize, kernel: usize) -> Result<Self> {
        let n = out_height * out_width * 2 * kernel * kernel;
        Self::new(out_height, out_width, kernel, vec![0.0; n])
    }

    /// `(h', w', 2·n·n)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.out_height, self.out_width, 2 * self.kernel * self.kernel)
    }

    pub fn kernel(&self) -> usize {
        self.kernel
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f32] {
        &mut self.values
    }

    /// Flat index of `Δy` for output `(i, j)` and tap `t = a·n + b`.
    #[inline]
    pub fn index(&self, i: usize, j: usize, tap: usize) -> usize {
        let taps = self.kernel * self.kernel;
        ((i * self.out_width + j) * taps + tap) * 2
    }

    /// `(Δy, Δx)` for output `(i, j)` and tap `(a, b)`.
    pub fn delta(&self, i: usize, j: usize, a: usize, b: usize) -> (f32, f32) {
        let k = self.index(i, j, a * self.kernel + b);
        (self.values[k], self.values[k + 1])
    }

    pub fn is_integral(&self) -> bool {
        self.values.iter().all(|v| v.fract() == 0.0)
    }

    pub fn is_all_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    fn check_against(&self, out_h: usize, out_w: usize, kernel: usize) -> Result<()> {
        if (self.out_height, self.out_width, self.kernel) != (out_h, out_w, kernel) {
            return Err(Error::Shape(format!(
                "offset volume is {}x{}x{}, operator needs {}x{}x{}",
                self.out_height,
                self.out_width,
                2 * self.kernel * self.kernel,
                out_h,
                out_w,
                2 * kernel * kernel
            )));
        }
        Ok(())
    }
}

/// Value read at out-of-bounds positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutOfBounds {
    Zero,
    NegInf,
}

impl OutOfBounds {
    fn value(self) -> f32 {
        match self {
            OutOfBounds::Zero => 0.0,
            OutOfBounds::NegInf => f32::NEG_INFINITY,
        }
    }
}

/// Samples an `H×W` channel at real coordinates `(y, x)`.
///
/// Integral coordinates are a pure gather with no arithmetic. Fractional ones
/// use four-neighbour bilinear weights with out-of-bounds neighbours reading
/// zero; fractional sampling is undefined for [`OutOfBounds::NegInf`].
pub fn bilinear_sample(channel: &Tensor, y: f32, x: f32, oob: OutOfBounds) -> Result<f32> {
    let (h, w) = match channel.dims() {
        [h, w] => (*h, *w),
        [1, h, w] => (*h, *w),
        dims => {
            return Err(Error::Shape(format!(
                "bilinear_sample needs an H×W channel, got {:?}",
                dims
            )))
        }
    };
    match plan_sample(h, w, y, x)? {
        Sample::Exact(idx) => Ok(idx.map_or(oob.value(), |k| channel.data()[k])),
        Sample::Fractional(y, x) => match oob {
            OutOfBounds::Zero => Ok(interpolate(channel.data(), h, w, y, x)),
            OutOfBounds::NegInf => Err(Error::Param(format!(
                "fractional coordinate ({}, {}) with -inf padding",
                y, x
            ))),
        },
    }
}

#[derive(Debug, Clone, Copy)]
enum Sample {
    /// In-bounds linear index, or `None` for out of bounds.
    Exact(Option<usize>),
    Fractional(f32, f32),
}

fn plan_sample(h: usize, w: usize, y: f32, x: f32) -> Result<Sample> {
    if !y.is_finite() || !x.is_finite() {
        return Err(Error::Param(format!("non-finite sample coordinate ({}, {})", y, x)));
    }
    if y.fract() != 0.0 || x.fract() != 0.0 {
        return Ok(Sample::Fractional(y, x));
    }
    let inside = y >= 0.0 && x >= 0.0 && y < h as f32 && x < w as f32;
    Ok(Sample::Exact(inside.then(|| y as usize * w + x as usize)))
}

fn interpolate(plane: &[f32], h: usize, w: usize, y: f32, x: f32) -> f32 {
    let y0 = y.floor();
    let x0 = x.floor();
    let dy = y - y0;
    let dx = x - x0;
    let at = |yy: f32, xx: f32| -> f32 {
        if yy >= 0.0 && xx >= 0.0 && yy < h as f32 && xx < w as f32 {
            plane[yy as usize * w + xx as usize]
        } else {
            0.0
        }
    };
    (1.0 - dy) * (1.0 - dx) * at(y0, x0)
        + (1.0 - dy) * dx * at(y0, x0 + 1.0)
        + dy * (1.0 - dx) * at(y0 + 1.0, x0)
        + dy * dx * at(y0 + 1.0, x0 + 1.0)
}

/// Resolves every (output position, tap) to a sample once; shared by all
/// channels since offsets carry no channel axis.
fn plan_offsets(offsets: &OffsetVolume, win: Window, h: usize, w: usize) -> Result<Vec<Sample>> {
    let n = win.size;
    let mut plan = Vec::with_capacity(offsets.out_height * offsets.out_width * n * n);
    for i in 0..offsets.out_height {
        for j in 0..offsets.out_width {
            for a in 0..n {
                for b in 0..n {
                    let (by, bx) = win.base(i, j, a, b);
                    let (dy, dx) = offsets.delta(i, j, a, b);
                    plan.push(plan_sample(h, w, by as f32 + dy, bx as f32 + dx)?);
                }
            }
        }
    }
    Ok(plan)
}

fn derive_offsets(key_in: &PermKey, key_out: &PermKey, win: Window) -> Result<OffsetVolume> {
    let (h, w) = key_in.grid();
    let (oh, ow) = win.output_dims(h, w)?;
    key_out.check_grid(oh, ow)?;
    let inverse_in = invert_key(key_in)?;
    let n = win.size;
    let mut values = Vec::with_capacity(oh * ow * 2 * n * n);
    for i in 0..oh {
        for j in 0..ow {
            // Plain output position this shuffled output slot stands for.
            let (u, v) = key_out.source_at(i, j);
            for a in 0..n {
                for b in 0..n {
                    let (ty, tx) = win.base(u, v, a, b);
                    let (by, bx) = win.base(i, j, a, b);
                    let target = if ty >= 0 && tx >= 0 && (ty as usize) < h && (tx as usize) < w {
                        let (sy, sx) = inverse_in.source_at(ty as usize, tx as usize);
                        (sy as isize, sx as isize)
                    } else {
                        SENTINEL
                    };
                    values.push((target.0 - by) as f32);
                    values.push((target.1 - bx) as f32);
                }
            }
        }
    }
    OffsetVolume::new(oh, ow, n, values)
}

/// Offsets that make [`deform_conv2d`] on a `key_in`-shuffled input produce
/// the plain convolution output shuffled by `key_out`.
pub fn derive_conv_offsets(key_in: &PermKey, key_out: &PermKey, params: &ConvParams) -> Result<OffsetVolume> {
    params.validate()?;
    derive_offsets(key_in, key_out, params.window())
}

/// Pooling counterpart of [`derive_conv_offsets`].
pub fn derive_pool_offsets(key_in: &PermKey, key_out: &PermKey, params: &PoolParams) -> Result<OffsetVolume> {
    let win = params.geometry();
    win.validate()?;
    let (h, w) = key_in.grid();
    let (oh, ow) = win.output_dims(h, w)?;
    // padding < window guarantees this; a window of pure sentinels would
    // produce -inf.
    for i in 0..oh {
        for j in 0..ow {
            let live = (0..win.size).any(|a| {
                (0..win.size).any(|b| {
                    let (y, x) = win.base(i, j, a, b);
                    y >= 0 && x >= 0 && (y as usize) < h && (x as usize) < w
                })
            });
            if !live {
                return Err(Error::Param(format!(
                    "pool window at output ({}, {}) lies entirely in padding",
                    i, j
                )));
            }
        }
    }
    derive_offsets(key_in, key_out, win)
}

/// Convolution whose taps sample at base grid plus offset. The accumulation
/// order matches [`crate::ops::conv2d_ref`] exactly.
pub fn deform_conv2d(
    input: &Tensor,
    weights: &Tensor,
    bias: &Tensor,
    offsets: &OffsetVolume,
    params: &ConvParams,
) -> Result<Tensor> {
    let (cin, h, w) = input.chw()?;
    let n = params.kernel;
    if weights.dims() != [params.out_channels, params.in_channels, n, n] {
        return Err(Error::Shape(format!(
            "conv weights {:?} do not match params {}x{}x{}x{}",
            weights.dims(),
            params.out_channels,
            params.in_channels,
            n,
            n
        )));
    }
    if cin != params.in_channels {
        return Err(Error::Shape(format!(
            "input has {} channels, conv expects {}",
            cin, params.in_channels
        )));
    }
    if bias.dims() != [params.out_channels] {
        return Err(Error::Shape(format!(
            "bias dims {:?}, expected [{}]",
            bias.dims(),
            params.out_channels
        )));
    }
    let (oh, ow) = params.output_dims(h, w)?;
    offsets.check_against(oh, ow, n)?;
    let plan = plan_offsets(offsets, params.window(), h, w)?;
    let taps = n * n;
    let cout = params.out_channels;
    let wd = weights.data();
    let mut out = Vec::with_capacity(cout * oh * ow);
    for o in 0..cout {
        for pos in 0..oh * ow {
            let samples = &plan[pos * taps..(pos + 1) * taps];
            let mut acc = bias.data()[o];
            for c in 0..cin {
                let plane = input.channel(c);
                let wrow = &wd[(o * cin + c) * taps..(o * cin + c + 1) * taps];
                for (wv, s) in wrow.iter().zip(samples) {
                    let v = match *s {
                        Sample::Exact(Some(k)) => plane[k],
                        Sample::Exact(None) => 0.0,
                        Sample::Fractional(y, x) => interpolate(plane, h, w, y, x),
                    };
                    acc += wv * v;
                }
            }
            out.push(acc);
        }
    }
    Tensor::new(&[cout, oh, ow], out)
}

/// Max pooling whose taps sample at base grid plus offset; sentinel taps read
/// `-inf` and never win. Ties keep the first tap in row-major order.
pub fn deform_maxpool2d(input: &Tensor, offsets: &OffsetVolume, params: &PoolParams) -> Result<Tensor> {
    let (ch, h, w) = input.chw()?;
    let win = params.geometry();
    let (oh, ow) = win.output_dims(h, w)?;
    offsets.check_against(oh, ow, win.size)?;
    let plan = plan_offsets(offsets, win, h, w)?;
    if let Some(Sample::Fractional(y, x)) = plan.iter().find(|s| matches!(s, Sample::Fractional(..))) {
        return Err(Error::Param(format!(
            "max pooling cannot sample fractional coordinate ({}, {})",
            y, x
        )));
    }
    let taps = win.size * win.size;
    let mut out = Vec::with_capacity(ch * oh * ow);
    for c in 0..ch {
        let plane = input.channel(c);
        for samples in plan.chunks_exact(taps) {
            let mut best = f32::NEG_INFINITY;
            for s in samples {
                let v = match *s {
                    Sample::Exact(Some(k)) => plane[k],
                    _ => f32::NEG_INFINITY,
                };
                if v > best {
                    best = v;
                }
            }
            out.push(best);
        }
    }
    Tensor::new(&[ch, oh, ow], out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::{conv2d_ref, maxpool2d_ref};

    fn swap_key_3x3() -> PermKey {
        PermKey::new(3, 3, vec![4, 1, 2, 3, 0, 5, 6, 7, 8]).unwrap()
    }

    #[test]
    fn sampler_examples() {
        let ch = Tensor::new(&[2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(bilinear_sample(&ch, 1.0, 1.0, OutOfBounds::Zero).unwrap(), 4.0);
        assert_eq!(bilinear_sample(&ch, -1.0, 0.0, OutOfBounds::Zero).unwrap(), 0.0);
        assert_eq!(
            bilinear_sample(&ch, 2.0, 0.0, OutOfBounds::NegInf).unwrap(),
            f32::NEG_INFINITY
        );
        let ch = Tensor::new(&[2, 2], vec![0.0, 2.0, 0.0, 0.0]).unwrap();
        assert_eq!(bilinear_sample(&ch, 0.0, 0.5, OutOfBounds::Zero).unwrap(), 1.0);
    }

    #[test]
    fn sampler_rejects_bad_coordinates() {
        let ch = Tensor::zeros(&[2, 2]).unwrap();
        assert!(bilinear_sample(&ch, f32::NAN, 0.0, OutOfBounds::Zero).is_err());
        assert!(bilinear_sample(&ch, 0.0, f32::INFINITY, OutOfBounds::Zero).is_err());
        assert_eq!(
            bilinear_sample(&ch, 0.5, 0.0, OutOfBounds::NegInf).unwrap_err().code(),
            "param"
        );
    }

    #[test]
    fn exact_gather_keeps_signed_zero() {
        let ch = Tensor::new(&[1, 2], vec![-0.0, 1.0]).unwrap();
        let v = bilinear_sample(&ch, 0.0, 0.0, OutOfBounds::Zero).unwrap();
        assert_eq!(v.to_bits(), (-0.0f32).to_bits());
    }

    #[test]
    fn fractional_sample_near_edge() {
        let ch = Tensor::new(&[2, 2], vec![4.0, 0.0, 0.0, 0.0]).unwrap();
        // Half of (0,0) and half of the out-of-bounds row -1.
        assert_eq!(bilinear_sample(&ch, -0.5, 0.0, OutOfBounds::Zero).unwrap(), 2.0);
    }

    #[test]
    fn identity_keys_give_zero_offsets() {
        let id = PermKey::identity(5, 6).unwrap();
        let params = ConvParams::new(1, 1, 3, 1, 0);
        let out_id = PermKey::identity(3, 4).unwrap();
        assert!(derive_conv_offsets(&id, &out_id, &params).unwrap().is_all_zero());
        let pool = PoolParams::new(2, 2, 0);
        let out_id = PermKey::identity(2, 3).unwrap();
        assert!(derive_pool_offsets(&id, &out_id, &pool).unwrap().is_all_zero());
    }

    #[test]
    fn swap_key_offsets_by_hand() {
        let params = ConvParams::new(1, 1, 2, 1, 0);
        let off = derive_conv_offsets(&swap_key_3x3(), &PermKey::identity(2, 2).unwrap(), &params).unwrap();
        assert_eq!(off.shape(), (2, 2, 8));
        let k = off.index(0, 0, 0);
        assert_eq!(&off.values()[k..k + 8], &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0, -1.0, -1.0]);
    }

    #[test]
    fn swap_key_conv_reads_true_pixels() {
        let params = ConvParams::new(1, 1, 2, 1, 0);
        let off = derive_conv_offsets(&swap_key_3x3(), &PermKey::identity(2, 2).unwrap(), &params).unwrap();
        let shuffled = Tensor::new(&[1, 3, 3], vec![5.0, 2.0, 3.0, 4.0, 1.0, 6.0, 7.0, 8.0, 9.0]).unwrap();
        let wts = Tensor::full(&[1, 1, 2, 2], 1.0).unwrap();
        let bias = Tensor::zeros(&[1]).unwrap();
        let out = deform_conv2d(&shuffled, &wts, &bias, &off, &params).unwrap();
        assert_eq!(out.data()[0], 12.0);
        let plain = Tensor::from_fn(&[1, 3, 3], |k| (k + 1) as f32).unwrap();
        assert!(out.bit_eq(&conv2d_ref(&plain, &wts, &bias, 1, 0).unwrap()));
    }

    #[test]
    fn reversed_pool_offsets_by_hand() {
        let rev = PermKey::new(2, 2, vec![3, 2, 1, 0]).unwrap();
        let params = PoolParams::new(2, 2, 0);
        let off = derive_pool_offsets(&rev, &PermKey::identity(1, 1).unwrap(), &params).unwrap();
        assert_eq!(off.values(), &[1.0, 1.0, 1.0, -1.0, -1.0, 1.0, -1.0, -1.0]);
        let shuffled = Tensor::new(&[1, 2, 2], vec![4.0, 3.0, 2.0, 1.0]).unwrap();
        assert_eq!(deform_maxpool2d(&shuffled, &off, &params).unwrap().data(), &[4.0]);
    }

    #[test]
    fn pool_offset_shape() {
        let id = PermKey::identity(4, 4).unwrap();
        let off = derive_pool_offsets(&id, &PermKey::identity(2, 2).unwrap(), &PoolParams::new(2, 2, 0)).unwrap();
        assert_eq!(off.shape(), (2, 2, 8));
    }

    #[test]
    fn zero_offsets_match_plain_ops() {
        let x = Tensor::from_fn(&[2, 5, 4], |k| ((k * 37 % 11) as f32) - 5.0).unwrap();
        let params = ConvParams::new(2, 3, 3, 2, 1);
        let wts = Tensor::from_fn(&[3, 2, 3, 3], |k| (k as f32 * 0.13).sin()).unwrap();
        let bias = Tensor::new(&[3], vec![0.5, -0.25, 0.0]).unwrap();
        let (oh, ow) = params.output_dims(5, 4).unwrap();
        let off = OffsetVolume::zeros(oh, ow, 3).unwrap();
        let a = deform_conv2d(&x, &wts, &bias, &off, &params).unwrap();
        assert!(a.bit_eq(&conv2d_ref(&x, &wts, &bias, 2, 1).unwrap()));

        let pool = PoolParams::new(3, 2, 1);
        let (oh, ow) = pool.output_dims(5, 4).unwrap();
        let off = OffsetVolume::zeros(oh, ow, 3).unwrap();
        let a = deform_maxpool2d(&x, &off, &pool).unwrap();
        assert!(a.bit_eq(&maxpool2d_ref(&x, 3, 2, 1).unwrap()));
    }

    #[test]
    fn padded_taps_hit_the_sentinel() {
        let key = crate::key::generate_key(4, 4, 3).unwrap();
        let out_key = crate::key::generate_key(4, 4, 4).unwrap();
        let params = ConvParams::new(1, 1, 3, 1, 1);
        let win = params.window();
        let off = derive_conv_offsets(&key, &out_key, &params).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let (u, v) = out_key.source_at(i, j);
                for a in 0..3 {
                    for b in 0..3 {
                        let (ty, tx) = win.base(u, v, a, b);
                        if ty < 0 || tx < 0 || ty >= 4 || tx >= 4 {
                            let (by, bx) = win.base(i, j, a, b);
                            let (dy, dx) = off.delta(i, j, a, b);
                            assert_eq!((by as f32 + dy, bx as f32 + dx), (-1.0, -1.0));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn shape_errors() {
        let x = Tensor::zeros(&[1, 4, 4]).unwrap();
        let params = ConvParams::new(1, 1, 3, 1, 0);
        let wts = Tensor::zeros(&[1, 1, 3, 3]).unwrap();
        let b = Tensor::zeros(&[1]).unwrap();
        let bad = OffsetVolume::zeros(3, 3, 3).unwrap();
        assert_eq!(deform_conv2d(&x, &wts, &b, &bad, &params).unwrap_err().code(), "shape");
        assert!(OffsetVolume::new(2, 2, 3, vec![0.0; 10]).is_err());
        let id = PermKey::identity(4, 4).unwrap();
        let err = derive_conv_offsets(&id, &PermKey::identity(4, 4).unwrap(), &params).unwrap_err();
        assert_eq!(err.code(), "grid");
    }

    #[test]
    fn fractional_offsets_rejected_by_pool() {
        let x = Tensor::zeros(&[1, 2, 2]).unwrap();
        let mut off = OffsetVolume::zeros(1, 1, 2).unwrap();
        off.values_mut()[0] = 0.5;
        assert_eq!(
            deform_maxpool2d(&x, &off, &PoolParams::new(2, 2, 0))
                .unwrap_err()
                .code(),
            "param"
        );
    }

    #[test]
    fn fractional_offsets_interpolate_in_conv() {
        let x = Tensor::new(&[1, 1, 2], vec![0.0, 2.0]).unwrap();
        let mut off = OffsetVolume::zeros(1, 2, 1).unwrap();
        off.values_mut()[1] = 0.5;
        let params = ConvParams::new(1, 1, 1, 1, 0);
        let w = Tensor::full(&[1, 1, 1, 1], 1.0).unwrap();
        let out = deform_conv2d(&x, &w, &Tensor::zeros(&[1]).unwrap(), &off, &params).unwrap();
        assert_eq!(out.data(), &[1.0, 2.0]);
    }
}
