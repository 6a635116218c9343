#![allow(dead_code)]

use keyed_deform::deform::{ConvParams, PoolParams};
use keyed_deform::key::{generate_key, PermKey, SplitMix64};
use keyed_deform::model::{Layer, ModelSpec};
use keyed_deform::ops::output_extent;
use keyed_deform::zoo;

/// A random operator configuration within the sweep bounds: H,W ≤ 16,
/// n ∈ {1,2,3,5}, stride ∈ {1,2}, padding ∈ {0,1,2} with padding < n.
#[derive(Debug, Clone, Copy)]
pub struct OpCase {
    pub c_in: usize,
    pub c_out: usize,
    pub h: usize,
    pub w: usize,
    pub n: usize,
    pub stride: usize,
    pub padding: usize,
}

impl OpCase {
    pub fn out_dims(&self) -> (usize, usize) {
        (
            (self.h + 2 * self.padding - self.n) / self.stride + 1,
            (self.w + 2 * self.padding - self.n) / self.stride + 1,
        )
    }

    pub fn conv(&self) -> ConvParams {
        ConvParams::new(self.c_in, self.c_out, self.n, self.stride, self.padding)
    }

    pub fn pool(&self) -> PoolParams {
        PoolParams::new(self.n, self.stride, self.padding)
    }
}

pub fn random_case(rng: &mut SplitMix64) -> OpCase {
    loop {
        let n = [1, 2, 3, 5][rng.below(4)];
        let padding = rng.below(3);
        if padding >= n {
            continue;
        }
        let case = OpCase {
            c_in: 1 + rng.below(3),
            c_out: 1 + rng.below(3),
            h: 1 + rng.below(16),
            w: 1 + rng.below(16),
            n,
            stride: 1 + rng.below(2),
            padding,
        };
        if case.h + 2 * padding >= n && case.w + 2 * padding >= n {
            return case;
        }
    }
}

pub fn random_key(rng: &mut SplitMix64, h: usize, w: usize) -> PermKey {
    generate_key(h, w, rng.next_u64()).unwrap()
}

/// A different random key on the same grid (grids of one pixel excepted).
pub fn other_key(rng: &mut SplitMix64, key: &PermKey) -> PermKey {
    loop {
        let k = random_key(rng, key.height(), key.width());
        if &k != key || key.len() == 1 {
            return k;
        }
    }
}

pub fn has_mixing_window(model: &ModelSpec) -> bool {
    model.layers().iter().any(|l| match l {
        Layer::Conv2d { params, .. } => params.kernel > 1,
        Layer::MaxPool2d(p) => p.window > 1,
        _ => false,
    })
}

/// A random 10-class CNN with at least one spatial window wider than one
/// pixel, so wrong keys cannot be absorbed by permutation-invariant layers.
pub fn random_classifier(rng: &mut SplitMix64, head: zoo::Head, residual: bool) -> ModelSpec {
    let cfg = zoo::ZooConfig {
        head,
        residual,
        ..zoo::ZooConfig::default()
    };
    loop {
        let m = zoo::random_model(rng, &cfg).unwrap();
        if has_mixing_window(&m) {
            return m;
        }
    }
}

/// Models where a single changed activation in any spatial layer must reach
/// the output: stride-1 convolutions, affine layers and residual adds, no
/// ReLU, and at most one max pool as the last spatial layer. Returns the
/// model and the spatial layers whose faults cannot be masked downstream.
pub fn fault_model(rng: &mut SplitMix64) -> (ModelSpec, Vec<usize>) {
    let c0 = 1 + rng.below(3);
    let (mut c, mut h, mut w) = (c0, 6 + rng.below(7), 6 + rng.below(7));
    let input = [c, h, w];
    let mut layers = Vec::new();
    let convs = 2 + rng.below(2);
    for k in 0..convs {
        let n = 1 + rng.below(3);
        let padding = rng.below(2).min(n - 1);
        let cout = 1 + rng.below(3);
        layers.push(zoo::conv_layer(rng, ConvParams::new(c, cout, n, 1, padding)));
        c = cout;
        h = output_extent(h, n, 1, padding).unwrap();
        w = output_extent(w, n, 1, padding).unwrap();
        if rng.below(2) == 0 {
            layers.push(zoo::affine_layer(rng, c));
        }
        if k == 0 && rng.below(2) == 0 {
            let from = layers.len() - 1;
            layers.push(zoo::conv_layer(rng, ConvParams::new(c, c, 3, 1, 1)));
            layers.push(Layer::ResidualAdd { from });
        }
    }
    let pooled = rng.below(2) == 0;
    if pooled {
        let stride = 1 + rng.below(2);
        layers.push(Layer::MaxPool2d(PoolParams::new(2, stride, rng.below(2))));
        let padding = match layers.last() {
            Some(Layer::MaxPool2d(p)) => p.padding,
            _ => unreachable!(),
        };
        h = output_extent(h, 2, stride, padding).unwrap();
        w = output_extent(w, 2, stride, padding).unwrap();
    }
    if rng.below(2) == 0 {
        layers.push(Layer::GlobalAvgPool);
        layers.push(zoo::dense_layer(rng, c, 10));
    } else {
        layers.push(Layer::Flatten);
        layers.push(zoo::dense_layer(rng, c * h * w, 10));
    }
    let model = ModelSpec::new(input, layers).unwrap();
    let spatial: Vec<usize> = model.spatial_layers().collect();
    let sites = if pooled {
        vec![*spatial.last().unwrap()]
    } else {
        spatial
    };
    (model, sites)
}

/// A small VGG-style classifier: 3×3 same-padded convolutions each followed
/// by ReLU, 2×2 max pools between stages, and optionally one pre-activation
/// residual block.
pub fn vgg_like(rng: &mut SplitMix64, head: zoo::Head, residual: bool) -> ModelSpec {
    let (mut c, mut h, mut w) = (1 + rng.below(3), 8 + rng.below(9), 8 + rng.below(9));
    let input = [c, h, w];
    let mut layers = Vec::new();
    let stages = 1 + rng.below(2);
    for s in 0..stages {
        let cout = 2 + rng.below(3);
        layers.push(zoo::conv_layer(rng, ConvParams::new(c, cout, 3, 1, 1)));
        layers.push(Layer::Relu);
        c = cout;
        if residual && s == 0 {
            let from = layers.len() - 1;
            layers.push(zoo::affine_layer(rng, c));
            layers.push(zoo::conv_layer(rng, ConvParams::new(c, c, 3, 1, 1)));
            layers.push(Layer::ResidualAdd { from });
        }
        if h >= 4 && w >= 4 && rng.below(2) == 0 {
            layers.push(Layer::MaxPool2d(PoolParams::new(2, 2, 0)));
            h /= 2;
            w /= 2;
        }
    }
    match head {
        zoo::Head::Gap => {
            layers.push(Layer::GlobalAvgPool);
            layers.push(zoo::dense_layer(rng, c, 10));
        }
        _ => {
            layers.push(Layer::Flatten);
            layers.push(zoo::dense_layer(rng, c * h * w, 10));
        }
    }
    ModelSpec::new(input, layers).unwrap()
}
