//! Random-weight models and tensors for tests, demos and equivalence sweeps.
//!
//! Everything is driven by [`SplitMix64`], so a seed reproduces the same model
//! on every platform.

use std::sync::Arc;

use crate::deform::{ConvParams, PoolParams};
use crate::error::Result;
use crate::key::SplitMix64;
use crate::model::{Layer, ModelSpec};
use crate::ops::output_extent;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    /// Global average pool, then a dense classifier.
    Gap,
    /// Flatten, then a dense classifier.
    FlattenDense,
    /// No head: the model ends on a feature map.
    None,
}

#[derive(Debug, Clone)]
pub struct ZooConfig {
    /// Upper bound on layers before the head.
    pub max_depth: usize,
    pub head: Head,
    pub classes: usize,
    /// Guarantee at least one residual skip.
    pub residual: bool,
    pub allow_pool: bool,
    pub allow_relu: bool,
    pub max_channels: usize,
    pub min_side: usize,
    pub max_side: usize,
}

impl Default for ZooConfig {
    fn default() -> Self {
        ZooConfig {
            max_depth: 6,
            head: Head::Gap,
            classes: 10,
            residual: false,
            allow_pool: true,
            allow_relu: true,
            max_channels: 4,
            min_side: 4,
            max_side: 12,
        }
    }
}

pub fn random_tensor(rng: &mut SplitMix64, dims: &[usize]) -> Tensor {
    Tensor::from_fn(dims, |_| rng.uniform(-1.0, 1.0)).expect("valid dims")
}

fn scaled(rng: &mut SplitMix64, dims: &[usize], scale: f32) -> Arc<Tensor> {
    Arc::new(Tensor::from_fn(dims, |_| scale * rng.uniform(-1.0, 1.0)).expect("valid dims"))
}

/// Conv layer with weights scaled by `1/sqrt(fan_in)`.
pub fn conv_layer(rng: &mut SplitMix64, params: ConvParams) -> Layer {
    let n = params.kernel;
    let fan_in = (params.in_channels * n * n) as f32;
    Layer::Conv2d {
        params,
        weight: scaled(
            rng,
            &[params.out_channels, params.in_channels, n, n],
            fan_in.sqrt().recip(),
        ),
        bias: scaled(rng, &[params.out_channels], 0.1),
    }
}

/// Per-channel affine resembling a folded batch norm.
pub fn affine_layer(rng: &mut SplitMix64, channels: usize) -> Layer {
    let scale = Tensor::from_fn(&[channels], |_| rng.uniform(0.5, 1.5)).expect("valid dims");
    Layer::Affine {
        scale: Arc::new(scale),
        shift: scaled(rng, &[channels], 0.2),
    }
}

pub fn dense_layer(rng: &mut SplitMix64, inputs: usize, outputs: usize) -> Layer {
    Layer::Dense {
        weight: scaled(rng, &[outputs, inputs], (inputs as f32).sqrt().recip()),
        bias: scaled(rng, &[outputs], 0.1),
    }
}

fn pick<T: Copy>(rng: &mut SplitMix64, items: &[T]) -> T {
    items[rng.below(items.len())]
}

struct Builder {
    layers: Vec<Layer>,
    c: usize,
    h: usize,
    w: usize,
}

impl Builder {
    fn try_conv(&mut self, rng: &mut SplitMix64, max_channels: usize) -> bool {
        let n = pick(rng, &[1, 2, 3]);
        let stride = pick(rng, &[1, 2]);
        let padding = rng.below(2).min(n - 1);
        let (Some(oh), Some(ow)) = (
            output_extent(self.h, n, stride, padding),
            output_extent(self.w, n, stride, padding),
        ) else {
            return false;
        };
        if oh < 2 || ow < 2 {
            return false;
        }
        let cout = 1 + rng.below(max_channels);
        self.layers
            .push(conv_layer(rng, ConvParams::new(self.c, cout, n, stride, padding)));
        (self.c, self.h, self.w) = (cout, oh, ow);
        true
    }

    fn try_pool(&mut self, rng: &mut SplitMix64) -> bool {
        let window = pick(rng, &[2, 3]);
        let stride = pick(rng, &[1, 2]);
        let padding = rng.below(2);
        let (Some(oh), Some(ow)) = (
            output_extent(self.h, window, stride, padding),
            output_extent(self.w, window, stride, padding),
        ) else {
            return false;
        };
        if oh < 2 || ow < 2 {
            return false;
        }
        self.layers
            .push(Layer::MaxPool2d(PoolParams::new(window, stride, padding)));
        (self.h, self.w) = (oh, ow);
        true
    }

    /// `same`-size conv, optional affine/relu, then add the pre-block output.
    fn residual_block(&mut self, rng: &mut SplitMix64, allow_relu: bool) {
        let from = self.layers.len() - 1;
        let n = pick(rng, &[1, 3]);
        self.layers
            .push(conv_layer(rng, ConvParams::new(self.c, self.c, n, 1, (n - 1) / 2)));
        if rng.below(2) == 0 {
            self.layers.push(affine_layer(rng, self.c));
        } else if allow_relu {
            self.layers.push(Layer::Relu);
        }
        self.layers.push(Layer::ResidualAdd { from });
    }
}

/// Draws a random model. Depth counts layers before the head.
pub fn random_model(rng: &mut SplitMix64, config: &ZooConfig) -> Result<ModelSpec> {
    let side = config.max_side.saturating_sub(config.min_side) + 1;
    let input = [
        1 + rng.below(3),
        config.min_side + rng.below(side),
        config.min_side + rng.below(side),
    ];
    let mut b = Builder {
        layers: Vec::new(),
        c: input[0],
        h: input[1],
        w: input[2],
    };
    let mut depth = 1 + rng.below(config.max_depth.max(1));
    if config.residual {
        // Room for a stem conv plus a three-layer block.
        depth = depth.max(4);
    }
    let mut has_residual = false;
    while b.layers.len() < depth {
        let room = depth - b.layers.len();
        if config.residual && !has_residual && (room <= 3 || rng.below(3) == 0) {
            if b.layers.is_empty() {
                let stem = ConvParams::new(b.c, 1 + rng.below(config.max_channels), 3, 1, 1);
                b.layers.push(conv_layer(rng, stem));
                b.c = stem.out_channels;
            } else {
                b.residual_block(rng, config.allow_relu);
                has_residual = true;
            }
            continue;
        }
        match rng.below(6) {
            0 | 1 => {
                if !b.try_conv(rng, config.max_channels) {
                    b.layers.push(affine_layer(rng, b.c));
                }
            }
            2 if config.allow_pool => {
                if !b.try_pool(rng) {
                    b.layers.push(affine_layer(rng, b.c));
                }
            }
            3 if config.allow_relu => b.layers.push(Layer::Relu),
            4 if !b.layers.is_empty() && room >= 3 => {
                b.residual_block(rng, config.allow_relu);
                has_residual = true;
            }
            _ => b.layers.push(affine_layer(rng, b.c)),
        }
    }
    match config.head {
        Head::Gap => {
            b.layers.push(Layer::GlobalAvgPool);
            b.layers.push(dense_layer(rng, b.c, config.classes));
        }
        Head::FlattenDense => {
            b.layers.push(Layer::Flatten);
            b.layers.push(dense_layer(rng, b.c * b.h * b.w, config.classes));
        }
        Head::None => {}
    }
    ModelSpec::new(input, b.layers)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn models_validate_and_respect_config() {
        let mut rng = SplitMix64::new(17);
        for head in [Head::Gap, Head::FlattenDense, Head::None] {
            for residual in [false, true] {
                for _ in 0..50 {
                    let cfg = ZooConfig {
                        head,
                        residual,
                        ..ZooConfig::default()
                    };
                    let m = random_model(&mut rng, &cfg).unwrap();
                    if residual {
                        assert!(m.layers().iter().any(|l| matches!(l, Layer::ResidualAdd { .. })));
                    }
                    match head {
                        Head::None => assert_eq!(m.output_dims().len(), 3),
                        _ => assert_eq!(m.output_dims(), &[10]),
                    }
                }
            }
        }
    }

    #[test]
    fn same_seed_same_model() {
        let a = random_model(&mut SplitMix64::new(5), &ZooConfig::default()).unwrap();
        let b = random_model(&mut SplitMix64::new(5), &ZooConfig::default()).unwrap();
        assert_eq!(a, b);
    }
}
