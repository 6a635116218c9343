//! Exact CNN inference on pixel-shuffled images.
//!
//! An image is shuffled with a secret [`PermKey`] at capture time. A plain,
//! pre-trained model is then compiled against that key: every convolution and
//! max pooling becomes a deformable operator whose sampling offsets are
//! derived from the keys, and every feature map stays shuffled by a fresh
//! per-layer key until the classifier head. With the right key the keyed
//! engine reproduces the plain engine bit for bit; with any other key the
//! outputs diverge.
//!
//! ```
//! use keyed_deform::prelude::*;
//!
//! let mut rng = SplitMix64::new(1);
//! let model = zoo::random_model(&mut rng, &zoo::ZooConfig::default()).unwrap();
//! let [c, h, w] = model.input_dims();
//! let image = zoo::random_tensor(&mut rng, &[c, h, w]);
//!
//! let key = generate_key(h, w, 42).unwrap();
//! let keyed = keyed_compile(&model, &key, 7).unwrap();
//! let private = shuffle(&image, &key).unwrap();
//!
//! let plain = plain_forward(&model, &image).unwrap().output;
//! let out = keyed_forward(&keyed, &private).unwrap().output;
//! assert!(out.bit_eq(&plain));
//! ```

pub mod cli;
pub mod deform;
pub mod error;
pub mod format;
pub mod key;
pub mod keyed;
pub mod model;
pub mod ops;
pub mod tensor;
pub mod transform;
pub mod zoo;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::deform::{
        bilinear_sample, deform_conv2d, deform_maxpool2d, derive_conv_offsets, derive_pool_offsets, ConvParams,
        OffsetVolume, OutOfBounds, PoolParams,
    };
    pub use crate::error::{Error, Result};
    pub use crate::key::{generate_key, invert_key, KeyChain, PermKey, SplitMix64};
    pub use crate::keyed::{
        divergence_score, keyed_compile, keyed_forward, verify_equivalence, EquivalenceReport, KeyedModel,
    };
    pub use crate::model::{plain_forward, Layer, ModelSpec};
    pub use crate::ops::{conv2d_ref, dense_ref, gap_ref, gather_spatial, maxpool2d_ref, pointwise_ref, Pointwise};
    pub use crate::tensor::Tensor;
    pub use crate::transform::{shuffle, unshuffle};
    pub use crate::zoo;
}
