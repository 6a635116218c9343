//! Residual blocks: the branch's last spatial layer reuses the skip source's
//! key so both addends are ordered the same way.
//!
//! Run with `cargo run --example residual_network`.

use keyed_deform::prelude::*;
use keyed_deform::zoo::{affine_layer, conv_layer, dense_layer, random_tensor};

pub fn run() -> Result<()> {
    let mut rng = SplitMix64::new(110);
    let model = ModelSpec::new(
        [3, 12, 12],
        vec![
            conv_layer(&mut rng, ConvParams::new(3, 4, 3, 1, 1)),
            // Block 1: pre-activation, two convolutions, identity skip.
            affine_layer(&mut rng, 4),
            Layer::Relu,
            conv_layer(&mut rng, ConvParams::new(4, 4, 3, 1, 1)),
            affine_layer(&mut rng, 4),
            Layer::Relu,
            conv_layer(&mut rng, ConvParams::new(4, 4, 3, 1, 1)),
            Layer::ResidualAdd { from: 0 },
            // Downsample, then block 2.
            conv_layer(&mut rng, ConvParams::new(4, 6, 3, 2, 1)),
            Layer::Relu,
            conv_layer(&mut rng, ConvParams::new(6, 6, 1, 1, 0)),
            Layer::ResidualAdd { from: 9 },
            Layer::GlobalAvgPool,
            dense_layer(&mut rng, 6, 10),
        ],
    )?;
    let key = generate_key(12, 12, 31337)?;
    let keyed = keyed_compile(&model, &key, 8)?;
    for (add, from, last) in [(7, 0, 6), (11, 9, 10)] {
        assert_eq!(keyed.layer_key(last), keyed.layer_key(from));
        println!("add at layer {add}: layer {last} adopts the key of layer {from}");
    }

    let x = random_tensor(&mut rng, &[3, 12, 12]);
    let report = verify_equivalence(&model, &key, 8, &x)?;
    println!("bitwise equal: {}", report.bitwise_equal);
    assert!(report.bitwise_equal);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
