//! Without the key, a compiled model is useless: inputs shuffled by any
//! other key produce outputs far from the plain ones.
//!
//! Run with `cargo run --example access_control`.

use keyed_deform::prelude::*;
use keyed_deform::zoo::{conv_layer, dense_layer, random_tensor};

pub fn run() -> Result<()> {
    let mut rng = SplitMix64::new(11);
    let model = ModelSpec::new(
        [1, 10, 10],
        vec![
            conv_layer(&mut rng, ConvParams::new(1, 4, 3, 1, 1)),
            Layer::Relu,
            Layer::MaxPool2d(PoolParams::new(2, 2, 0)),
            conv_layer(&mut rng, ConvParams::new(4, 4, 3, 1, 1)),
            Layer::Relu,
            Layer::Flatten,
            dense_layer(&mut rng, 4 * 5 * 5, 10),
        ],
    )?;
    let inputs: Vec<Tensor> = (0..16).map(|_| random_tensor(&mut rng, &[1, 10, 10])).collect();
    let key = generate_key(10, 10, 1)?;

    let right = divergence_score(&model, &key, &key, 5, &inputs)?;
    println!(
        "right key : relative L2 {:.3e}, argmax agreement {:.2}",
        right.mean_relative_l2, right.argmax_agreement
    );
    assert_eq!(right.mean_relative_l2, 0.0);

    for seed in 2..6 {
        let wrong = generate_key(10, 10, seed)?;
        let d = divergence_score(&model, &key, &wrong, 5, &inputs)?;
        println!(
            "wrong key {seed}: relative L2 {:.3e}, argmax agreement {:.2}",
            d.mean_relative_l2, d.argmax_agreement
        );
        assert!(d.mean_relative_l2 >= 1e-2);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
