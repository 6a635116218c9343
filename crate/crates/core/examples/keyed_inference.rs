//! Compile a small VGG-style classifier against a key and run it on a
//! shuffled image.
//!
//! Run with `cargo run --example keyed_inference`.

use keyed_deform::keyed::verify_compiled;
use keyed_deform::prelude::*;
use keyed_deform::zoo::{conv_layer, dense_layer, random_tensor};

pub fn run() -> Result<()> {
    let mut rng = SplitMix64::new(2024);
    let model = ModelSpec::new(
        [3, 16, 16],
        vec![
            conv_layer(&mut rng, ConvParams::new(3, 8, 3, 1, 1)),
            Layer::Relu,
            Layer::MaxPool2d(PoolParams::new(2, 2, 0)),
            conv_layer(&mut rng, ConvParams::new(8, 8, 3, 1, 1)),
            Layer::Relu,
            Layer::MaxPool2d(PoolParams::new(2, 2, 0)),
            Layer::Flatten,
            dense_layer(&mut rng, 8 * 4 * 4, 10),
        ],
    )?;
    let image = random_tensor(&mut rng, &[3, 16, 16]);

    let key = generate_key(16, 16, 0xC0FFEE)?;
    let keyed = keyed_compile(&model, &key, 99)?;
    for o in keyed.offsets() {
        let (h, w, t) = o.volume.shape();
        println!(
            "layer {} ({}): offsets {h}x{w}x{t}",
            o.layer,
            model.layers()[o.layer].name()
        );
    }

    let logits = keyed_forward(&keyed, &shuffle(&image, &key)?)?.output;
    let plain = plain_forward(&model, &image)?.output;
    println!("keyed class {:?}, plain class {:?}", logits.argmax(), plain.argmax());
    assert!(logits.bit_eq(&plain));

    let report = verify_compiled(&keyed, &image)?;
    println!(
        "bitwise equal: {}, largest per-layer difference: {}",
        report.bitwise_equal,
        report.per_layer_diffs.iter().map(|d| d.1).fold(0.0, f32::max)
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
