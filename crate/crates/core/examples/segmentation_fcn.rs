//! A fully convolutional network keeps a spatial output. The last key is
//! undone after the final layer, so the label map comes back in plain order.
//!
//! Run with `cargo run --example segmentation_fcn`.

use keyed_deform::prelude::*;
use keyed_deform::zoo::{conv_layer, random_tensor};

const CLASSES: usize = 3;

fn label_map(scores: &Tensor) -> Vec<usize> {
    let (c, h, w) = scores.chw().unwrap();
    (0..h * w)
        .map(|p| {
            (0..c).fold(0, |best, k| {
                if scores.channel(k)[p] > scores.channel(best)[p] {
                    k
                } else {
                    best
                }
            })
        })
        .collect()
}

pub fn run() -> Result<()> {
    let mut rng = SplitMix64::new(21);
    let model = ModelSpec::new(
        [3, 10, 10],
        vec![
            conv_layer(&mut rng, ConvParams::new(3, 6, 3, 1, 1)),
            Layer::Relu,
            conv_layer(&mut rng, ConvParams::new(6, 6, 5, 1, 2)),
            Layer::Relu,
            conv_layer(&mut rng, ConvParams::new(6, CLASSES, 1, 1, 0)),
        ],
    )?;
    let image = random_tensor(&mut rng, &[3, 10, 10]);
    let key = generate_key(10, 10, 77)?;
    let keyed = keyed_compile(&model, &key, 3)?;

    let scores = keyed_forward(&keyed, &shuffle(&image, &key)?)?.output;
    assert!(scores.bit_eq(&plain_forward(&model, &image)?.output));
    for row in label_map(&scores).chunks(10) {
        println!("  {}", row.iter().map(|k| k.to_string()).collect::<String>());
    }
    println!("per-pixel labels match the plain network");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
