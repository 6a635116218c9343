//! Corrupting one offset breaks bitwise equality, and the per-layer report
//! points at the corrupted layer.
//!
//! Run with `cargo run --example fault_localization`.

use keyed_deform::keyed::verify_compiled;
use keyed_deform::prelude::*;
use keyed_deform::zoo::{conv_layer, dense_layer, random_tensor};

pub fn run() -> Result<()> {
    let mut rng = SplitMix64::new(3);
    let model = ModelSpec::new(
        [2, 8, 8],
        vec![
            conv_layer(&mut rng, ConvParams::new(2, 3, 3, 1, 1)),
            conv_layer(&mut rng, ConvParams::new(3, 3, 3, 1, 1)),
            conv_layer(&mut rng, ConvParams::new(3, 2, 3, 1, 0)),
            Layer::Flatten,
            dense_layer(&mut rng, 2 * 6 * 6, 10),
        ],
    )?;
    let key = generate_key(8, 8, 12)?;
    let x = random_tensor(&mut rng, &[2, 8, 8]);

    for target in 0..3 {
        let mut keyed = keyed_compile(&model, &key, 4)?;
        // Centre tap of output (2,2): never a padding sentinel here.
        let volume = &mut keyed.offsets_mut()[target].volume;
        let idx = volume.index(2, 2, 4);
        volume.values_mut()[idx] += 1.0;

        let report = verify_compiled(&keyed, &x)?;
        println!(
            "fault in layer {target}: bitwise equal {}, first divergent layer {:?}",
            report.bitwise_equal,
            report.first_divergent_layer()
        );
        assert_eq!(report.first_divergent_layer(), Some(target));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
