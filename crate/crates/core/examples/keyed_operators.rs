//! A deformable convolution and max pooling whose offsets come from keys.
//!
//! Run with `cargo run --example keyed_operators`.

use keyed_deform::prelude::*;

pub fn run() -> Result<()> {
    // 3×3 image whose key swaps the corners (0,0) and (1,1).
    let image = Tensor::new(&[1, 3, 3], (1..=9).map(|v| v as f32).collect())?;
    let key_in = PermKey::new(3, 3, vec![4, 1, 2, 3, 0, 5, 6, 7, 8])?;
    let key_out = PermKey::identity(2, 2)?;
    let params = ConvParams::new(1, 1, 2, 1, 0);

    let offsets = derive_conv_offsets(&key_in, &key_out, &params)?;
    let (h, w, taps) = offsets.shape();
    println!("offset volume {h}x{w}x{taps}");
    println!("offsets at output (0,0): {:?}", &offsets.values()[..taps]);

    let shuffled = shuffle(&image, &key_in)?;
    let ones = Tensor::full(&[1, 1, 2, 2], 1.0)?;
    let zero = Tensor::zeros(&[1])?;
    let keyed = deform_conv2d(&shuffled, &ones, &zero, &offsets, &params)?;
    let plain = conv2d_ref(&image, &ones, &zero, 1, 0)?;
    println!("keyed conv {:?}, plain conv {:?}", keyed.data(), plain.data());
    assert!(keyed.bit_eq(&plain));

    // Random keys on both sides and padding: the keyed result is the plain
    // result shuffled by the output key.
    let mut rng = SplitMix64::new(7);
    let x = zoo::random_tensor(&mut rng, &[2, 9, 7]);
    let pool = PoolParams::new(3, 2, 1);
    let (oh, ow) = pool.output_dims(9, 7)?;
    let k_in = generate_key(9, 7, 1)?;
    let k_out = generate_key(oh, ow, 2)?;
    let vol = derive_pool_offsets(&k_in, &k_out, &pool)?;
    let keyed = deform_maxpool2d(&shuffle(&x, &k_in)?, &vol, &pool)?;
    let expect = gather_spatial(&maxpool2d_ref(&x, 3, 2, 1)?, &k_out)?;
    assert!(keyed.bit_eq(&expect));
    println!("keyed max pool on a padded {oh}x{ow} grid matches bit for bit");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
