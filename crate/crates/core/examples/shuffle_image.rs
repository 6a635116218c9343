//! Shuffle an image's pixels with a secret key and restore it.
//!
//! Run with `cargo run --example shuffle_image`.

use keyed_deform::prelude::*;

fn show(label: &str, t: &Tensor) {
    let (_, h, w) = t.chw().unwrap();
    println!("{label}");
    for row in t.channel(0).chunks(w).take(h) {
        let line: String = row.iter().map(|&v| if v > 0.5 { '#' } else { '.' }).collect();
        println!("  {line}");
    }
}

pub fn run() -> Result<()> {
    // A 3-channel 8×8 image with a diagonal stripe in channel 0.
    let image = Tensor::from_fn(&[3, 8, 8], |k| {
        let (c, y, x) = (k / 64, k / 8 % 8, k % 8);
        if c == 0 && y.abs_diff(x) <= 1 {
            1.0
        } else {
            c as f32 * 0.25
        }
    })?;
    let key = generate_key(8, 8, 0x5eed)?;
    let private = shuffle(&image, &key)?;
    show("plain", &image);
    show("shuffled", &private);

    let mut a: Vec<u32> = image.channel(0).iter().map(|v| v.to_bits()).collect();
    let mut b: Vec<u32> = private.channel(0).iter().map(|v| v.to_bits()).collect();
    a.sort_unstable();
    b.sort_unstable();
    assert_eq!(a, b, "shuffling only moves pixels");

    let restored = unshuffle(&private, &key)?;
    assert!(restored.bit_eq(&image));
    println!("round trip is bit exact; first key entries {:?}", &key.map()[..8]);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
