//! The file-level pipeline: key files, tensor files, PPM import, model
//! manifests, compiled models, and the same steps through the CLI entry point.
//!
//! Run with `cargo run --example file_formats`.

use keyed_deform::cli;
use keyed_deform::format::{
    load_compiled, read_image, read_key, read_tensor, save_compiled, save_model, write_key, write_tensor,
};
use keyed_deform::prelude::*;
use keyed_deform::zoo::{conv_layer, dense_layer};

pub fn run() -> std::result::Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let path = |name: &str| dir.path().join(name);

    // An 8×6 RGB gradient as a binary PPM.
    let mut ppm = b"P6\n8 6\n255\n".to_vec();
    for y in 0..6u8 {
        for x in 0..8u8 {
            ppm.extend_from_slice(&[x * 32, y * 40, 128]);
        }
    }
    std::fs::write(path("photo.ppm"), &ppm)?;

    let key = generate_key(6, 8, 4242)?;
    write_key(&path("secret.pkey"), &key)?;
    println!("key file: {} bytes", std::fs::metadata(path("secret.pkey"))?.len());
    assert_eq!(read_key(&path("secret.pkey"))?, key);

    let image = read_image(&path("photo.ppm"))?;
    write_tensor(&path("private.tnsr"), &shuffle(&image, &key)?)?;

    let mut rng = SplitMix64::new(5);
    let model = ModelSpec::new(
        [3, 6, 8],
        vec![
            conv_layer(&mut rng, ConvParams::new(3, 4, 3, 1, 1)),
            Layer::Relu,
            Layer::MaxPool2d(PoolParams::new(2, 2, 0)),
            Layer::GlobalAvgPool,
            dense_layer(&mut rng, 4, 10),
        ],
    )?;
    save_model(&model, &path("model.json"))?;
    save_compiled(
        &path("keyed.json"),
        &keyed_compile(&model, &key, 17)?,
        &path("model.json"),
    )?;

    let keyed = load_compiled(&path("keyed.json"))?;
    let out = keyed_forward(&keyed, &read_tensor(&path("private.tnsr"))?)?.output;
    assert!(out.bit_eq(&plain_forward(&model, &image)?.output));
    println!("library path: class {:?}", out.argmax());

    // The same pipeline through the command-line entry point.
    let p = |name: &str| path(name).display().to_string();
    let (k, t, c, o) = (p("cli.pkey"), p("cli.tnsr"), p("cli.json"), p("cli_out.tnsr"));
    let (photo, manifest) = (p("photo.ppm"), p("model.json"));
    let steps: [&[&str]; 4] = [
        &["keygen", "--height", "6", "--width", "8", "--seed", "9", "--out", &k],
        &["encrypt", "--key", &k, "--in", &photo, "--out", &t],
        &[
            "compile",
            "--model",
            &manifest,
            "--key",
            &k,
            "--session-seed",
            "3",
            "--out",
            &c,
        ],
        &["infer", "--compiled", &c, "--in", &t, "--out", &o],
    ];
    for args in steps {
        let code = cli::run(std::iter::once("keyed-deform").chain(args.iter().copied()));
        println!("keyed-deform {} -> exit {code}", args[0]);
        assert_eq!(code, cli::EXIT_OK);
    }
    let cli_out = read_tensor(&path("cli_out.tnsr"))?;
    assert!(cli_out.bit_eq(&plain_forward(&model, &image)?.output));
    println!("command-line path agrees with plain inference");
    Ok(())
}

#[allow(dead_code)]
fn main() -> std::result::Result<(), Box<dyn std::error::Error>> {
    run()
}
