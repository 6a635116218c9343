mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::*;
use keyed_deform::format::{read_image, read_key, read_tensor, save_model, write_key, write_tensor};
use keyed_deform::key::{generate_key, SplitMix64};
use keyed_deform::model::plain_forward;
use keyed_deform::transform::shuffle;
use keyed_deform::zoo::{self, random_tensor};

/// Runs the binary with whitespace-separated arguments. Temp paths have no
/// spaces.
fn cli(args: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_keyed-deform"))
        .args(args.split_whitespace())
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new() -> Self {
        Fixture {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

#[test]
fn keygen_writes_a_valid_key() {
    let f = Fixture::new();
    let key = f.path("k.pkey");
    let out = cli(&format!(
        "keygen --height 5 --width 7 --seed 42 --out {}",
        key.display()
    ));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::metadata(&key).unwrap().len(), 13 + 4 * 35);
    assert_eq!(read_key(&key).unwrap(), generate_key(5, 7, 42).unwrap());
}

#[test]
fn encrypting_a_ppm_then_decrypting_restores_it() {
    let f = Fixture::new();
    let ppm = f.path("img.ppm");
    let mut bytes = b"P6\n# test\n4 3\n255\n".to_vec();
    bytes.extend((0..36u8).map(|v| v * 7));
    fs::write(&ppm, &bytes).unwrap();
    write_key(&f.path("k.pkey"), &generate_key(3, 4, 1).unwrap()).unwrap();
    let (enc, dec) = (f.path("enc.tnsr"), f.path("dec.tnsr"));
    assert_eq!(
        code(&cli(&format!(
            "encrypt --key {} --in {} --out {}",
            f.path("k.pkey").display(),
            ppm.display(),
            enc.display()
        ))),
        0
    );
    assert_eq!(
        code(&cli(&format!(
            "decrypt --key {} --in {} --out {}",
            f.path("k.pkey").display(),
            enc.display(),
            dec.display()
        ))),
        0
    );
    let plain = read_image(&ppm).unwrap();
    assert!(read_tensor(&dec).unwrap().bit_eq(&plain));
    assert!(!read_tensor(&enc).unwrap().bit_eq(&plain));
}

struct Pipeline {
    f: Fixture,
    model: PathBuf,
    key: PathBuf,
    plain: PathBuf,
    input: keyed_deform::tensor::Tensor,
    spec: keyed_deform::model::ModelSpec,
}

fn pipeline(seed: u64) -> Pipeline {
    let f = Fixture::new();
    let mut rng = SplitMix64::new(seed);
    let spec = random_classifier(&mut rng, zoo::Head::FlattenDense, true);
    let model = f.path("model.json");
    save_model(&spec, &model).unwrap();
    let [c, h, w] = spec.input_dims();
    let key = f.path("k.pkey");
    write_key(&key, &random_key(&mut rng, h, w)).unwrap();
    let input = random_tensor(&mut rng, &[c, h, w]);
    let plain = f.path("x.tnsr");
    write_tensor(&plain, &input).unwrap();
    Pipeline {
        f,
        model,
        key,
        plain,
        input,
        spec,
    }
}

#[test]
fn compile_and_infer_match_plain_inference() {
    let p = pipeline(1);
    let compiled = p.f.path("keyed.json");
    let out = cli(&format!(
        "compile --model {} --key {} --session-seed 9 --out {}",
        p.model.display(),
        p.key.display(),
        compiled.display()
    ));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let shuffled = p.f.path("xs.tnsr");
    assert_eq!(
        code(&cli(&format!(
            "encrypt --key {} --in {} --out {}",
            p.key.display(),
            p.plain.display(),
            shuffled.display()
        ))),
        0
    );
    let result = p.f.path("y.tnsr");
    let out = cli(&format!(
        "infer --compiled {} --in {} --out {} --logits",
        compiled.display(),
        shuffled.display(),
        result.display()
    ));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let want = plain_forward(&p.spec, &p.input).unwrap().output;
    assert!(read_tensor(&result).unwrap().bit_eq(&want));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["argmax"].as_u64(), want.argmax().map(|a| a as u64));
    assert_eq!(json["dims"], serde_json::json!([10]));
}

#[test]
fn verify_exit_code_follows_bitwise_equality() {
    let p = pipeline(2);
    let out = cli(&format!(
        "verify --model {} --key {} --session-seed 3 --in {}",
        p.model.display(),
        p.key.display(),
        p.plain.display()
    ));
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["bitwise_equal"], true);
    assert_eq!(report["first_divergent_layer"], serde_json::Value::Null);

    let [_, h, w] = p.spec.input_dims();
    let wrong = p.f.path("wrong.pkey");
    let mut k = generate_key(h, w, 1234).unwrap();
    if k == read_key(&p.key).unwrap() {
        k = generate_key(h, w, 4321).unwrap();
    }
    write_key(&wrong, &k).unwrap();
    let out = cli(&format!(
        "verify --model {} --key {} --session-seed 3 --in {} --wrong-key {}",
        p.model.display(),
        p.key.display(),
        p.plain.display(),
        wrong.display()
    ));
    assert_eq!(code(&out), 3);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["bitwise_equal"], false);
}

fn assert_fails(out: &Output, exit: i32, tag: &str, target: &Path) {
    assert_eq!(code(out), exit, "{}", String::from_utf8_lossy(&out.stderr));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains(tag), "{}", stderr);
    assert!(!target.exists(), "partial output {}", target.display());
}

#[test]
fn errors_map_to_exit_codes_without_partial_outputs() {
    let p = pipeline(3);
    let out_path = p.f.path("never.tnsr");

    let small = p.f.path("small.pkey");
    write_key(&small, &generate_key(2, 2, 0).unwrap()).unwrap();
    let out = cli(&format!(
        "encrypt --key {} --in {} --out {}",
        small.display(),
        p.plain.display(),
        out_path.display()
    ));
    assert_fails(&out, 1, "error[grid]", &out_path);

    let garbage = p.f.path("garbage.pkey");
    fs::write(&garbage, b"PKEY\x01\x02\x00").unwrap();
    let out = cli(&format!(
        "decrypt --key {} --in {} --out {}",
        garbage.display(),
        p.plain.display(),
        out_path.display()
    ));
    assert_fails(&out, 2, "error[integrity]", &out_path);

    let not_json = p.f.path("bad.json");
    fs::write(&not_json, "{").unwrap();
    let compiled = p.f.path("never.json");
    let out = cli(&format!(
        "compile --model {} --key {} --session-seed 1 --out {}",
        not_json.display(),
        p.key.display(),
        compiled.display()
    ));
    assert_fails(&out, 2, "error[json]", &compiled);

    let out = cli(&format!(
        "decrypt --key {} --in {} --out {}",
        p.f.path("absent.pkey").display(),
        p.plain.display(),
        out_path.display()
    ));
    assert_fails(&out, 2, "error[io]", &out_path);

    let out = cli(&format!(
        "keygen --height 0 --width 3 --seed 1 --out {}",
        out_path.display()
    ));
    assert_fails(&out, 1, "error[", &out_path);
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(code(&cli("keygen --height 3")), 1);
    assert_eq!(code(&cli("frobnicate")), 1);
    assert_eq!(code(&cli("--help")), 0);
    let out = cli("infer --help");
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("--logits"));
}

#[test]
fn in_process_entry_point() {
    let f = Fixture::new();
    let key = f.path("k.pkey");
    let args = [
        "keyed-deform",
        "keygen",
        "--height",
        "2",
        "--width",
        "2",
        "--seed",
        "42",
        "--out",
    ];
    let code = keyed_deform::cli::run(args.iter().map(|s| s.to_string()).chain([key.display().to_string()]));
    assert_eq!(code, keyed_deform::cli::EXIT_OK);
    assert_eq!(read_key(&key).unwrap().map(), &[2, 0, 3, 1]);
}

#[test]
fn encrypt_accepts_plain_tensors_too() {
    let p = pipeline(4);
    let enc = p.f.path("e.tnsr");
    assert_eq!(
        code(&cli(&format!(
            "encrypt --key {} --in {} --out {}",
            p.key.display(),
            p.plain.display(),
            enc.display()
        ))),
        0
    );
    let key = read_key(&p.key).unwrap();
    assert!(read_tensor(&enc).unwrap().bit_eq(&shuffle(&p.input, &key).unwrap()));
}
