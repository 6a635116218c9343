//! Command-line surface: one verb per pipeline stage.
//!
//! Exit codes: 0 success (or equivalent outputs for `verify`), 1 usage
//! error, 2 format or integrity error, 3 verification failed.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::error::{Error, Result};
use crate::format::{
    self, load_compiled, load_model, read_image, read_key, read_tensor, save_compiled, write_key, write_tensor,
};
use crate::key::generate_key;
use crate::keyed::{compare_paths, keyed_compile, keyed_forward, verify_compiled, EquivalenceReport};
use crate::transform::{shuffle, unshuffle};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FORMAT: i32 = 2;
pub const EXIT_MISMATCH: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "keyed-deform", version, about = "Keyed inference on pixel-shuffled images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a permutation key for an H×W grid.
    Keygen {
        #[arg(long)]
        height: usize,
        #[arg(long)]
        width: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Load an image (.ppm/.pgm/.tnsr) and write it shuffled.
    Encrypt {
        #[arg(long)]
        key: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Unshuffle a tensor file.
    Decrypt {
        #[arg(long)]
        key: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compile a plain model manifest against a key.
    Compile {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        session_seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a compiled model on a shuffled input.
    Infer {
        #[arg(long)]
        compiled: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also print the output values and argmax as JSON.
        #[arg(long)]
        logits: bool,
    },
    /// Compare plain and keyed inference on a plain input.
    Verify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        session_seed: u64,
        #[arg(long = "in")]
        input: PathBuf,
        /// Shuffle the input with this key instead of the compile key.
        #[arg(long)]
        wrong_key: Option<PathBuf>,
    },
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Shape(_) | Error::Param(_) | Error::Grid { .. } | Error::Key(_) => EXIT_USAGE,
        Error::Model { .. } | Error::Format(_) | Error::Integrity(_) | Error::Io { .. } | Error::Json(_) => EXIT_FORMAT,
    }
}

fn report_json(report: &EquivalenceReport) -> serde_json::Value {
    json!({
        "bitwise_equal": report.bitwise_equal,
        "max_abs_diff": report.max_abs_diff,
        "relative_l2": report.relative_l2,
        "per_layer_diffs": report.per_layer_diffs,
        "argmax_equal": report.argmax_equal,
        "first_divergent_layer": report.first_divergent_layer(),
    })
}

fn execute(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Keygen {
            height,
            width,
            seed,
            out,
        } => {
            write_key(&out, &generate_key(height, width, seed)?)?;
        }
        Command::Encrypt { key, input, out } => {
            let key = read_key(&key)?;
            let image = read_image(&input)?;
            write_tensor(&out, &shuffle(&image, &key)?)?;
        }
        Command::Decrypt { key, input, out } => {
            let key = read_key(&key)?;
            write_tensor(&out, &unshuffle(&read_tensor(&input)?, &key)?)?;
        }
        Command::Compile {
            model,
            key,
            session_seed,
            out,
        } => {
            let spec = load_model(&model)?;
            let keyed = keyed_compile(&spec, &read_key(&key)?, session_seed)?;
            save_compiled(&out, &keyed, &model)?;
        }
        Command::Infer {
            compiled,
            input,
            out,
            logits,
        } => {
            let keyed = load_compiled(&compiled)?;
            let output = keyed_forward(&keyed, &read_tensor(&input)?)?.output;
            write_tensor(&out, &output)?;
            if logits {
                println!(
                    "{}",
                    json!({ "dims": output.dims(), "values": output.data(), "argmax": output.argmax() })
                );
            }
        }
        Command::Verify {
            model,
            key,
            session_seed,
            input,
            wrong_key,
        } => {
            let spec = load_model(&model)?;
            let keyed = keyed_compile(&spec, &read_key(&key)?, session_seed)?;
            let plain = format::read_image(&input)?;
            let report = match wrong_key {
                Some(path) => compare_paths(&keyed, &plain, &shuffle(&plain, &read_key(&path)?)?)?,
                None => verify_compiled(&keyed, &plain)?,
            };
            println!("{}", serde_json::to_string_pretty(&report_json(&report))?);
            return Ok(if report.bitwise_equal { EXIT_OK } else { EXIT_MISMATCH });
        }
    }
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error[{}]: {}", err.code(), err);
            exit_code(&err)
        }
    }
}
