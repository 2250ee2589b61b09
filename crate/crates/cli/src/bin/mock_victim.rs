//! Stand-in external victim speaking the JSON-lines protocol on
//! stdin/stdout. Backed by the built-in brightness-biased model, or by a
//! constant depth when no scene maps are given.
//!
//! Fault injection for tests: `--protocol-version` announces another
//! version, `--die-after N` exits without replying to request N+1.

use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use pitl_core::victim::protocol::{
    encode_line, ErrorReply, EstimateReply, HelloReply, Request, PROTOCOL_VERSION,
};
use pitl_core::victim::{BrightnessBiased, ConstantVictim};
use pitl_core::{netpbm, DepthEstimator, Result};

#[derive(Parser)]
#[command(name = "pitl-mock-victim")]
struct Args {
    /// Depth with the object present.
    #[arg(long, requires = "back")]
    orig: Option<PathBuf>,
    /// Depth of the empty scene.
    #[arg(long, requires = "orig")]
    back: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Depth returned everywhere when no scene maps are given.
    #[arg(long, default_value_t = 1.0)]
    constant: f64,
    #[arg(long, default_value_t = PROTOCOL_VERSION)]
    protocol_version: u64,
    /// Exit abruptly once this many estimate requests have been answered.
    #[arg(long, env = "PITL_MOCK_DIE_AFTER")]
    die_after: Option<u64>,
    #[arg(long, default_value = "mock-brightness")]
    model: String,
    #[arg(long, default_value_t = 4096)]
    max_size: usize,
}

fn build_model(args: &Args) -> Result<Box<dyn DepthEstimator>> {
    match (&args.orig, &args.back) {
        (Some(orig), Some(back)) => {
            let orig = netpbm::read_pfm(orig)?;
            let back = netpbm::read_pfm(back)?;
            let mask = orig
                .values
                .iter()
                .zip(&back.values)
                .map(|(o, b)| o != b)
                .collect();
            Ok(Box::new(BrightnessBiased::new(
                orig, back, mask, args.gamma,
            )?))
        }
        _ => Ok(Box::new(ConstantVictim {
            value: args.constant,
        })),
    }
}

fn reply(request: Request, args: &Args, model: &dyn DepthEstimator) -> Result<String> {
    match request {
        Request::Hello { .. } => encode_line(&HelloReply {
            ok: true,
            version: args.protocol_version,
            model: args.model.clone(),
            max_width: args.max_size,
            max_height: args.max_size,
        }),
        estimate => {
            let depth = model.estimate(&estimate.into_image()?)?;
            encode_line(&EstimateReply::from_depth(&depth))
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let model = match build_model(&args) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("pitl-mock-victim: {e}");
            return ExitCode::FAILURE;
        }
    };
    let stdin = io::stdin().lock();
    let mut stdout = io::stdout().lock();
    let mut answered = 0u64;
    for line in stdin.lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        let text = match serde_json::from_str::<Request>(&line) {
            Ok(request) => {
                let is_estimate = matches!(request, Request::Estimate { .. });
                if is_estimate && args.die_after.is_some_and(|n| answered >= n) {
                    eprintln!("pitl-mock-victim: dying after {answered} estimates");
                    return ExitCode::from(9);
                }
                answered += u64::from(is_estimate);
                reply(request, &args, model.as_ref())
                    .or_else(|e| encode_line(&ErrorReply::new(e.to_string())))
            }
            Err(e) => encode_line(&ErrorReply::new(format!("bad request: {e}"))),
        };
        let Ok(text) = text else { break };
        if stdout
            .write_all(text.as_bytes())
            .and_then(|_| stdout.flush())
            .is_err()
        {
            break;
        }
    }
    ExitCode::SUCCESS
}
