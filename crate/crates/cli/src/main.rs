//! `pitl`: run projected-light attacks, benchmark the optimizer, score saved
//! depth maps and generate synthetic scenes.
//!
//! Exit codes: 0 success, 1 configuration or input error, 2 victim failure,
//! 3 benchmark target not reached within budget.

mod artifacts;
mod attack_cmd;

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pitl_core::functions::Suite;
use pitl_core::metrics::{objective, presence_rate};
use pitl_core::netpbm;
use pitl_core::optimizer::{minimize, MinimizeOptions};
use pitl_core::presets::{self, Preset};
use pitl_core::{Error, RegionMask};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "pitl",
    version,
    about = "Projected-light attacks on monocular depth estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an attack described by a JSON run config.
    Attack {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Continue from a checkpoint written by an earlier run.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Run the optimizer alone on a standard test function.
    Bench {
        #[arg(long)]
        suite: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Generation budget.
        #[arg(long, default_value_t = 5000)]
        budget: u64,
    },
    /// Score a saved depth map; prints {"f":..,"e":..}.
    Eval {
        #[arg(long)]
        est: PathBuf,
        #[arg(long)]
        orig: PathBuf,
        #[arg(long)]
        back: PathBuf,
        /// Target depth; the background when omitted.
        #[arg(long)]
        tgt: Option<PathBuf>,
        #[arg(long)]
        region: PathBuf,
    },
    /// Write a synthetic scene bundle.
    MakeScene {
        #[arg(long)]
        preset: String,
        #[arg(long)]
        size: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// A failed command and the exit code it maps to.
pub(crate) enum Failure {
    Input(String),
    Victim(String),
    TargetMissed(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Victim(_) => 2,
            Failure::TargetMissed(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Victim(m) | Failure::TargetMissed(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_victim_failure() {
            Failure::Victim(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

pub(crate) type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PITL_LOG", "warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Attack {
            config,
            out,
            resume,
        } => attack_cmd::run(&config, &out, resume.as_deref()),
        Command::Bench {
            suite,
            n,
            seed,
            budget,
        } => bench(&suite, n, seed, budget),
        Command::Eval {
            est,
            orig,
            back,
            tgt,
            region,
        } => eval(&est, &orig, &back, tgt.as_deref(), &region),
        Command::MakeScene {
            preset,
            size,
            seed,
            out,
        } => make_scene(&preset, size, seed, &out),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("pitl: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

#[derive(Serialize)]
struct BenchRow {
    generation: usize,
    evaluations: u64,
    f_best_gen: f64,
    f_best_so_far: f64,
}

fn bench(suite: &str, n: usize, seed: u64, budget: u64) -> CmdResult {
    let suite: Suite = suite.parse()?;
    if n < 2 {
        return Err(Failure::Input(format!("n must be at least 2, got {n}")));
    }
    let opts = MinimizeOptions {
        max_generations: budget,
        target: Some(suite.target()),
        ..Default::default()
    };
    let r = minimize(move |x| suite.evaluate(x), vec![3.0; n], 1.0, seed, &opts)?;

    let mut out = csv::Writer::from_writer(io::stdout().lock());
    let lambda = r.params.lambda as u64;
    for (g, (gen_best, so_far)) in r.generation_best.iter().zip(&r.best_so_far).enumerate() {
        out.serialize(BenchRow {
            generation: g + 1,
            evaluations: (g as u64 + 1) * lambda,
            f_best_gen: *gen_best,
            f_best_so_far: *so_far,
        })
        .map_err(|e| Failure::Input(e.to_string()))?;
    }
    out.flush()?;

    if r.best_f < suite.target() {
        Ok(())
    } else {
        Err(Failure::TargetMissed(format!(
            "{suite} n={n}: best f {:e} did not reach {:e} in {budget} generations",
            r.best_f,
            suite.target()
        )))
    }
}

#[derive(Serialize)]
struct Scores {
    f: f64,
    e: f64,
}

fn eval(est: &Path, orig: &Path, back: &Path, tgt: Option<&Path>, region: &Path) -> CmdResult {
    let est = netpbm::read_pfm(est)?;
    let orig = netpbm::read_pfm(orig)?;
    let back = netpbm::read_pfm(back)?;
    let tgt = tgt.map(netpbm::read_pfm).transpose()?;
    let (w, h, member) = netpbm::read_pgm_mask(region)?;
    let region = RegionMask::new(w, h, member, (1, 1))?;
    let scores = Scores {
        f: objective(&est, tgt.as_ref().unwrap_or(&back), &region)?,
        e: presence_rate(&est, &orig, &back, &region)?,
    };
    let mut stdout = io::stdout().lock();
    serde_json::to_writer(&mut stdout, &scores).map_err(|e| Failure::Input(e.to_string()))?;
    writeln!(stdout)?;
    Ok(())
}

fn make_scene(preset: &str, size: usize, seed: u64, out: &Path) -> CmdResult {
    let preset: Preset = preset.parse()?;
    let bundle = presets::generate(preset, size, seed)?;
    bundle.write(out)?;
    log::info!(
        "wrote {} {size}x{size} scene to {}",
        preset.name(),
        out.display()
    );
    Ok(())
}
