//! The `attack` subcommand: load, run, and leave a self-describing run
//! directory behind whether the run completes or the victim fails.

use std::fs;
use std::path::{Path, PathBuf};

use pitl_core::attack::{benign_observation, reevaluate, Reevaluation, TraceRecord};
use pitl_core::config::{load_run_config, FileDigest, LoadedRun, RunConfigFile};
use pitl_core::scene::{composite_noiseless, pattern_to_light};
use pitl_core::{netpbm, AttackResult, AttackRunner, Checkpoint, DepthEstimator, Error, Result};
use serde::Serialize;

use crate::artifacts::{self, CHECKPOINT, MANIFEST, TRACE};
use crate::{CmdResult, Failure};

#[derive(Serialize)]
struct FinalScores {
    objective: f64,
    presence: f64,
    generation: u64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    status: &'static str,
    tool_version: &'static str,
    config_path: PathBuf,
    config: &'a RunConfigFile,
    /// Changes iff a config byte or a referenced file's content changes.
    config_hash: &'a str,
    /// Hash a checkpoint must carry to be resumable under this config.
    run_hash: String,
    files: &'a [FileDigest],
    seed: u64,
    g_max: u64,
    lambda: usize,
    n: usize,
    generations_completed: u64,
    evaluations: u64,
    #[serde(rename = "final")]
    final_scores: Option<FinalScores>,
    reevaluation: Option<Reevaluation>,
    error: Option<String>,
    outputs: Vec<String>,
}

impl<'a> Manifest<'a> {
    fn new(config_path: &Path, run: &'a LoadedRun, runner: &AttackRunner<'_>) -> Self {
        let trace = runner.trace();
        Manifest {
            status: "completed",
            tool_version: env!("CARGO_PKG_VERSION"),
            config_path: config_path.to_path_buf(),
            config: &run.file,
            config_hash: &run.config_hash,
            run_hash: runner.config_hash().to_owned(),
            files: &run.files,
            seed: run.attack.seed,
            g_max: run.attack.g_max,
            lambda: runner.params().lambda,
            n: runner.params().n,
            generations_completed: trace.len() as u64,
            evaluations: trace.last().map_or(0, |r: &TraceRecord| r.eval_count),
            final_scores: runner.best().map(|b| FinalScores {
                objective: b.objective,
                presence: b.presence,
                generation: b.generation,
            }),
            reevaluation: None,
            error: None,
            outputs: Vec::new(),
        }
    }
}

pub fn run(config_path: &Path, out: &Path, resume: Option<&Path>) -> CmdResult {
    let input = |e: Error| Failure::Input(e.to_string());
    let run = load_run_config(config_path).map_err(input)?;
    let checkpoint = resume.map(Checkpoint::load).transpose().map_err(input)?;
    let victim = run.attack.victim.instantiate(&run.scene)?;

    let mut runner = match checkpoint {
        Some(c) => AttackRunner::resume(run.attack.clone(), &run.scene, victim.as_ref(), c),
        None => AttackRunner::new(run.attack.clone(), &run.scene, victim.as_ref()),
    }
    .map_err(input)?;
    fs::create_dir_all(out).map_err(|e| Failure::Input(format!("{}: {e}", out.display())))?;

    let every = run.file.output.checkpoint_every.filter(|k| *k > 0);
    while !runner.is_finished() {
        if let Err(e) = runner.step() {
            record_interruption(config_path, out, &run, &runner, &e)?;
            return Err(e.into());
        }
        if every.is_some_and(|k| (runner.trace().len() as u64).is_multiple_of(k)) {
            runner.checkpoint().save(&out.join(CHECKPOINT))?;
        }
    }

    let mut manifest = Manifest::new(config_path, &run, &runner);
    let result = runner.finish()?;
    manifest.outputs = write_outputs(out, &run, victim.as_ref(), &result)?;
    let repeats = run.file.attack.reevaluate;
    if repeats > 0 {
        let pattern = &result.best_pattern;
        manifest.reevaluation = Some(reevaluate(
            &run.scene,
            victim.as_ref(),
            pattern,
            repeats,
            run.attack.seed,
        )?);
    }
    artifacts::write_json(&out.join(MANIFEST), &manifest)?;
    log::info!(
        "f* = {:.6}, e = {:.4}; artifacts in {}",
        result.best_objective,
        result.best_presence,
        out.display()
    );
    Ok(())
}

/// Leaves a checkpoint, the partial trace and a manifest naming the error.
fn record_interruption(
    config_path: &Path,
    out: &Path,
    run: &LoadedRun,
    runner: &AttackRunner<'_>,
    error: &Error,
) -> Result<()> {
    runner.checkpoint().save(&out.join(CHECKPOINT))?;
    artifacts::write_trace(&out.join(TRACE), runner.trace())?;
    let mut manifest = Manifest::new(config_path, run, runner);
    manifest.status = "interrupted";
    manifest.error = Some(error.to_string());
    manifest.outputs = vec![CHECKPOINT.into(), TRACE.into()];
    artifacts::write_json(&out.join(MANIFEST), &manifest)
}

fn write_outputs(
    out: &Path,
    run: &LoadedRun,
    victim: &dyn DepthEstimator,
    result: &AttackResult,
) -> Result<Vec<String>> {
    let scene = &run.scene;
    let mut written = vec![TRACE.to_owned()];
    artifacts::write_trace(&out.join(TRACE), &result.trace)?;

    written.extend(artifacts::write_pattern_channels(
        out,
        &result.best_pattern,
    )?);
    artifacts::write_json(&out.join("delta.json"), &result.best_pattern)?;
    written.push("delta.json".into());

    let (benign_image, benign_depth) = benign_observation(scene, victim, run.attack.seed)?;
    let maps = [
        ("depth_benign.pfm", &benign_depth),
        ("depth_adversarial.pfm", &result.best_depth),
        ("depth_orig.pfm", &scene.depth_orig),
        ("depth_back.pfm", &scene.depth_back),
        ("depth_target.pfm", scene.target()),
    ];
    for (name, map) in maps {
        netpbm::write_pfm(&out.join(name), map)?;
        written.push(name.into());
    }
    // The presence region is what `eval` scores e over; f uses R itself,
    // which is the same mask unless the config names a separate one.
    let (w, h) = scene.dims();
    netpbm::write_pgm_mask(&out.join("region.pgm"), w, h, scene.region.member())?;
    written.push("region.pgm".into());
    if let Some(eval_region) = &scene.eval_region {
        netpbm::write_pgm_mask(&out.join("eval_region.pgm"), w, h, eval_region.member())?;
        written.push("eval_region.pgm".into());
    }

    if run.file.output.previews {
        let light = pattern_to_light(&result.best_pattern, &scene.region)?;
        let adversarial = composite_noiseless(scene, &light);
        netpbm::write_ppm(&out.join("delta.ppm"), &light)?;
        let previews = [
            ("delta.png", &light),
            ("capture_benign.png", &benign_image),
            ("capture_adversarial.png", &adversarial),
        ];
        for (name, img) in previews {
            artifacts::write_png_rgb(&out.join(name), img)?;
        }
        written.extend(
            [
                "delta.ppm",
                "delta.png",
                "capture_benign.png",
                "capture_adversarial.png",
            ]
            .map(String::from),
        );
        let range = artifacts::depth_range(maps.iter().map(|(_, m)| *m));
        for (name, map) in maps {
            let png = name.replace(".pfm", ".png");
            artifacts::write_png_depth(&out.join(&png), map, range)?;
            written.push(png);
        }
    }
    Ok(written)
}
