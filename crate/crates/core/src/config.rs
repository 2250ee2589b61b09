//! JSON run configuration.
//!
//! ```json
//! {
//!   "scene":  { "reflectance": "reflectance.ppm", "depth_orig": "depth_orig.pfm",
//!               "depth_back": "depth_back.pfm", "region": "region.pgm",
//!               "ambient": 0.3, "noise_stddev": 0.01, "cells": [4, 4] },
//!   "victim": { "kind": "brightness_biased", "gamma": 1.0 },
//!   "attack": { "g_max": 200, "seed": 1 },
//!   "output": { "previews": true }
//! }
//! ```
//!
//! Paths are relative to the config file. Unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::attack::{AttackConfig, BoundPolicy, InitialMean};
use crate::error::{Error, Result};
use crate::netpbm;
use crate::scene::{hex, Ambient, RegionMask, SceneModel, DEFAULT_NOISE_STDDEV};
use crate::victim::VictimDescriptor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub scene: SceneSection,
    pub victim: VictimSection,
    pub attack: AttackSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSection {
    pub reflectance: PathBuf,
    pub depth_orig: PathBuf,
    pub depth_back: PathBuf,
    pub region: PathBuf,
    /// Presence-rate region; the attack region when absent.
    #[serde(default)]
    pub eval_region: Option<PathBuf>,
    /// Target depth; the background when absent.
    #[serde(default)]
    pub target: Option<PathBuf>,
    pub ambient: AmbientSpec,
    #[serde(default = "default_noise")]
    pub noise_stddev: f64,
    pub cells: CellGrid,
}

fn default_noise() -> f64 {
    DEFAULT_NOISE_STDDEV
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AmbientSpec {
    Scalar(f64),
    Rgb([f64; 3]),
    /// PPM file with a per-pixel ambient field.
    Field(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKeyword {
    PerPixel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CellGrid {
    Grid([usize; 2]),
    Keyword(GridKeyword),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VictimSection {
    /// `{"file": "victim.json"}` holding a descriptor.
    File {
        file: PathBuf,
    },
    Inline(VictimDescriptor),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSection {
    pub g_max: u64,
    #[serde(default)]
    pub lambda: Option<usize>,
    #[serde(default = "one")]
    pub sigma0: f64,
    #[serde(default)]
    pub mean0: InitialMean,
    #[serde(default)]
    pub bound_policy: BoundPolicy,
    #[serde(default)]
    pub seed: u64,
    /// Post-run re-captures of δ* for reporting; 0 disables.
    #[serde(default)]
    pub reevaluate: usize,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "yes")]
    pub previews: bool,
    /// Write a checkpoint every this many generations.
    #[serde(default)]
    pub checkpoint_every: Option<u64>,
}

fn yes() -> bool {
    true
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            previews: true,
            checkpoint_every: None,
        }
    }
}

/// A referenced input file and the SHA-256 of its bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub role: String,
    pub path: PathBuf,
    pub sha256: String,
}

/// A config file resolved into the objects the attack needs.
#[derive(Debug, Clone)]
pub struct LoadedRun {
    pub file: RunConfigFile,
    pub attack: AttackConfig,
    pub scene: SceneModel,
    /// Hash of the config bytes and every referenced file's content.
    pub config_hash: String,
    pub files: Vec<FileDigest>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

struct Resolver<'a> {
    base: &'a Path,
    files: Vec<FileDigest>,
}

impl Resolver<'_> {
    fn path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    /// Resolves, checks existence and records the digest.
    fn file(&mut self, role: &str, p: &Path) -> Result<PathBuf> {
        let path = self.path(p);
        let bytes = fs::read(&path)
            .map_err(|e| Error::Config(format!("{role} file {}: {e}", path.display())))?;
        self.files.push(FileDigest {
            role: role.to_owned(),
            path: path.clone(),
            sha256: sha256_hex(&bytes),
        });
        Ok(path)
    }
}

fn region_from(path: &Path, grid: CellGrid) -> Result<RegionMask> {
    let (w, h, member) = netpbm::read_pgm_mask(path)?;
    match grid {
        CellGrid::Grid([rows, cols]) => RegionMask::new(w, h, member, (rows, cols)),
        CellGrid::Keyword(GridKeyword::PerPixel) => RegionMask::per_pixel(w, h, member),
    }
}

/// Loads and validates a run config, reading every referenced file.
pub fn load_run_config(path: &Path) -> Result<LoadedRun> {
    let bytes =
        fs::read(path).map_err(|e| Error::Config(format!("config {}: {e}", path.display())))?;
    let file: RunConfigFile = serde_json::from_slice(&bytes)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut res = Resolver {
        base,
        files: Vec::new(),
    };

    let s = &file.scene;
    let reflectance = netpbm::read_ppm(&res.file("reflectance", &s.reflectance)?)?;
    let depth_orig = netpbm::read_pfm(&res.file("depth_orig", &s.depth_orig)?)?;
    let depth_back = netpbm::read_pfm(&res.file("depth_back", &s.depth_back)?)?;
    let region = region_from(&res.file("region", &s.region)?, s.cells)?;
    let eval_region = match &s.eval_region {
        Some(p) => Some(region_from(
            &res.file("eval_region", p)?,
            CellGrid::Grid([1, 1]),
        )?),
        None => None,
    };
    let depth_target = match &s.target {
        Some(p) => Some(netpbm::read_pfm(&res.file("target", p)?)?),
        None => None,
    };
    let ambient = match &s.ambient {
        AmbientSpec::Scalar(v) => Ambient::Uniform([*v; 3]),
        AmbientSpec::Rgb(rgb) => Ambient::Uniform(*rgb),
        AmbientSpec::Field(p) => Ambient::Field(netpbm::read_ppm(&res.file("ambient", p)?)?),
    };
    let scene = SceneModel {
        reflectance,
        ambient,
        depth_orig,
        depth_back,
        depth_target,
        region,
        eval_region,
        noise_stddev: s.noise_stddev,
    };
    scene.validate()?;

    let victim = match &file.victim {
        VictimSection::Inline(d) => d.clone(),
        VictimSection::File { file: p } => {
            let vp = res.file("victim", p)?;
            let bytes = fs::read(&vp).map_err(|e| Error::file(&vp, e))?;
            serde_json::from_slice(&bytes)
                .map_err(|e| Error::Config(format!("{}: {e}", vp.display())))?
        }
    };
    let victim = match victim {
        VictimDescriptor::External {
            mut command,
            timeout_secs,
        } => {
            // Relative program paths with a separator are config-relative;
            // bare names go through PATH.
            if let Some(program) = command.first_mut() {
                let p = Path::new(program.as_str());
                if p.is_relative() && p.components().count() > 1 {
                    *program = res.path(p).to_string_lossy().into_owned();
                }
            }
            VictimDescriptor::External {
                command,
                timeout_secs,
            }
        }
        other => other,
    };

    let a = &file.attack;
    let attack = AttackConfig {
        g_max: a.g_max,
        lambda: a.lambda,
        sigma0: a.sigma0,
        mean0: a.mean0.clone(),
        bound_policy: a.bound_policy,
        seed: a.seed,
        victim,
    };
    attack.validate()?;
    if a.reevaluate > 0 && attack.victim.is_external() {
        log::warn!(
            "re-evaluation with an external victim adds {} calls",
            a.reevaluate
        );
    }

    let mut h = Sha256::new();
    h.update(&bytes);
    for f in &res.files {
        h.update(f.role.as_bytes());
        h.update(f.sha256.as_bytes());
    }
    let config_hash = hex(&h.finalize());
    let files = res.files;

    Ok(LoadedRun {
        file,
        attack,
        scene,
        config_hash,
        files,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn section_shapes() {
        let g: CellGrid = serde_json::from_str("[4, 4]").unwrap();
        assert_eq!(g, CellGrid::Grid([4, 4]));
        let g: CellGrid = serde_json::from_str("\"per_pixel\"").unwrap();
        assert_eq!(g, CellGrid::Keyword(GridKeyword::PerPixel));
        let a: AmbientSpec = serde_json::from_str("[0.1, 0.2, 0.3]").unwrap();
        assert_eq!(a, AmbientSpec::Rgb([0.1, 0.2, 0.3]));
        let v: VictimSection = serde_json::from_str(r#"{"file":"v.json"}"#).unwrap();
        assert!(matches!(v, VictimSection::File { .. }));
        let v: VictimSection = serde_json::from_str(r#"{"kind":"constant","value":2}"#).unwrap();
        assert!(matches!(
            v,
            VictimSection::Inline(VictimDescriptor::Constant { .. })
        ));
    }

    #[test]
    fn missing_file_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.json");
        fs::write(
            &cfg,
            r#"{"scene":{"reflectance":"nope.ppm","depth_orig":"o.pfm","depth_back":"b.pfm",
               "region":"r.pgm","ambient":0.3,"cells":[2,2]},
               "victim":{"kind":"constant","value":1},"attack":{"g_max":2}}"#,
        )
        .unwrap();
        assert!(matches!(load_run_config(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.json");
        fs::write(
            &cfg,
            r#"{"scene":{"reflectance":"a","depth_orig":"o","depth_back":"b","region":"r",
               "ambient":0.3,"cells":[2,2],"extra":1},
               "victim":{"kind":"constant","value":1},"attack":{"g_max":2}}"#,
        )
        .unwrap();
        assert!(matches!(load_run_config(&cfg), Err(Error::Config(_))));
    }
}
