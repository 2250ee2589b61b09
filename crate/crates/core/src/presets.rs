//! Synthetic desk-scale scenes: a room corner (back wall plus a floor
//! receding toward the camera) with one object standing on the floor.
//!
//! Values are quantized to what the on-disk formats hold (8-bit reflectance,
//! f32 depth), so a scene built in memory equals the same scene loaded back
//! from its files.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::error::{Error, Result};
use crate::netpbm;
use crate::raster::{DepthMap, RgbImage};
use crate::scene::{Ambient, RegionMask, SceneModel, DEFAULT_NOISE_STDDEV};
use crate::victim::{PatchLinear, VictimDescriptor};

pub const MIN_SIZE: usize = 8;
pub const MAX_SIZE: usize = 4096;
pub const DEFAULT_AMBIENT: f64 = 0.3;
pub const DEFAULT_GRID: (usize, usize) = (4, 4);

const WALL_DEPTH: f64 = 4.0;
const NEAR_FLOOR_DEPTH: f64 = 2.0;
const HORIZON: f64 = 0.6;
/// How far an object's front face sits in front of the floor at its base.
const STANDOFF: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Tall bright cabinet.
    Locker,
    /// Low, wide metallic box.
    Stove,
    /// Low, wide fabric shape; its armrests lie outside the attack region.
    Sofa,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "locker" => Ok(Preset::Locker),
            "stove" => Ok(Preset::Stove),
            "sofa" | "sofa-like" => Ok(Preset::Sofa),
            other => Err(Error::InvalidParameter(format!(
                "unknown preset '{other}' (expected locker, stove or sofa)"
            ))),
        }
    }
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Locker => "locker",
            Preset::Stove => "stove",
            Preset::Sofa => "sofa",
        }
    }

    /// Object box as fractions (x0, y0, x1, y1) of the image side.
    fn extent(self) -> (f64, f64, f64, f64) {
        match self {
            Preset::Locker => (0.30, 0.15, 0.60, 0.85),
            Preset::Stove => (0.20, 0.62, 0.80, 0.85),
            Preset::Sofa => (0.15, 0.55, 0.85, 0.85),
        }
    }

    fn albedo(self) -> [f64; 3] {
        match self {
            Preset::Locker => [0.94, 0.95, 0.96],
            Preset::Stove => [0.55, 0.55, 0.58],
            Preset::Sofa => [0.35, 0.45, 0.60],
        }
    }
}

/// Generated scene content, not yet bound to a cell grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneBundle {
    pub preset: Preset,
    pub size: usize,
    pub seed: u64,
    pub reflectance: RgbImage,
    pub depth_orig: DepthMap,
    pub depth_back: DepthMap,
    pub region: Vec<bool>,
    pub ambient: f64,
    pub noise_stddev: f64,
    pub victim: VictimDescriptor,
}

fn q8(v: f64) -> f64 {
    (v.clamp(0.0, 1.0) * 255.0).round() / 255.0
}

fn f32_exact(v: f64) -> f64 {
    v as f32 as f64
}

pub fn generate(preset: Preset, size: usize, seed: u64) -> Result<SceneBundle> {
    if !(MIN_SIZE..=MAX_SIZE).contains(&size) {
        return Err(Error::InvalidParameter(format!(
            "size must be within {MIN_SIZE}..={MAX_SIZE}, got {size}"
        )));
    }
    let s = size as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let horizon = (HORIZON * s).round() as usize;
    let floor_depth = |y: usize| -> f64 {
        if y < horizon {
            WALL_DEPTH
        } else {
            let t = (y - horizon) as f64 / (size - 1 - horizon).max(1) as f64;
            WALL_DEPTH + t * (NEAR_FLOOR_DEPTH - WALL_DEPTH)
        }
    };

    let (fx0, fy0, fx1, fy1) = preset.extent();
    let x0 = (fx0 * s).floor() as usize;
    let x1 = ((fx1 * s).ceil() as usize).min(size);
    let y0 = (fy0 * s).floor() as usize;
    let y1 = ((fy1 * s).ceil() as usize).min(size);
    let base = y1 - 1;
    let object_depth = floor_depth(base) - STANDOFF;
    // Sofa armrests: the outer eighth on each side, slightly nearer.
    let arm = if preset == Preset::Sofa {
        ((x1 - x0) / 8).max(1)
    } else {
        0
    };

    let mut refl = Vec::with_capacity(size * size * 3);
    let mut orig = Vec::with_capacity(size * size);
    let mut back = Vec::with_capacity(size * size);
    let mut region = Vec::with_capacity(size * size);
    let albedo = preset.albedo();
    for y in 0..size {
        for x in 0..size {
            let b = f32_exact(floor_depth(y));
            back.push(b);
            let inside = x >= x0 && x < x1 && y >= y0 && y < y1;
            let on_arm = inside && arm > 0 && (x < x0 + arm || x >= x1 - arm);
            let mut jitter = || rng.random_range(-0.02..=0.02);
            let rgb = if inside {
                let shade = if preset == Preset::Stove && y < y0 + (y1 - y0) / 5 {
                    0.6 // cooktop
                } else {
                    1.0
                };
                albedo.map(|a| q8(a * shade + jitter()))
            } else if y < horizon {
                [0.75, 0.72, 0.68].map(|a| q8(a + jitter()))
            } else {
                [0.45, 0.35, 0.25].map(|a| q8(a + jitter()))
            };
            refl.extend_from_slice(&rgb);
            let d = if on_arm {
                object_depth - 0.1
            } else if inside {
                object_depth
            } else {
                b
            };
            orig.push(f32_exact(d));
            // Edges stay unperturbed.
            let interior = x > x0 && x + 1 < x1 && y > y0 && y + 1 < y1;
            region.push(interior && !on_arm);
        }
    }

    let (weights, bias) = PatchLinear::seeded_parameters(seed ^ 0x7061_7463_6800_0000);
    Ok(SceneBundle {
        preset,
        size,
        seed,
        reflectance: RgbImage::new(size, size, refl)?,
        depth_orig: DepthMap::new(size, size, orig)?,
        depth_back: DepthMap::new(size, size, back)?,
        region,
        ambient: DEFAULT_AMBIENT,
        noise_stddev: DEFAULT_NOISE_STDDEV,
        victim: VictimDescriptor::PatchLinear { weights, bias },
    })
}

impl SceneBundle {
    pub fn scene(&self, grid: (usize, usize)) -> Result<SceneModel> {
        let region = RegionMask::new(self.size, self.size, self.region.clone(), grid)?;
        let scene = SceneModel {
            reflectance: self.reflectance.clone(),
            ambient: Ambient::Uniform([self.ambient; 3]),
            depth_orig: self.depth_orig.clone(),
            depth_back: self.depth_back.clone(),
            depth_target: None,
            region,
            eval_region: None,
            noise_stddev: self.noise_stddev,
        };
        scene.validate()?;
        Ok(scene)
    }

    /// Writes the scene files, `victim.json` (patch_linear parameters) and a
    /// ready-to-run `config.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
        netpbm::write_ppm(&dir.join("reflectance.ppm"), &self.reflectance)?;
        netpbm::write_pfm(&dir.join("depth_orig.pfm"), &self.depth_orig)?;
        netpbm::write_pfm(&dir.join("depth_back.pfm"), &self.depth_back)?;
        netpbm::write_pgm_mask(&dir.join("region.pgm"), self.size, self.size, &self.region)?;

        let victim = serde_json::to_string_pretty(&self.victim)?;
        write_text(&dir.join("victim.json"), &victim)?;

        let config = json!({
            "scene": {
                "reflectance": "reflectance.ppm",
                "depth_orig": "depth_orig.pfm",
                "depth_back": "depth_back.pfm",
                "region": "region.pgm",
                "ambient": self.ambient,
                "noise_stddev": self.noise_stddev,
                "cells": [DEFAULT_GRID.0, DEFAULT_GRID.1],
            },
            "victim": { "kind": "brightness_biased", "gamma": 1.0 },
            "attack": { "g_max": 200, "seed": self.seed },
        });
        write_text(
            &dir.join("config.json"),
            &serde_json::to_string_pretty(&config)?,
        )
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut s = text.to_owned();
    s.push('\n');
    fs::write(path, s).map_err(|e| Error::file(path, e))
}
