//! Simulated projector/camera loop.
//!
//! A perturbation pattern assigns an RGB projector intensity to each cell of
//! a grid laid over the attack region. The camera sees
//!
//! ```text
//! clamp(reflectance ⊙ clamp(ambient + light, 0, 1) + noise, 0, 1)
//! ```
//!
//! so projected light can only brighten a surface, the brightening saturates,
//! and the surface colour always modulates what the camera records.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::raster::{CapturedImage, DepthMap, RgbImage};

/// Default per-channel camera noise standard deviation.
pub const DEFAULT_NOISE_STDDEV: f64 = 0.01;

/// The attack region R together with its projection cell grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMask {
    width: usize,
    height: usize,
    member: Vec<bool>,
    rows: usize,
    cols: usize,
    /// Inclusive bounding box (x0, y0, x1, y1) of the member pixels.
    bbox: (usize, usize, usize, usize),
    cell_of: Vec<Option<usize>>,
    count: usize,
}

impl RegionMask {
    /// `grid` is (rows, cols) over the bounding box of the member pixels.
    pub fn new(
        width: usize,
        height: usize,
        member: Vec<bool>,
        grid: (usize, usize),
    ) -> Result<Self> {
        if member.len() != width * height {
            return Err(Error::Shape(format!(
                "mask has {} entries for a {width}x{height} image",
                member.len()
            )));
        }
        let count = member.iter().filter(|m| **m).count();
        if count == 0 {
            return Err(Error::InvalidParameter(
                "region has no member pixels".into(),
            ));
        }
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        for (p, _) in member.iter().enumerate().filter(|(_, m)| **m) {
            let (x, y) = (p % width, p / width);
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        let (bw, bh) = (x1 - x0 + 1, y1 - y0 + 1);
        let (rows, cols) = grid;
        if rows == 0 || cols == 0 || rows > bh || cols > bw {
            return Err(Error::InvalidParameter(format!(
                "cell grid {rows}x{cols} does not fit the {bh}x{bw} region bounding box"
            )));
        }
        let cell_of = member
            .iter()
            .enumerate()
            .map(|(p, &m)| {
                m.then(|| {
                    let (x, y) = (p % width, p / width);
                    let r = (y - y0) * rows / bh;
                    let c = (x - x0) * cols / bw;
                    r * cols + c
                })
            })
            .collect();
        Ok(Self {
            width,
            height,
            member,
            rows,
            cols,
            bbox: (x0, y0, x1, y1),
            cell_of,
            count,
        })
    }

    /// One cell per bounding-box pixel; for a rectangular region n = 3|R|.
    pub fn per_pixel(width: usize, height: usize, member: Vec<bool>) -> Result<Self> {
        let probe = Self::new(width, height, member, (1, 1))?;
        let (x0, y0, x1, y1) = probe.bbox;
        Self::new(width, height, probe.member, (y1 - y0 + 1, x1 - x0 + 1))
    }

    /// Axis-aligned rectangle [x0, x0+w) × [y0, y0+h).
    pub fn rect(
        width: usize,
        height: usize,
        (x0, y0, w, h): (usize, usize, usize, usize),
        grid: (usize, usize),
    ) -> Result<Self> {
        let member = (0..width * height)
            .map(|p| {
                let (x, y) = (p % width, p / width);
                x >= x0 && x < x0 + w && y >= y0 && y < y0 + h
            })
            .collect();
        Self::new(width, height, member, grid)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn grid(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn bbox(&self) -> (usize, usize, usize, usize) {
        self.bbox
    }

    /// |R|.
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn contains(&self, p: usize) -> bool {
        self.member[p]
    }

    pub fn member(&self) -> &[bool] {
        &self.member
    }

    /// Linear indices of the member pixels in row-major order.
    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.member
            .iter()
            .enumerate()
            .filter_map(|(p, &m)| m.then_some(p))
    }

    pub fn cell_of(&self, p: usize) -> Option<usize> {
        self.cell_of[p]
    }

    /// Number of optimized variables, 3 per cell.
    pub fn n_vars(&self) -> usize {
        3 * self.rows * self.cols
    }
}

/// Projector intensities, `rows × cols × 3`, row-major with interleaved RGB.
/// Entries may leave [0, 1] in optimizer space; projection clamps them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationPattern {
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<f64>,
}

impl PerturbationPattern {
    pub fn new(rows: usize, cols: usize, cells: Vec<f64>) -> Result<Self> {
        if cells.len() != rows * cols * 3 {
            return Err(Error::Shape(format!(
                "{} values for a {rows}x{cols} RGB cell grid",
                cells.len()
            )));
        }
        Ok(Self { rows, cols, cells })
    }

    pub fn for_region(region: &RegionMask, cells: Vec<f64>) -> Result<Self> {
        let (rows, cols) = region.grid();
        Self::new(rows, cols, cells)
    }

    pub fn uniform(region: &RegionMask, value: f64) -> Self {
        let (rows, cols) = region.grid();
        Self {
            rows,
            cols,
            cells: vec![value; rows * cols * 3],
        }
    }

    pub fn cell(&self, r: usize, c: usize) -> [f64; 3] {
        let i = 3 * (r * self.cols + c);
        [self.cells[i], self.cells[i + 1], self.cells[i + 2]]
    }

    pub fn clamped(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            cells: self.cells.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        }
    }
}

/// Maps cells to a W×H×3 light field: members of R receive their cell's
/// clamped intensity, every other pixel receives 0.
pub fn pattern_to_light(pattern: &PerturbationPattern, region: &RegionMask) -> Result<RgbImage> {
    if (pattern.rows, pattern.cols) != region.grid() || pattern.cells.len() != region.n_vars() {
        return Err(Error::Shape(format!(
            "pattern grid {}x{} does not match region grid {}x{}",
            pattern.rows,
            pattern.cols,
            region.grid().0,
            region.grid().1
        )));
    }
    let (w, h) = region.dims();
    let mut data = vec![0.0; w * h * 3];
    for p in region.members() {
        let cell = region.cell_of(p).expect("member pixel has a cell");
        for ch in 0..3 {
            data[3 * p + ch] = pattern.cells[3 * cell + ch].clamp(0.0, 1.0);
        }
    }
    RgbImage::new(w, h, data)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Ambient {
    Uniform([f64; 3]),
    Field(RgbImage),
}

impl Ambient {
    #[inline]
    fn at(&self, i: usize) -> f64 {
        match self {
            Ambient::Uniform(rgb) => rgb[i % 3],
            Ambient::Field(img) => img.data[i],
        }
    }
}

impl From<f64> for Ambient {
    fn from(v: f64) -> Self {
        Ambient::Uniform([v; 3])
    }
}

#[derive(Debug, Clone)]
pub struct SceneModel {
    pub reflectance: RgbImage,
    pub ambient: Ambient,
    /// Depth with the target object present.
    pub depth_orig: DepthMap,
    /// Depth of the background alone.
    pub depth_back: DepthMap,
    /// Target depth; the background when absent.
    pub depth_target: Option<DepthMap>,
    /// Attack region R and its cell grid.
    pub region: RegionMask,
    /// Region for the presence rate; R when absent.
    pub eval_region: Option<RegionMask>,
    pub noise_stddev: f64,
}

impl SceneModel {
    pub fn dims(&self) -> (usize, usize) {
        self.reflectance.dims()
    }

    pub fn target(&self) -> &DepthMap {
        self.depth_target.as_ref().unwrap_or(&self.depth_back)
    }

    pub fn presence_region(&self) -> &RegionMask {
        self.eval_region.as_ref().unwrap_or(&self.region)
    }

    /// Pixels where the object changes the depth.
    pub fn object_mask(&self) -> Vec<bool> {
        self.depth_orig
            .values
            .iter()
            .zip(&self.depth_back.values)
            .map(|(o, b)| o != b)
            .collect()
    }

    pub fn n_vars(&self) -> usize {
        self.region.n_vars()
    }

    /// Checks shapes, value ranges and the presence-rate denominators.
    pub fn validate(&self) -> Result<()> {
        let dims = self.dims();
        self.depth_orig.ensure_dims(dims, "object depth map")?;
        self.depth_back.ensure_dims(dims, "background depth map")?;
        if let Some(t) = &self.depth_target {
            t.ensure_dims(dims, "target depth map")?;
        }
        if self.region.dims() != dims {
            return Err(Error::Shape(
                "region mask size differs from the scene".into(),
            ));
        }
        if let Some(r) = &self.eval_region {
            if r.dims() != dims {
                return Err(Error::Shape(
                    "evaluation mask size differs from the scene".into(),
                ));
            }
        }
        if !self.reflectance.in_unit_range() {
            return Err(Error::InvalidParameter(
                "reflectance must lie in [0, 1]".into(),
            ));
        }
        match &self.ambient {
            Ambient::Uniform(rgb) if rgb.iter().any(|v| !(0.0..=1.0).contains(v)) => {
                return Err(Error::InvalidParameter(
                    "ambient light must lie in [0, 1]".into(),
                ));
            }
            Ambient::Field(img) => {
                if img.dims() != dims {
                    return Err(Error::Shape(
                        "ambient field size differs from the scene".into(),
                    ));
                }
                if !img.in_unit_range() {
                    return Err(Error::InvalidParameter(
                        "ambient light must lie in [0, 1]".into(),
                    ));
                }
            }
            _ => {}
        }
        if !(self.noise_stddev.is_finite() && self.noise_stddev >= 0.0) {
            return Err(Error::InvalidParameter(
                "noise stddev must be non-negative".into(),
            ));
        }
        let region = self.presence_region();
        if let Some(p) = region
            .members()
            .find(|&p| self.depth_orig.values[p] == self.depth_back.values[p])
        {
            return Err(Error::DegenerateScene(format!(
                "pixel ({}, {}) has equal object and background depth",
                p % dims.0,
                p / dims.0
            )));
        }
        Ok(())
    }

    /// SHA-256 over every array in the scene, hex encoded.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        let mut put = |tag: &str, values: &[f64]| {
            h.update(tag.as_bytes());
            h.update((values.len() as u64).to_le_bytes());
            for v in values {
                h.update(v.to_le_bytes());
            }
        };
        let (w, ht) = self.dims();
        put("dims", &[w as f64, ht as f64]);
        put("reflectance", &self.reflectance.data);
        match &self.ambient {
            Ambient::Uniform(rgb) => put("ambient", rgb),
            Ambient::Field(img) => put("ambient-field", &img.data),
        }
        put("orig", &self.depth_orig.values);
        put("back", &self.depth_back.values);
        if let Some(t) = &self.depth_target {
            put("target", &t.values);
        }
        let mask = |r: &RegionMask| -> Vec<f64> {
            let (rows, cols) = r.grid();
            let mut v = vec![rows as f64, cols as f64];
            v.extend(r.member().iter().map(|&m| m as u8 as f64));
            v
        };
        put("region", &mask(&self.region));
        if let Some(r) = &self.eval_region {
            put("eval-region", &mask(r));
        }
        put("noise", &[self.noise_stddev]);
        hex(&h.finalize())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Composite before camera noise: reflectance ⊙ clamp(ambient + light, 0, 1).
pub fn composite_noiseless(scene: &SceneModel, light: &RgbImage) -> RgbImage {
    let data = scene
        .reflectance
        .data
        .iter()
        .zip(&light.data)
        .enumerate()
        .map(|(i, (r, l))| r.clamp(0.0, 1.0) * (scene.ambient.at(i) + l).clamp(0.0, 1.0))
        .collect();
    RgbImage {
        width: scene.reflectance.width,
        height: scene.reflectance.height,
        data,
    }
}

/// Projects `pattern`, adds i.i.d. Gaussian camera noise and clamps.
pub fn compose_projection<R: Rng + ?Sized>(
    scene: &SceneModel,
    pattern: &PerturbationPattern,
    rng: &mut R,
) -> Result<CapturedImage> {
    let light = pattern_to_light(pattern, &scene.region)?;
    let mut img = composite_noiseless(scene, &light);
    add_noise(&mut img, scene.noise_stddev, rng);
    Ok(img)
}

/// The capture with the projector dark.
pub fn benign_capture<R: Rng + ?Sized>(scene: &SceneModel, rng: &mut R) -> CapturedImage {
    let (w, h) = scene.dims();
    let dark = RgbImage {
        width: w,
        height: h,
        data: vec![0.0; w * h * 3],
    };
    let mut img = composite_noiseless(scene, &dark);
    add_noise(&mut img, scene.noise_stddev, rng);
    img
}

fn add_noise<R: Rng + ?Sized>(img: &mut RgbImage, stddev: f64, rng: &mut R) {
    if stddev > 0.0 {
        for v in img.data.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *v += stddev * z;
        }
    }
    for v in img.data.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
}
