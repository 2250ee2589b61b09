//! Files written into a run directory.

use std::fs;
use std::path::Path;

use pitl_core::attack::TraceRecord;
use pitl_core::{netpbm, DepthMap, Error, PerturbationPattern, Result, RgbImage};

pub const TRACE: &str = "trace.csv";
pub const MANIFEST: &str = "manifest.json";
pub const CHECKPOINT: &str = "checkpoint.json";

pub fn write_trace(path: &Path, trace: &[TraceRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for record in trace {
        w.serialize(record).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::file(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Format(format!("{}: {e}", path.display()))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::file(path, e))
}

/// One grayscale PFM per colour channel at cell resolution, unclamped.
pub fn write_pattern_channels(dir: &Path, pattern: &PerturbationPattern) -> Result<Vec<String>> {
    let mut names = Vec::with_capacity(3);
    for (ch, tag) in ["r", "g", "b"].iter().enumerate() {
        let values: Vec<f64> = pattern.cells.iter().skip(ch).step_by(3).copied().collect();
        let name = format!("delta_{tag}.pfm");
        let path = dir.join(&name);
        fs::write(
            &path,
            netpbm::encode_pfm_gray(pattern.cols, pattern.rows, &values),
        )
        .map_err(|e| Error::file(&path, e))?;
        names.push(name);
    }
    Ok(names)
}

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn write_png_rgb(path: &Path, img: &RgbImage) -> Result<()> {
    let bytes = img.data.iter().map(|v| to_u8(*v)).collect();
    let buf = image::RgbImage::from_raw(img.width as u32, img.height as u32, bytes)
        .ok_or_else(|| Error::Shape("image buffer size".into()))?;
    buf.save(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// Grayscale depth preview; near is bright. `range` fixes the scale so
/// several maps can be compared side by side.
pub fn write_png_depth(path: &Path, depth: &DepthMap, (lo, hi): (f64, f64)) -> Result<()> {
    let span = (hi - lo).max(f64::EPSILON);
    let bytes = depth
        .values
        .iter()
        .map(|d| to_u8(1.0 - (d - lo) / span))
        .collect();
    let buf = image::GrayImage::from_raw(depth.width as u32, depth.height as u32, bytes)
        .ok_or_else(|| Error::Shape("depth buffer size".into()))?;
    buf.save(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn depth_range<'a>(maps: impl IntoIterator<Item = &'a DepthMap>) -> (f64, f64) {
    maps.into_iter()
        .flat_map(|m| m.values.iter().copied())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channels_split_interleaved_cells() {
        let dir = tempfile::tempdir().unwrap();
        let p = PerturbationPattern::new(1, 2, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap();
        write_pattern_channels(dir.path(), &p).unwrap();
        let g = netpbm::read_pfm(&dir.path().join("delta_g.pfm")).unwrap();
        assert_eq!((g.width, g.height), (2, 1));
        assert_eq!(g.values, vec![0.2f32 as f64, 0.5f32 as f64]);
    }

    #[test]
    fn depth_preview_maps_near_to_bright() {
        let dir = tempfile::tempdir().unwrap();
        let d = DepthMap::new(2, 1, vec![1.0, 3.0]).unwrap();
        let path = dir.path().join("d.png");
        write_png_depth(&path, &d, depth_range([&d])).unwrap();
        let img = image::open(&path).unwrap().to_luma8();
        assert_eq!(img.as_raw(), &vec![255, 0]);
    }
}
