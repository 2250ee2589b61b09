//! Row-major pixel buffers shared by the scene, victims and metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// W×H depth values, row-major. All values are finite and non-negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Shape("depth map must be non-empty".into()));
        }
        if values.len() != width * height {
            return Err(Error::Shape(format!(
                "{} depth values for a {width}x{height} map",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "depth values must be finite and non-negative, found {v}"
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn uniform(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn ensure_dims(&self, other: (usize, usize), what: &str) -> Result<()> {
        if self.dims() != other {
            return Err(Error::Shape(format!(
                "{what} is {}x{}, expected {}x{}",
                self.width, self.height, other.0, other.1
            )));
        }
        Ok(())
    }
}

/// W×H×3 interleaved RGB values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

/// A camera capture of the scene; every value lies in [0, 1].
pub type CapturedImage = RgbImage;

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Shape("image must be non-empty".into()));
        }
        if data.len() != width * height * 3 {
            return Err(Error::Shape(format!(
                "{} channel values for a {width}x{height} RGB image",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [f64; 3]) -> Result<Self> {
        let data = rgb
            .iter()
            .copied()
            .cycle()
            .take(width * height * 3)
            .collect();
        Self::new(width, height, data)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Rec. 709 luminance of pixel `p` (linear index).
    pub fn luminance(&self, p: usize) -> f64 {
        luminance([self.data[3 * p], self.data[3 * p + 1], self.data[3 * p + 2]])
    }

    pub fn in_unit_range(&self) -> bool {
        self.data.iter().all(|v| (0.0..=1.0).contains(v))
    }
}

pub fn luminance(rgb: [f64; 3]) -> f64 {
    0.2126 * rgb[0] + 0.7152 * rgb[1] + 0.0722 * rgb[2]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_map_validation() {
        assert!(DepthMap::new(2, 2, vec![1.0; 4]).is_ok());
        assert!(matches!(
            DepthMap::new(2, 2, vec![1.0; 3]),
            Err(Error::Shape(_))
        ));
        assert!(DepthMap::new(1, 1, vec![-1.0]).is_err());
        assert!(DepthMap::new(1, 1, vec![f64::NAN]).is_err());
        assert!(DepthMap::new(0, 1, vec![]).is_err());
    }

    #[test]
    fn luminance_of_white_is_one() {
        assert!((luminance([1.0, 1.0, 1.0]) - 1.0).abs() < 1e-12);
        let img = RgbImage::filled(2, 1, [0.0, 1.0, 0.0]).unwrap();
        assert_eq!(img.luminance(1), 0.7152);
    }
}
