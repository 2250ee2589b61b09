//! Victim depth estimators.
//!
//! The attack only ever sees a victim through [`DepthEstimator`]: an image
//! goes in, a depth map of the same size comes out. Built-in victims are
//! analytic stand-ins for a neural network; [`external::ExternalVictim`]
//! talks to a real model hosted in a separate process.

pub mod external;
pub mod protocol;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{CapturedImage, DepthMap};
use crate::scene::SceneModel;

pub use external::{Capabilities, ExternalVictim};

/// Side length of the patch_linear receptive field.
pub const PATCH_SIZE: usize = 5;
/// Weights in a patch_linear victim: 5×5 pixels × RGB.
pub const PATCH_WEIGHTS: usize = PATCH_SIZE * PATCH_SIZE * 3;

pub const DEFAULT_TIMEOUT_SECS: f64 = 60.0;

pub trait DepthEstimator: Send + Sync {
    fn estimate(&self, image: &CapturedImage) -> Result<DepthMap>;

    /// Whether `estimate` may be called from several threads at once.
    fn concurrency_safe(&self) -> bool {
        true
    }

    fn name(&self) -> &str;
}

/// Serializable description of a victim, resolved against a scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VictimDescriptor {
    /// Ignores the image and reports a uniform depth.
    Constant { value: f64 },
    /// Bright object pixels read as background.
    BrightnessBiased {
        #[serde(default = "one")]
        gamma: f64,
    },
    /// Background plus a ReLU of a linear filter over a 5×5 RGB patch,
    /// applied on object pixels.
    PatchLinear { weights: Vec<f64>, bias: f64 },
    /// A separate process speaking the JSON-lines protocol.
    External {
        command: Vec<String>,
        #[serde(default = "default_timeout")]
        timeout_secs: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn default_timeout() -> f64 {
    DEFAULT_TIMEOUT_SECS
}

impl VictimDescriptor {
    pub fn validate(&self) -> Result<()> {
        match self {
            VictimDescriptor::Constant { value } if !(value.is_finite() && *value >= 0.0) => {
                Err(Error::InvalidParameter(format!(
                    "constant depth must be non-negative, got {value}"
                )))
            }
            VictimDescriptor::BrightnessBiased { gamma }
                if !(gamma.is_finite() && *gamma >= 0.0) =>
            {
                Err(Error::InvalidParameter(format!(
                    "gamma must be non-negative, got {gamma}"
                )))
            }
            VictimDescriptor::PatchLinear { weights, bias } => {
                if weights.len() != PATCH_WEIGHTS {
                    return Err(Error::InvalidParameter(format!(
                        "patch_linear needs {PATCH_WEIGHTS} weights, got {}",
                        weights.len()
                    )));
                }
                if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "patch_linear weights must be finite".into(),
                    ));
                }
                Ok(())
            }
            VictimDescriptor::External {
                command,
                timeout_secs,
            } => {
                if command.is_empty() {
                    return Err(Error::InvalidParameter(
                        "external victim command is empty".into(),
                    ));
                }
                if !(timeout_secs.is_finite() && *timeout_secs > 0.0) {
                    return Err(Error::InvalidParameter("timeout must be positive".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Builds the estimator; external victims are spawned and handshaken here.
    pub fn instantiate(&self, scene: &SceneModel) -> Result<Box<dyn DepthEstimator>> {
        self.validate()?;
        let (w, h) = scene.dims();
        Ok(match self {
            VictimDescriptor::Constant { value } => Box::new(ConstantVictim { value: *value }),
            VictimDescriptor::BrightnessBiased { gamma } => Box::new(BrightnessBiased::new(
                scene.depth_orig.clone(),
                scene.depth_back.clone(),
                scene.object_mask(),
                *gamma,
            )?),
            VictimDescriptor::PatchLinear { weights, bias } => Box::new(PatchLinear::new(
                scene.depth_back.clone(),
                scene.object_mask(),
                weights.clone(),
                *bias,
            )?),
            VictimDescriptor::External {
                command,
                timeout_secs,
            } => {
                let victim = ExternalVictim::spawn(
                    command,
                    std::time::Duration::from_secs_f64(*timeout_secs),
                )?;
                let caps = victim.capabilities();
                if w > caps.max_width || h > caps.max_height {
                    return Err(Error::Shape(format!(
                        "scene is {w}x{h} but '{}' accepts at most {}x{}",
                        caps.model, caps.max_width, caps.max_height
                    )));
                }
                Box::new(victim)
            }
        })
    }

    pub fn is_external(&self) -> bool {
        matches!(self, VictimDescriptor::External { .. })
    }
}

#[derive(Debug, Clone)]
pub struct ConstantVictim {
    pub value: f64,
}

impl DepthEstimator for ConstantVictim {
    fn estimate(&self, image: &CapturedImage) -> Result<DepthMap> {
        DepthMap::uniform(image.width, image.height, self.value)
    }

    fn name(&self) -> &str {
        "constant"
    }
}

/// `depth(p) = d_obj(p) + γ·(d_back(p) − d_obj(p))·clamp(L(p), 0, 1)` on
/// object pixels and `d_back(p)` elsewhere, with L the Rec. 709 luminance.
#[derive(Debug, Clone)]
pub struct BrightnessBiased {
    d_obj: DepthMap,
    d_back: DepthMap,
    mask: Vec<bool>,
    gamma: f64,
}

impl BrightnessBiased {
    pub fn new(d_obj: DepthMap, d_back: DepthMap, mask: Vec<bool>, gamma: f64) -> Result<Self> {
        d_back.ensure_dims(d_obj.dims(), "background depth")?;
        if mask.len() != d_obj.values.len() {
            return Err(Error::Shape(
                "object mask size differs from depth maps".into(),
            ));
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be non-negative, got {gamma}"
            )));
        }
        Ok(Self {
            d_obj,
            d_back,
            mask,
            gamma,
        })
    }
}

impl DepthEstimator for BrightnessBiased {
    fn estimate(&self, image: &CapturedImage) -> Result<DepthMap> {
        self.d_obj.ensure_dims(image.dims(), "input image")?;
        let values = (0..self.mask.len())
            .map(|p| {
                let back = self.d_back.values[p];
                if self.mask[p] {
                    let obj = self.d_obj.values[p];
                    let l = image.luminance(p).clamp(0.0, 1.0);
                    (obj + self.gamma * (back - obj) * l).max(0.0)
                } else {
                    back
                }
            })
            .collect();
        DepthMap::new(image.width, image.height, values)
    }

    fn name(&self) -> &str {
        "brightness_biased"
    }
}

/// `depth(p) = d_back(p) + mask(p)·relu(w·patch(p) + b)`, where `patch(p)` is
/// the 5×5 RGB neighbourhood of p with edge pixels replicated, ordered by
/// (dy, dx, channel).
#[derive(Debug, Clone)]
pub struct PatchLinear {
    d_back: DepthMap,
    mask: Vec<bool>,
    weights: Vec<f64>,
    bias: f64,
}

impl PatchLinear {
    pub fn new(d_back: DepthMap, mask: Vec<bool>, weights: Vec<f64>, bias: f64) -> Result<Self> {
        if mask.len() != d_back.values.len() {
            return Err(Error::Shape(
                "object mask size differs from depth map".into(),
            ));
        }
        if weights.len() != PATCH_WEIGHTS {
            return Err(Error::InvalidParameter(format!(
                "patch_linear needs {PATCH_WEIGHTS} weights, got {}",
                weights.len()
            )));
        }
        Ok(Self {
            d_back,
            mask,
            weights,
            bias,
        })
    }

    /// Deterministic N(0, 0.2²) weights and bias 0.5 from a seed.
    pub fn seeded_parameters(seed: u64) -> (Vec<f64>, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = (0..PATCH_WEIGHTS)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                0.2 * z
            })
            .collect();
        (weights, 0.5)
    }

    fn response(&self, image: &CapturedImage, x: usize, y: usize) -> f64 {
        let half = (PATCH_SIZE / 2) as isize;
        let (w, h) = (image.width as isize, image.height as isize);
        let mut acc = self.bias;
        let mut k = 0;
        for dy in -half..=half {
            let yy = (y as isize + dy).clamp(0, h - 1) as usize;
            for dx in -half..=half {
                let xx = (x as isize + dx).clamp(0, w - 1) as usize;
                let px = image.pixel(xx, yy);
                for v in px {
                    acc += self.weights[k] * v;
                    k += 1;
                }
            }
        }
        acc.max(0.0)
    }
}

impl DepthEstimator for PatchLinear {
    fn estimate(&self, image: &CapturedImage) -> Result<DepthMap> {
        self.d_back.ensure_dims(image.dims(), "input image")?;
        let values = (0..self.mask.len())
            .map(|p| {
                let back = self.d_back.values[p];
                if self.mask[p] {
                    back + self.response(image, p % image.width, p / image.width)
                } else {
                    back
                }
            })
            .collect();
        DepthMap::new(image.width, image.height, values)
    }

    fn name(&self) -> &str {
        "patch_linear"
    }
}
