//! Black-box projected-light attacks on monocular depth estimators.
//!
//! The crate couples a separable CMA-ES optimizer with a simulated
//! projector/camera pipeline: candidate light patterns are projected onto a
//! scene under a brighten-only compositing model, captured with noise, fed to
//! a victim depth estimator, and scored by how far the estimate is from a
//! target depth map.

pub mod attack;
pub mod config;
pub mod error;
pub mod functions;
pub mod metrics;
pub mod netpbm;
pub mod optimizer;
pub mod parallel;
pub mod presets;
pub mod raster;
pub mod scene;
pub mod victim;

pub use attack::{run_attack, AttackConfig, AttackResult, AttackRunner, Checkpoint};
pub use error::{Error, Result};
pub use optimizer::{default_lambda, OptimizerState, RankedCandidate, StrategyParams};
pub use parallel::EvalMode;
pub use raster::{CapturedImage, DepthMap, RgbImage};
pub use scene::{PerturbationPattern, RegionMask, SceneModel};
pub use victim::{DepthEstimator, VictimDescriptor};
