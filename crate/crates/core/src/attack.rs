//! The physics-in-the-loop attack loop.
//!
//! Each generation samples λ light patterns from the sep-CMA-ES
//! distribution, projects each one (clamped to the projector's [0, 1]
//! range), captures the scene, runs the victim, and scores the estimate
//! against the target depth. The lowest score ever observed is kept as δ*,
//! then the optimizer is updated from the ranked population.
//!
//! The optimizer itself runs unbounded; clamping happens only at projection.

use std::time::Instant;

use log::{debug, info};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::metrics::{objective, presence_rate};
use crate::optimizer::{rank, OptimizerState, StrategyParams};
use crate::parallel::{map_indexed, EvalMode};
use crate::raster::{CapturedImage, DepthMap};
use crate::scene::{benign_capture, compose_projection, hex, PerturbationPattern, SceneModel};
use crate::victim::{DepthEstimator, VictimDescriptor};

/// Where the search distribution starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialMean {
    Policy(MeanPolicy),
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanPolicy {
    /// Every channel of every cell at full intensity.
    MaxRgb,
    MidRgb,
}

impl Default for InitialMean {
    fn default() -> Self {
        InitialMean::Policy(MeanPolicy::MaxRgb)
    }
}

impl InitialMean {
    pub fn resolve(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            InitialMean::Policy(MeanPolicy::MaxRgb) => Ok(vec![1.0; n]),
            InitialMean::Policy(MeanPolicy::MidRgb) => Ok(vec![0.5; n]),
            InitialMean::Explicit(v) if v.len() == n => Ok(v.clone()),
            InitialMean::Explicit(v) => Err(Error::InvalidDimension(format!(
                "initial mean has {} entries, the cell grid needs {n}",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundPolicy {
    /// Optimize unbounded, clamp to [0, 1] when projecting.
    #[default]
    ClampEval,
}

fn default_sigma() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackConfig {
    pub g_max: u64,
    /// Population size; λ = 4 + ⌊3 ln n⌋ when absent.
    #[serde(default)]
    pub lambda: Option<usize>,
    #[serde(default = "default_sigma")]
    pub sigma0: f64,
    #[serde(default)]
    pub mean0: InitialMean,
    #[serde(default)]
    pub bound_policy: BoundPolicy,
    #[serde(default)]
    pub seed: u64,
    pub victim: VictimDescriptor,
}

impl AttackConfig {
    pub fn new(g_max: u64, victim: VictimDescriptor) -> Self {
        Self {
            g_max,
            lambda: None,
            sigma0: 1.0,
            mean0: InitialMean::default(),
            bound_policy: BoundPolicy::ClampEval,
            seed: 0,
            victim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.g_max == 0 {
            return Err(Error::InvalidParameter("g_max must be at least 1".into()));
        }
        if !(self.sigma0.is_finite() && self.sigma0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma0 must be positive, got {}",
                self.sigma0
            )));
        }
        if self.lambda.is_some_and(|l| l < 2) {
            return Err(Error::InvalidParameter("lambda must be at least 2".into()));
        }
        self.victim.validate()
    }

    /// SHA-256 over the serialized config and the scene content.
    pub fn hash(&self, scene: &SceneModel) -> String {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(self).expect("config serializes"));
        h.update(scene.content_hash().as_bytes());
        hex(&h.finalize())
    }
}

/// One row of the per-generation log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub generation: u64,
    /// Victim evaluations so far, including this generation.
    pub eval_count: u64,
    pub f_best_gen: f64,
    pub f_best_so_far: f64,
    /// Presence rate of this generation's best candidate.
    pub e_best_gen: f64,
    /// Wall time since the run started.
    pub wall_ms: f64,
}

/// δ* and what was observed when it was evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestCandidate {
    /// Optimizer-space vector; may leave [0, 1].
    pub vector: Vec<f64>,
    pub objective: f64,
    pub presence: f64,
    pub depth: DepthMap,
    pub generation: u64,
}

/// Everything needed to continue a run exactly where it stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub config_hash: String,
    pub state: OptimizerState,
    pub best: Option<BestCandidate>,
    pub trace: Vec<TraceRecord>,
    pub eval_count: u64,
}

impl Checkpoint {
    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let json = serde_json::to_vec(self)?;
        std::fs::write(path, json).map_err(|e| Error::file(path, e))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::file(path, e))?;
        Ok(serde_json::from_slice(&bytes)?)
    }
}

#[derive(Debug, Clone)]
pub struct AttackResult {
    /// δ* in optimizer space.
    pub best_pattern: PerturbationPattern,
    pub best_objective: f64,
    pub best_presence: f64,
    /// The victim's estimate when δ* was evaluated.
    pub best_depth: DepthMap,
    pub best_generation: u64,
    pub trace: Vec<TraceRecord>,
    pub evaluations: u64,
    pub lambda: usize,
    pub n: usize,
    pub config_hash: String,
    pub final_state: OptimizerState,
}

impl AttackResult {
    /// δ* as the projector actually emits it.
    pub fn projected_pattern(&self) -> PerturbationPattern {
        self.best_pattern.clamped()
    }
}

#[derive(Debug, Error)]
pub enum AttackError {
    #[error(transparent)]
    Setup(Error),
    #[error("attack interrupted at generation {}: {source}", .checkpoint.state.generation)]
    Interrupted {
        source: Error,
        checkpoint: Box<Checkpoint>,
    },
}

impl AttackError {
    pub fn source_error(&self) -> &Error {
        match self {
            AttackError::Setup(e) => e,
            AttackError::Interrupted { source, .. } => source,
        }
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const NOISE_SALT: u64 = 0x6e6f_6973_6500_0001;
const REEVAL_SALT: u64 = 0x7265_6576_616c_0002;
const BENIGN_SALT: u64 = 0x6265_6e69_676e_0003;

/// Independent noise stream per (run seed, generation, candidate index), so
/// captures do not depend on evaluation order.
fn noise_rng(seed: u64, salt: u64, generation: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(mix(mix(seed ^ salt) ^ generation) ^ index))
}

struct Evaluation {
    objective: f64,
    depth: DepthMap,
}

fn evaluate(
    scene: &SceneModel,
    victim: &dyn DepthEstimator,
    vector: &[f64],
    rng: &mut ChaCha8Rng,
) -> Result<Evaluation> {
    let pattern = PerturbationPattern::for_region(&scene.region, vector.to_vec())?;
    let image = compose_projection(scene, &pattern, rng)?;
    let depth = victim.estimate(&image)?;
    if depth.dims() != scene.dims() {
        return Err(Error::victim(format!(
            "victim returned a {}x{} map for a {}x{} image",
            depth.width, depth.height, image.width, image.height
        )));
    }
    let objective = objective(&depth, scene.target(), &scene.region)?;
    Ok(Evaluation { objective, depth })
}

/// Drives the attack one generation at a time.
pub struct AttackRunner<'a> {
    config: AttackConfig,
    scene: &'a SceneModel,
    victim: &'a dyn DepthEstimator,
    params: StrategyParams,
    state: OptimizerState,
    best: Option<BestCandidate>,
    trace: Vec<TraceRecord>,
    eval_count: u64,
    config_hash: String,
    eval_mode: EvalMode,
    started: Instant,
    wall_offset_ms: f64,
}

impl<'a> AttackRunner<'a> {
    pub fn new(
        config: AttackConfig,
        scene: &'a SceneModel,
        victim: &'a dyn DepthEstimator,
    ) -> Result<Self> {
        config.validate()?;
        scene.validate()?;
        let n = scene.n_vars();
        let params = StrategyParams::new(n, config.lambda)?;
        let mean = config.mean0.resolve(n)?;
        let state = OptimizerState::init(n, mean, config.sigma0, config.seed)?;
        let config_hash = config.hash(scene);
        info!(
            "attack: n = {n}, lambda = {}, g_max = {}, victim = {}",
            params.lambda,
            config.g_max,
            victim.name()
        );
        Ok(Self {
            config,
            scene,
            victim,
            params,
            state,
            best: None,
            trace: Vec::new(),
            eval_count: 0,
            config_hash,
            eval_mode: EvalMode::default(),
            started: Instant::now(),
            wall_offset_ms: 0.0,
        })
    }

    /// Continues from a checkpoint taken under the identical config and scene.
    pub fn resume(
        config: AttackConfig,
        scene: &'a SceneModel,
        victim: &'a dyn DepthEstimator,
        checkpoint: Checkpoint,
    ) -> Result<Self> {
        let mut runner = Self::new(config, scene, victim)?;
        if checkpoint.config_hash != runner.config_hash {
            return Err(Error::CheckpointMismatch(
                "checkpoint was written for a different config or scene".into(),
            ));
        }
        if checkpoint.state.dim() != runner.params.n {
            return Err(Error::CheckpointMismatch(
                "checkpoint dimension differs".into(),
            ));
        }
        runner.wall_offset_ms = checkpoint.trace.last().map_or(0.0, |r| r.wall_ms);
        runner.state = checkpoint.state;
        runner.best = checkpoint.best;
        runner.trace = checkpoint.trace;
        runner.eval_count = checkpoint.eval_count;
        info!("resuming at generation {}", runner.state.generation);
        Ok(runner)
    }

    pub fn with_eval_mode(mut self, mode: EvalMode) -> Self {
        self.eval_mode = mode;
        self
    }

    pub fn params(&self) -> &StrategyParams {
        &self.params
    }

    pub fn state(&self) -> &OptimizerState {
        &self.state
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn best(&self) -> Option<&BestCandidate> {
        self.best.as_ref()
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    /// Generation about to run (1-based).
    pub fn generation(&self) -> u64 {
        self.state.generation
    }

    pub fn is_finished(&self) -> bool {
        self.state.generation > self.config.g_max
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            config_hash: self.config_hash.clone(),
            state: self.state.clone(),
            best: self.best.clone(),
            trace: self.trace.clone(),
            eval_count: self.eval_count,
        }
    }

    /// Runs one generation. On error the runner is left as it was before the
    /// call, so [`checkpoint`](Self::checkpoint) resumes at this generation.
    pub fn step(&mut self) -> Result<&TraceRecord> {
        if self.is_finished() {
            return Err(Error::ContractViolation(format!(
                "all {} generations have run",
                self.config.g_max
            )));
        }
        let generation = self.state.generation;
        let before = self.state.clone();
        let mut population = self.state.sample_population(&self.params)?;

        let mode = if self.victim.concurrency_safe() {
            self.eval_mode
        } else {
            EvalMode::Sequential
        };
        let (scene, victim, seed) = (self.scene, self.victim, self.config.seed);
        let outcomes = map_indexed(&population, mode, |k, cand| {
            let mut rng = noise_rng(seed, NOISE_SALT, generation, k as u64);
            evaluate(scene, victim, &cand.vector, &mut rng)
        });
        let evaluations = match outcomes.into_iter().collect::<Result<Vec<_>>>() {
            Ok(v) => v,
            Err(e) => {
                self.state = before;
                return Err(e);
            }
        };
        self.eval_count += population.len() as u64;

        // Lowest observed score; the first index wins ties.
        let mut leader = 0;
        for (k, ev) in evaluations.iter().enumerate() {
            population[k].fitness = ev.objective;
            if ev.objective < evaluations[leader].objective {
                leader = k;
            }
        }
        let f_gen = evaluations[leader].objective;
        let e_gen = presence_rate(
            &evaluations[leader].depth,
            &self.scene.depth_orig,
            &self.scene.depth_back,
            self.scene.presence_region(),
        )?;

        if self.best.as_ref().is_none_or(|b| b.objective > f_gen) {
            self.best = Some(BestCandidate {
                vector: population[leader].vector.clone(),
                objective: f_gen,
                presence: e_gen,
                depth: evaluations[leader].depth.clone(),
                generation,
            });
        }
        let f_best = self.best.as_ref().map_or(f_gen, |b| b.objective);

        let ranked = rank(population);
        self.state.update(&self.params, &ranked)?;

        let wall_ms = self.wall_offset_ms + self.started.elapsed().as_secs_f64() * 1e3;
        debug!(
            "g = {generation}: f_gen = {f_gen:.6}, f* = {f_best:.6}, e = {e_gen:.4}, sigma = {:.3e}",
            self.state.step_size
        );
        self.trace.push(TraceRecord {
            generation,
            eval_count: self.eval_count,
            f_best_gen: f_gen,
            f_best_so_far: f_best,
            e_best_gen: e_gen,
            wall_ms,
        });
        Ok(self.trace.last().expect("just pushed"))
    }

    pub fn run(&mut self) -> Result<()> {
        while !self.is_finished() {
            self.step()?;
        }
        Ok(())
    }

    /// Consumes the runner; fails if no generation has run.
    pub fn finish(self) -> Result<AttackResult> {
        let best = self
            .best
            .ok_or_else(|| Error::ContractViolation("no generation has been evaluated".into()))?;
        let (rows, cols) = self.scene.region.grid();
        info!(
            "attack finished: f* = {:.6}, e = {:.4}, {} evaluations",
            best.objective, best.presence, self.eval_count
        );
        Ok(AttackResult {
            best_pattern: PerturbationPattern::new(rows, cols, best.vector)?,
            best_objective: best.objective,
            best_presence: best.presence,
            best_depth: best.depth,
            best_generation: best.generation,
            trace: self.trace,
            evaluations: self.eval_count,
            lambda: self.params.lambda,
            n: self.params.n,
            config_hash: self.config_hash,
            final_state: self.state,
        })
    }
}

fn drive(mut runner: AttackRunner<'_>) -> std::result::Result<AttackResult, AttackError> {
    if let Err(source) = runner.run() {
        return Err(AttackError::Interrupted {
            source,
            checkpoint: Box::new(runner.checkpoint()),
        });
    }
    runner.finish().map_err(AttackError::Setup)
}

/// Runs all `g_max` generations against the victim named in the config.
pub fn run_attack(
    config: &AttackConfig,
    scene: &SceneModel,
) -> std::result::Result<AttackResult, AttackError> {
    let victim = config
        .victim
        .instantiate(scene)
        .map_err(AttackError::Setup)?;
    let runner =
        AttackRunner::new(config.clone(), scene, victim.as_ref()).map_err(AttackError::Setup)?;
    drive(runner)
}

/// As [`run_attack`], continuing from a checkpoint.
pub fn resume_attack(
    config: &AttackConfig,
    scene: &SceneModel,
    checkpoint: Checkpoint,
) -> std::result::Result<AttackResult, AttackError> {
    let victim = config
        .victim
        .instantiate(scene)
        .map_err(AttackError::Setup)?;
    let runner = AttackRunner::resume(config.clone(), scene, victim.as_ref(), checkpoint)
        .map_err(AttackError::Setup)?;
    drive(runner)
}

/// Mean scores of a fixed pattern over fresh noisy captures. For reporting
/// only; the attack itself never re-scores δ*.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reevaluation {
    pub repeats: usize,
    pub mean_objective: f64,
    pub mean_presence: f64,
}

pub fn reevaluate(
    scene: &SceneModel,
    victim: &dyn DepthEstimator,
    pattern: &PerturbationPattern,
    repeats: usize,
    seed: u64,
) -> Result<Reevaluation> {
    if repeats == 0 {
        return Err(Error::InvalidParameter("repeats must be at least 1".into()));
    }
    let (mut f, mut e) = (0.0, 0.0);
    for r in 0..repeats {
        let mut rng = noise_rng(seed, REEVAL_SALT, 0, r as u64);
        let ev = evaluate(scene, victim, &pattern.cells, &mut rng)?;
        f += ev.objective;
        e += presence_rate(
            &ev.depth,
            &scene.depth_orig,
            &scene.depth_back,
            scene.presence_region(),
        )?;
    }
    Ok(Reevaluation {
        repeats,
        mean_objective: f / repeats as f64,
        mean_presence: e / repeats as f64,
    })
}

/// One capture with the projector dark and the victim's depth for it.
pub fn benign_observation(
    scene: &SceneModel,
    victim: &dyn DepthEstimator,
    seed: u64,
) -> Result<(CapturedImage, DepthMap)> {
    let mut rng = noise_rng(seed, BENIGN_SALT, 0, 0);
    let image = benign_capture(scene, &mut rng);
    let depth = victim.estimate(&image)?;
    depth
        .ensure_dims(scene.dims(), "benign depth")
        .map_err(|e| Error::victim(e.to_string()))?;
    Ok((image, depth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::RgbImage;
    use crate::scene::RegionMask;
    use crate::victim::ConstantVictim;
    use std::sync::atomic::{AtomicU64, Ordering};

    fn small_scene() -> SceneModel {
        let (w, h) = (8, 8);
        let region = RegionMask::rect(w, h, (2, 2, 4, 4), (2, 2)).unwrap();
        let mut orig = vec![4.0; w * h];
        for p in region.members() {
            orig[p] = 2.0;
        }
        SceneModel {
            reflectance: RgbImage::filled(w, h, [0.9, 0.9, 0.9]).unwrap(),
            ambient: 0.3.into(),
            depth_orig: DepthMap::new(w, h, orig).unwrap(),
            depth_back: DepthMap::uniform(w, h, 4.0).unwrap(),
            depth_target: None,
            region,
            eval_region: None,
            noise_stddev: 0.01,
        }
    }

    struct Counting<V> {
        inner: V,
        calls: AtomicU64,
    }

    impl<V: DepthEstimator> DepthEstimator for Counting<V> {
        fn estimate(&self, image: &crate::raster::CapturedImage) -> Result<DepthMap> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.inner.estimate(image)
        }
        fn name(&self) -> &str {
            "counting"
        }
    }

    struct FailAt {
        call: u64,
        calls: AtomicU64,
    }

    impl DepthEstimator for FailAt {
        fn estimate(&self, image: &crate::raster::CapturedImage) -> Result<DepthMap> {
            if self.calls.fetch_add(1, Ordering::SeqCst) == self.call {
                return Err(Error::victim("simulated crash"));
            }
            DepthMap::uniform(image.width, image.height, 3.0)
        }
        fn concurrency_safe(&self) -> bool {
            false
        }
        fn name(&self) -> &str {
            "fail-at"
        }
    }

    #[test]
    fn single_generation_budget() {
        let scene = small_scene();
        let victim = Counting {
            inner: ConstantVictim { value: 4.0 },
            calls: AtomicU64::new(0),
        };
        let config = AttackConfig::new(1, VictimDescriptor::Constant { value: 4.0 });
        let mut runner = AttackRunner::new(config, &scene, &victim).unwrap();
        runner.run().unwrap();
        let lambda = runner.params().lambda as u64;
        let r = runner.finish().unwrap();
        assert_eq!(r.trace.len(), 1);
        assert_eq!(victim.calls.load(Ordering::SeqCst), lambda);
        assert_eq!(r.evaluations, lambda);
    }

    #[test]
    fn constant_target_victim_scores_zero_and_keeps_running() {
        let scene = small_scene();
        let config = AttackConfig::new(5, VictimDescriptor::Constant { value: 4.0 });
        let r = run_attack(&config, &scene).unwrap();
        assert_eq!(r.trace.len(), 5);
        assert_eq!(r.trace[0].f_best_so_far, 0.0);
        assert_eq!(r.best_objective, 0.0);
        assert_eq!(r.best_generation, 1);
        assert_eq!(r.best_presence, 0.0);
    }

    #[test]
    fn failure_leaves_a_resumable_checkpoint() {
        let scene = small_scene();
        let config = AttackConfig::new(4, VictimDescriptor::Constant { value: 3.0 });
        let lambda = StrategyParams::new(scene.n_vars(), None).unwrap().lambda as u64;
        let flaky = FailAt {
            call: 2 * lambda + 3,
            calls: AtomicU64::new(0),
        };
        let mut runner = AttackRunner::new(config.clone(), &scene, &flaky).unwrap();
        let err = runner.run().unwrap_err();
        assert!(err.is_victim_failure());
        let ckpt = runner.checkpoint();
        assert_eq!(ckpt.state.generation, 3);
        assert_eq!(ckpt.trace.len(), 2);
        assert_eq!(ckpt.eval_count, 2 * lambda);

        let steady = ConstantVictim { value: 3.0 };
        let resumed = AttackRunner::resume(config.clone(), &scene, &steady, ckpt).unwrap();
        let mut resumed = resumed;
        resumed.run().unwrap();
        let r = resumed.finish().unwrap();
        assert_eq!(r.trace.len(), 4);
        assert_eq!(r.evaluations, 4 * lambda);
    }

    #[test]
    fn step_after_finish_is_rejected() {
        let scene = small_scene();
        let victim = ConstantVictim { value: 4.0 };
        let config = AttackConfig::new(1, VictimDescriptor::Constant { value: 4.0 });
        let mut runner = AttackRunner::new(config, &scene, &victim).unwrap();
        runner.step().unwrap();
        assert!(runner.is_finished());
        assert!(runner.step().is_err());
    }

    #[test]
    fn config_validation() {
        let scene = small_scene();
        let victim = ConstantVictim { value: 4.0 };
        let mut config = AttackConfig::new(0, VictimDescriptor::Constant { value: 4.0 });
        assert!(AttackRunner::new(config.clone(), &scene, &victim).is_err());
        config.g_max = 3;
        config.sigma0 = 0.0;
        assert!(AttackRunner::new(config.clone(), &scene, &victim).is_err());
        config.sigma0 = 1.0;
        config.mean0 = InitialMean::Explicit(vec![0.5; 5]);
        assert!(matches!(
            AttackRunner::new(config, &scene, &victim),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn config_json_defaults() {
        let c: AttackConfig =
            serde_json::from_str(r#"{"g_max":3,"victim":{"kind":"constant","value":1}}"#).unwrap();
        assert_eq!(c.sigma0, 1.0);
        assert_eq!(c.mean0, InitialMean::Policy(MeanPolicy::MaxRgb));
        let c: AttackConfig = serde_json::from_str(
            r#"{"g_max":3,"mean0":[0.1,0.2],"victim":{"kind":"constant","value":1}}"#,
        )
        .unwrap();
        assert_eq!(c.mean0, InitialMean::Explicit(vec![0.1, 0.2]));
        let c: AttackConfig = serde_json::from_str(
            r#"{"g_max":3,"mean0":"mid_rgb","victim":{"kind":"constant","value":1}}"#,
        )
        .unwrap();
        assert_eq!(c.mean0, InitialMean::Policy(MeanPolicy::MidRgb));
        assert!(serde_json::from_str::<AttackConfig>(
            r#"{"g_max":3,"bogus":1,"victim":{"kind":"constant","value":1}}"#
        )
        .is_err());
    }

    #[test]
    fn reevaluation_reports_means() {
        let scene = small_scene();
        let victim = ConstantVictim { value: 3.0 };
        let pattern = PerturbationPattern::uniform(&scene.region, 1.0);
        let r = reevaluate(&scene, &victim, &pattern, 3, 1).unwrap();
        assert_eq!(r.mean_presence, 0.5);
        assert_eq!(r.mean_objective, 16.0);
        assert!(reevaluate(&scene, &victim, &pattern, 0, 1).is_err());
    }
}
