//! Separable CMA-ES (sep-CMA-ES) minimizer over ℝⁿ.
//!
//! The search distribution is N(m, σ²·diag(c)). Only the diagonal of the
//! covariance is adapted, which keeps sampling and update linear in `n` and
//! lets the covariance learn faster than the full-matrix variant (the
//! learning rate is scaled by (n+2)/3).
//!
//! The optimizer is a plain state machine: [`OptimizerState::sample_population`]
//! draws λ candidates, the caller scores them however it likes (in parallel,
//! on hardware, through a subprocess), ranks them with [`rank`], and feeds
//! the ranked list back to [`OptimizerState::update`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel::{map_indexed, EvalMode};

/// Lower bound applied to σ and to every diagonal covariance entry after an
/// update. Flat (noisy) plateaus otherwise drive them to exactly zero.
pub const NUMERICAL_FLOOR: f64 = 1e-20;

/// Population size λ = 4 + ⌊3 ln n⌋.
pub fn default_lambda(n: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::InvalidDimension("n must be at least 1".into()));
    }
    Ok(4 + (3.0 * (n as f64).ln()).floor() as usize)
}

/// Strategy constants derived from `n` and `λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyParams {
    pub n: usize,
    pub lambda: usize,
    /// Parent count μ = ⌊λ/2⌋.
    pub mu: usize,
    /// Recombination weights, w_i ∝ ln(μ + ½) − ln i, normalized to sum 1.
    pub weights: Vec<f64>,
    /// μ_eff = 1 / Σ w_i².
    pub mu_eff: f64,
    /// c_σ = (μ_eff + 2) / (n + μ_eff + 3).
    pub c_sigma: f64,
    /// d_σ = 1 + 2·max(0, √((μ_eff − 1)/(n + 1)) − 1) + c_σ.
    pub d_sigma: f64,
    /// c_c = 4 / (n + 4).
    pub c_c: f64,
    /// μ_cov = μ_eff.
    pub mu_cov: f64,
    /// c_cov = (1/μ_cov)·2/(n + √2)² + (1 − 1/μ_cov)·min(1, (2μ_cov − 1)/((n + 2)² + μ_cov)),
    /// multiplied by the separable speedup (n + 2)/3 and capped at 1.
    pub c_cov_sep: f64,
    /// E‖N(0, I)‖ ≈ √n·(1 − 1/(4n) + 1/(21n²)).
    pub chi_n: f64,
}

impl StrategyParams {
    /// Default constants; `lambda` overrides λ = 4 + ⌊3 ln n⌋ when given.
    pub fn new(n: usize, lambda: Option<usize>) -> Result<Self> {
        let default = default_lambda(n)?;
        let lambda = lambda.unwrap_or(default);
        if lambda < 2 {
            return Err(Error::InvalidParameter(format!(
                "population size must be at least 2, got {lambda}"
            )));
        }
        let nf = n as f64;
        let mu = lambda / 2;

        let raw: Vec<f64> = (1..=mu)
            .map(|i| (mu as f64 + 0.5).ln() - (i as f64).ln())
            .collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

        let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 3.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = 4.0 / (nf + 4.0);
        let mu_cov = mu_eff;
        let c_cov = (1.0 / mu_cov) * 2.0 / (nf + std::f64::consts::SQRT_2).powi(2)
            + (1.0 - 1.0 / mu_cov)
                * ((2.0 * mu_cov - 1.0) / ((nf + 2.0).powi(2) + mu_cov)).min(1.0);
        let c_cov_sep = ((nf + 2.0) / 3.0 * c_cov).min(1.0);
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));

        Ok(Self {
            n,
            lambda,
            mu,
            weights,
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            mu_cov,
            c_cov_sep,
            chi_n,
        })
    }
}

/// One sampled point together with the standardized step that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    /// Position in the sampled population; breaks fitness ties.
    pub index: usize,
    pub vector: Vec<f64>,
    /// `y_k` with `vector = mean + step_size * y_k`, recorded at sampling time.
    pub step: Vec<f64>,
    /// NaN until scored.
    pub fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub mean: Vec<f64>,
    pub step_size: f64,
    pub cov_diag: Vec<f64>,
    pub path_sigma: Vec<f64>,
    pub path_c: Vec<f64>,
    /// Starts at 1 and advances by one per update.
    pub generation: u64,
    rng: ChaCha8Rng,
}

impl OptimizerState {
    pub fn init(n: usize, initial_mean: Vec<f64>, initial_sigma: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension("n must be at least 1".into()));
        }
        if initial_mean.len() != n {
            return Err(Error::InvalidDimension(format!(
                "initial mean has {} entries, expected {n}",
                initial_mean.len()
            )));
        }
        if !(initial_sigma.is_finite() && initial_sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "initial step size must be positive and finite, got {initial_sigma}"
            )));
        }
        if initial_mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "initial mean must be finite".into(),
            ));
        }
        Ok(Self {
            mean: initial_mean,
            step_size: initial_sigma,
            cov_diag: vec![1.0; n],
            path_sigma: vec![0.0; n],
            path_c: vec![0.0; n],
            generation: 1,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn check(&self, params: &StrategyParams) -> Result<()> {
        if params.n != self.dim() {
            return Err(Error::InvalidDimension(format!(
                "strategy is for n = {}, state has n = {}",
                params.n,
                self.dim()
            )));
        }
        let positive = |v: f64| v > 0.0;
        if !positive(self.step_size) || !self.cov_diag.iter().all(|c| positive(*c)) {
            return Err(Error::InvalidParameter(
                "step size and covariance diagonal must be positive".into(),
            ));
        }
        Ok(())
    }

    #[allow(clippy::needless_range_loop)]
    /// Draws λ candidates `x_k = m + σ·y_k`, `y_k ~ N(0, diag(c))`.
    pub fn sample_population(&mut self, params: &StrategyParams) -> Result<Vec<RankedCandidate>> {
        self.check(params)?;
        let n = self.dim();
        let sd: Vec<f64> = self.cov_diag.iter().map(|c| c.sqrt()).collect();
        let mut population = Vec::with_capacity(params.lambda);
        for index in 0..params.lambda {
            let mut step = Vec::with_capacity(n);
            let mut vector = Vec::with_capacity(n);
            for i in 0..n {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                let y = sd[i] * z;
                step.push(y);
                vector.push(self.mean[i] + self.step_size * y);
            }
            population.push(RankedCandidate {
                index,
                vector,
                step,
                fitness: f64::NAN,
            });
        }
        Ok(population)
    }

    #[allow(clippy::needless_range_loop)]
    /// Moves the distribution toward the best μ of a population ranked by
    /// ascending fitness. The state is untouched when the input is rejected.
    pub fn update(&mut self, params: &StrategyParams, ranked: &[RankedCandidate]) -> Result<()> {
        self.check(params)?;
        if ranked.len() != params.lambda {
            return Err(Error::ContractViolation(format!(
                "expected {} ranked candidates, got {}",
                params.lambda,
                ranked.len()
            )));
        }
        if ranked
            .iter()
            .any(|c| c.vector.len() != self.dim() || c.step.len() != self.dim())
        {
            return Err(Error::ContractViolation(
                "candidate dimension mismatch".into(),
            ));
        }
        if !is_ranked(ranked) {
            return Err(Error::ContractViolation(
                "candidates are not sorted by ascending fitness".into(),
            ));
        }

        let n = self.dim();
        let parents = &ranked[..params.mu];

        let mut new_mean = vec![0.0; n];
        let mut y_w = vec![0.0; n];
        let mut rank_mu = vec![0.0; n];
        for (w, cand) in params.weights.iter().zip(parents) {
            for i in 0..n {
                new_mean[i] += w * cand.vector[i];
                y_w[i] += w * cand.step[i];
                rank_mu[i] += w * cand.step[i] * cand.step[i];
            }
        }

        // p_σ ← (1 − c_σ)·p_σ + √(c_σ(2 − c_σ)μ_eff)·C^{-1/2}·y_w
        let cs = params.c_sigma;
        let ps_coef = (cs * (2.0 - cs) * params.mu_eff).sqrt();
        for i in 0..n {
            self.path_sigma[i] =
                (1.0 - cs) * self.path_sigma[i] + ps_coef * y_w[i] / self.cov_diag[i].sqrt();
        }
        let ps_norm = self.path_sigma.iter().map(|v| v * v).sum::<f64>().sqrt();

        // h_σ stalls p_c while p_σ is long, i.e. right after a large step.
        let decay = 1.0 - (1.0 - cs).powf(2.0 * self.generation as f64);
        let h_sigma = ps_norm / decay.sqrt() / params.chi_n < 1.4 + 2.0 / (n as f64 + 1.0);

        // p_c ← (1 − c_c)·p_c + h_σ·√(c_c(2 − c_c)μ_eff)·y_w
        let cc = params.c_c;
        let pc_coef = if h_sigma {
            (cc * (2.0 - cc) * params.mu_eff).sqrt()
        } else {
            0.0
        };
        for i in 0..n {
            self.path_c[i] = (1.0 - cc) * self.path_c[i] + pc_coef * y_w[i];
        }

        // c_i ← (1 − c_cov)·c_i
        //       + (c_cov/μ_cov)·(p_c,i² + (1 − h_σ)·c_c(2 − c_c)·c_i)
        //       + c_cov(1 − 1/μ_cov)·Σ_j w_j·y_j,i²
        let ccov = params.c_cov_sep;
        let mucov = params.mu_cov;
        let stall = if h_sigma { 0.0 } else { cc * (2.0 - cc) };
        for i in 0..n {
            let c = self.cov_diag[i];
            let rank_one = self.path_c[i] * self.path_c[i] + stall * c;
            let updated = (1.0 - ccov) * c
                + ccov / mucov * rank_one
                + ccov * (1.0 - 1.0 / mucov) * rank_mu[i];
            self.cov_diag[i] = updated.max(NUMERICAL_FLOOR);
        }

        // σ ← σ·exp((c_σ/d_σ)·(‖p_σ‖/E‖N(0,I)‖ − 1))
        let sigma = self.step_size * ((cs / params.d_sigma) * (ps_norm / params.chi_n - 1.0)).exp();
        self.step_size = if sigma.is_finite() {
            sigma.max(NUMERICAL_FLOOR)
        } else {
            f64::MAX
        };

        self.mean = new_mean;
        self.generation += 1;
        Ok(())
    }
}

fn fitness_key(f: f64) -> f64 {
    if f.is_nan() {
        f64::INFINITY
    } else {
        f
    }
}

fn is_ranked(ranked: &[RankedCandidate]) -> bool {
    ranked
        .windows(2)
        .all(|w| fitness_key(w[0].fitness) <= fitness_key(w[1].fitness))
}

/// Sorts by ascending fitness; ties keep sampling order. NaN ranks last.
pub fn rank(mut population: Vec<RankedCandidate>) -> Vec<RankedCandidate> {
    population.sort_by(|a, b| {
        fitness_key(a.fitness)
            .total_cmp(&fitness_key(b.fitness))
            .then(a.index.cmp(&b.index))
    });
    population
}

#[derive(Debug, Clone)]
pub struct MinimizeOptions {
    pub lambda: Option<usize>,
    pub max_generations: u64,
    /// Stop as soon as the best-so-far fitness drops below this value.
    pub target: Option<f64>,
    pub eval_mode: EvalMode,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            lambda: None,
            max_generations: 1000,
            target: None,
            eval_mode: EvalMode::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub best_x: Vec<f64>,
    pub best_f: f64,
    /// Best fitness observed in each generation.
    pub generation_best: Vec<f64>,
    /// Best-so-far fitness after each generation.
    pub best_so_far: Vec<f64>,
    pub evaluations: u64,
    pub state: OptimizerState,
    pub params: StrategyParams,
}

impl MinimizeResult {
    pub fn generations(&self) -> usize {
        self.best_so_far.len()
    }
}

/// Runs sep-CMA-ES on a plain objective function.
pub fn minimize<F>(
    objective: F,
    initial_mean: Vec<f64>,
    initial_sigma: f64,
    seed: u64,
    options: &MinimizeOptions,
) -> Result<MinimizeResult>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    let n = initial_mean.len();
    let params = StrategyParams::new(n, options.lambda)?;
    let mut state = OptimizerState::init(n, initial_mean, initial_sigma, seed)?;

    let mut best_x = state.mean.clone();
    let mut best_f = f64::INFINITY;
    let mut generation_best = Vec::new();
    let mut best_so_far = Vec::new();
    let mut evaluations = 0u64;

    for _ in 0..options.max_generations {
        let mut population = state.sample_population(&params)?;
        let scores = map_indexed(&population, options.eval_mode, |_, c| objective(&c.vector));
        for (cand, f) in population.iter_mut().zip(scores) {
            cand.fitness = f;
        }
        evaluations += params.lambda as u64;

        let ranked = rank(population);
        let leader = &ranked[0];
        if fitness_key(leader.fitness) < best_f {
            best_f = leader.fitness;
            best_x = leader.vector.clone();
        }
        generation_best.push(leader.fitness);
        best_so_far.push(best_f);

        state.update(&params, &ranked)?;
        if options.target.is_some_and(|t| best_f < t) {
            break;
        }
    }

    Ok(MinimizeResult {
        best_x,
        best_f,
        generation_best,
        best_so_far,
        evaluations,
        state,
        params,
    })
}
