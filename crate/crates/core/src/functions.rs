//! Standard test problems for exercising the optimizer in isolation.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

pub fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Separable ellipsoid Σ 10^(6(i−1)/(n−1))·x_i², condition number 10⁶.
pub fn ellipsoid(x: &[f64]) -> f64 {
    let n = x.len();
    if n == 1 {
        return x[0] * x[0];
    }
    x.iter()
        .enumerate()
        .map(|(i, v)| 10f64.powf(6.0 * i as f64 / (n - 1) as f64) * v * v)
        .sum()
}

pub fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
        .sum()
}

/// Uniform random search over a box, used as a brute-force baseline.
pub fn random_search<F, R>(f: F, lower: f64, upper: f64, n: usize, budget: u64, rng: &mut R) -> f64
where
    F: Fn(&[f64]) -> f64,
    R: rand::Rng,
{
    let mut best = f64::INFINITY;
    let mut x = vec![0.0; n];
    for _ in 0..budget {
        for v in x.iter_mut() {
            *v = rng.random_range(lower..upper);
        }
        best = best.min(f(&x));
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Sphere,
    Ellipsoid,
    Rosenbrock,
}

impl Suite {
    pub fn evaluate(self, x: &[f64]) -> f64 {
        match self {
            Suite::Sphere => sphere(x),
            Suite::Ellipsoid => ellipsoid(x),
            Suite::Rosenbrock => rosenbrock(x),
        }
    }

    /// Precision at which a benchmark run counts as converged.
    pub fn target(self) -> f64 {
        match self {
            Suite::Sphere => 1e-10,
            Suite::Ellipsoid | Suite::Rosenbrock => 1e-8,
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sphere" => Ok(Suite::Sphere),
            "ellipsoid" => Ok(Suite::Ellipsoid),
            "rosenbrock" => Ok(Suite::Rosenbrock),
            other => Err(Error::InvalidParameter(format!("unknown suite '{other}'"))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Sphere => "sphere",
            Suite::Ellipsoid => "ellipsoid",
            Suite::Rosenbrock => "rosenbrock",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert_eq!(sphere(&[1.0, 2.0]), 5.0);
        assert_eq!(ellipsoid(&[1.0, 1.0]), 1.0 + 1e6);
        assert_eq!(rosenbrock(&[1.0; 5]), 0.0);
        assert_eq!(rosenbrock(&[0.0, 0.0]), 1.0);
        assert_eq!("ellipsoid".parse::<Suite>().unwrap(), Suite::Ellipsoid);
        assert!("rastrigin".parse::<Suite>().is_err());
    }
}
