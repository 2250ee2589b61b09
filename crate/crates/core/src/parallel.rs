//! Population-level data parallelism.
//!
//! With the `parallel` feature (default) candidate evaluations fan out over
//! the rayon pool; without it every mode runs on the calling thread. Results
//! are always returned in input order so the caller's reduction is
//! independent of scheduling.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    Sequential,
    #[default]
    Parallel,
}

impl EvalMode {
    /// Whether this mode actually runs concurrently in the current build.
    pub fn is_concurrent(self) -> bool {
        cfg!(feature = "parallel") && self == EvalMode::Parallel
    }
}

#[cfg(feature = "parallel")]
pub fn map_indexed<T, R, F>(items: &[T], mode: EvalMode, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    match mode {
        EvalMode::Parallel => items.par_iter().enumerate().map(|(i, x)| f(i, x)).collect(),
        EvalMode::Sequential => items.iter().enumerate().map(|(i, x)| f(i, x)).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, R, F>(items: &[T], _mode: EvalMode, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    items.iter().enumerate().map(|(i, x)| f(i, x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved_in_both_modes() {
        let xs: Vec<u64> = (0..1000).collect();
        let seq = map_indexed(&xs, EvalMode::Sequential, |i, x| (i as u64) * 3 + x);
        let par = map_indexed(&xs, EvalMode::Parallel, |i, x| (i as u64) * 3 + x);
        assert_eq!(seq, par);
        assert_eq!(seq[10], 40);
    }
}
