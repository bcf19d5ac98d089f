//! Cell-parallel grid evaluation on a rayon pool.

use perdyn_core::potentials::GridEvaluator;
use perdyn_core::Result;
use rayon::prelude::*;

/// Evaluates cells on a rayon pool. Each cell is computed independently and
/// results are collected in index order, so the output does not depend on
/// the number of workers.
pub struct Rayon {
    pool: rayon::ThreadPool,
}

impl Rayon {
    /// `workers = None` uses one thread per available core.
    pub fn new(workers: Option<usize>) -> std::result::Result<Self, rayon::ThreadPoolBuildError> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(w) = workers {
            b = b.num_threads(w);
        }
        Ok(Self { pool: b.build()? })
    }

    pub fn install<R: Send>(&self, op: impl FnOnce() -> R + Send) -> R {
        self.pool.install(op)
    }
}

impl GridEvaluator for Rayon {
    fn eval(&self, len: usize, f: &(dyn Fn(usize) -> Result<f64> + Sync)) -> Result<Vec<f64>> {
        self.pool.install(|| (0..len).into_par_iter().with_min_len(64).map(f).collect())
    }
}
