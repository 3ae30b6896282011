use nightcast_core::ga::{BatchEvaluator, Evaluation};
use nightcast_core::FitnessContext;
use rayon::prelude::*;

/// Scores a batch on a rayon pool. Results keep the input order, so runs
/// are identical to sequential ones.
pub struct Parallel {
    pool: rayon::ThreadPool,
}

impl Parallel {
    /// `threads = 0` uses rayon's default thread count.
    pub fn new(threads: usize) -> Self {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool");
        Self { pool }
    }
}

impl BatchEvaluator for Parallel {
    fn evaluate_batch(&self, ctx: &FitnessContext, batch: &[&[u32]]) -> Vec<Evaluation> {
        self.pool
            .install(|| batch.par_iter().map(|g| ctx.evaluate(g)).collect())
    }
}
