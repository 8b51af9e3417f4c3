use std::sync::Arc;

use crate::error::Result;
use crate::kernels::{CandidateGram, KernelMatrices, KernelSpec};
use crate::model::{CandidatePool, Metric, PreferenceSet, RunConfig};
use crate::pipeline::{run_mmd, run_w1, PipelineResult};
use crate::rounding::{SelectionMetric, W1Selection};
use crate::transport::CostMatrix;

/// A target pool prepared once for many users: for MMD the candidate Gram
/// matrix is computed a single time and shared.
pub struct PreparedPool<'a> {
    pub pool: &'a CandidatePool,
    pub config: RunConfig,
    spec: KernelSpec,
    gram: Option<Arc<CandidateGram>>,
}

/// One user's problem on a prepared pool.
pub enum Instance {
    Mmd(KernelMatrices),
    W1(CostMatrix),
}

impl<'a> PreparedPool<'a> {
    pub fn new(pool: &'a CandidatePool, config: &RunConfig) -> Result<Self> {
        let spec = KernelSpec::gaussian(config.sigma)?;
        let gram = match config.metric {
            Metric::Mmd => Some(Arc::new(CandidateGram::new(pool.embeddings(), &spec))),
            Metric::W1 => None,
        };
        Ok(Self { pool, config: config.clone(), spec, gram })
    }

    pub fn instance(&self, source: &PreferenceSet) -> Result<Instance> {
        match &self.gram {
            Some(gram) => Ok(Instance::Mmd(KernelMatrices::with_shared_tt(
                Arc::clone(gram),
                self.pool.embeddings(),
                source.embeddings(),
                &self.spec,
            )?)),
            None => Ok(Instance::W1(CostMatrix::from_pool(self.pool, source)?)),
        }
    }
}

impl Instance {
    /// Continuous relaxation plus best-of-`R` rounding.
    pub fn run(&self, k: usize, config: &RunConfig, seed: u64) -> Result<PipelineResult> {
        match self {
            Instance::Mmd(m) => run_mmd(m, k, config.iterations, config.repeats, seed, config.exclusive_labels),
            Instance::W1(c) => run_w1(c, k, config.repeats, seed, config.exclusive_labels, None),
        }
    }

    /// Distance of the uniform measure on `indices` to the source.
    pub fn distance(&self, indices: &[usize]) -> f64 {
        match self {
            Instance::Mmd(m) => m.selection_mmd_squared(indices).max(0.0).sqrt(),
            Instance::W1(c) => W1Selection::new(c).distance(indices),
        }
    }
}
