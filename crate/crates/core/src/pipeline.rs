//! End-to-end selection: continuous relaxation, then rounding.

use crate::error::Result;
use crate::frank_wolfe::{frank_wolfe, FwTrace};
use crate::kernels::{build_matrices, KernelMatrices, KernelSpec};
use crate::model::{CandidatePool, CappedWeights, Metric, PreferenceSet, RunConfig};
use crate::rounding::{round_repeat_best, MmdSelection, RoundingOutcome, W1Selection};
use crate::transport::{solve_joint_lp_costs, CostMatrix};

#[derive(Clone, Debug)]
pub struct PipelineResult {
    pub weights: CappedWeights,
    /// Distance of the continuous solution. For MMD this is the best
    /// Frank-Wolfe iterate (an upper bound on the relaxation optimum); for
    /// W1 it is the exact LP optimum.
    pub continuous: f64,
    /// Certified lower bound on the relaxation optimum.
    pub continuous_lower: f64,
    pub outcome: RoundingOutcome,
    pub trace: Option<FwTrace>,
}

/// MMD pipeline on precomputed kernel blocks.
pub fn run_mmd(
    mats: &KernelMatrices,
    k: usize,
    iterations: usize,
    repeats: usize,
    seed: u64,
    exclusive: bool,
) -> Result<PipelineResult> {
    let (weights, trace) = frank_wolfe(mats, k, iterations)?;
    let metric = MmdSelection::new(mats);
    let outcome = round_repeat_best(&weights, repeats, &metric, seed, exclusive)?;
    Ok(PipelineResult {
        continuous: trace.best_objective.max(0.0).sqrt(),
        continuous_lower: trace.lower_bound().sqrt(),
        weights,
        outcome,
        trace: Some(trace),
    })
}

/// W1 pipeline: exact joint LP, then rounding under W1. `line` carries the
/// 1-D coordinates of candidates and source when the embedding is scalar.
pub fn run_w1(
    costs: &CostMatrix,
    k: usize,
    repeats: usize,
    seed: u64,
    exclusive: bool,
    line: Option<(Vec<f64>, Vec<f64>)>,
) -> Result<PipelineResult> {
    let joint = solve_joint_lp_costs(costs, k)?;
    let metric = match line {
        Some((cand, src)) => W1Selection::on_line(costs, cand, src),
        None => W1Selection::new(costs),
    };
    let outcome = round_repeat_best(&joint.weights, repeats, &metric, seed, exclusive)?;
    Ok(PipelineResult {
        weights: joint.weights,
        continuous: joint.value,
        continuous_lower: joint.value,
        outcome,
        trace: None,
    })
}

/// Runs the configured pipeline on a pool and a preference set.
pub fn select(pool: &CandidatePool, source: &PreferenceSet, config: &RunConfig) -> Result<PipelineResult> {
    config.validate(pool.len())?;
    match config.metric {
        Metric::Mmd => {
            let mats = build_matrices(pool, source, &KernelSpec::gaussian(config.sigma)?)?;
            run_mmd(&mats, config.k, config.iterations, config.repeats, config.seed, config.exclusive_labels)
        }
        Metric::W1 => {
            let costs = CostMatrix::from_pool(pool, source)?;
            run_w1(&costs, config.k, config.repeats, config.seed, config.exclusive_labels, None)
        }
    }
}
