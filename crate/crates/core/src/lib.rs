//! Preference transfer by distribution matching.
//!
//! Given a user's labeled history on a source service and the catalog of a
//! target service, pick exactly `K` labeled target items whose uniform
//! empirical distribution is close to the source preferences, measured by
//! MMD or the 1-Wasserstein distance.
//!
//! The pipeline has four stages:
//!
//! 1. [`CandidatePool::build`] doubles every target item into a thumbs-up
//!    and a thumbs-down candidate.
//! 2. The continuous relaxation over the capped simplex
//!    `{w : Σ w = 1, 0 ≤ w ≤ 1/K}` is solved: by [`frank_wolfe`] for MMD,
//!    exactly by [`transport::solve_joint_lp`] for W1.
//! 3. [`rounding::bernoulli_round`] keeps candidate `j` with probability
//!    `K w_j`.
//! 4. [`rounding::greedy_repair`] inserts or removes candidates until
//!    exactly `K` remain; the best of `R` rounds is kept.
//!
//! ```
//! use pretender::{select, CandidatePool, Label, PreferenceSet, RunConfig};
//!
//! let pool = CandidatePool::build(
//!     vec![("a".into(), vec![0.0]), ("b".into(), vec![1.0]), ("c".into(), vec![4.0])],
//!     10.0,
//! )?;
//! let source = PreferenceSet::from_raw([("x", vec![0.1], Label::Up), ("y", vec![3.9], Label::Down)], 10.0)?;
//! let config = RunConfig { k: 2, iterations: 200, repeats: 10, ..Default::default() };
//! let result = select(&pool, &source, &config)?;
//! assert_eq!(result.outcome.selection.len(), 2);
//! assert!(result.continuous <= result.outcome.distance + 1e-12);
//! # Ok::<(), pretender::Error>(())
//! ```

pub mod baselines;
pub mod data;
mod error;
pub mod experiments;
pub mod frank_wolfe;
pub mod kernels;
pub mod linalg;
pub mod model;
pub mod pipeline;
pub mod rounding;
pub mod synthetic;
pub mod transport;

pub use error::{Error, Result};
pub use frank_wolfe::{continuous_opt_value, frank_wolfe, lmo_capped_simplex, FwTrace};
pub use kernels::{
    build_matrices, gauss_kernel, mmd, mmd_gradient, mmd_squared, CandidateGram, KernelMatrices, KernelSpec,
};
pub use linalg::Matrix;
pub use model::{
    uniform_capped_weights, CandidatePool, CappedWeights, Label, LabeledPoint, Metric, PreferenceSet, RunConfig,
    Selection,
};
pub use pipeline::{run_mmd, run_w1, select, PipelineResult};

/// Crate version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
