use crate::data::{Dataset, ServiceSplit};
use crate::error::{Error, Result};
use crate::model::{Label, RunConfig};

use super::manifest::{derive_seed, RunManifest};
use super::output::{fmt_f64, svg_line_plot, CsvTable, Series};
use super::runner::PreparedPool;

/// `1, 2, 4, ..., 128`.
pub fn default_k_list() -> Vec<usize> {
    (0..8).map(|e| 1usize << e).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergencePoint {
    pub k: usize,
    /// Continuous relaxation value (the lower bracket of the combinatorial
    /// optimum): best Frank-Wolfe iterate for MMD, LP optimum for W1.
    pub continuous: f64,
    /// Certified lower bound from the Frank-Wolfe duality gap.
    pub continuous_lower: f64,
    /// Best-of-R rounded selection (the upper bracket).
    pub pretender: f64,
    pub seed: u64,
}

impl ConvergencePoint {
    pub fn gap(&self) -> f64 {
        self.pretender - self.continuous
    }
}

#[derive(Clone, Debug)]
pub struct ConvergenceRun {
    pub user_id: String,
    pub source_up: usize,
    pub source_down: usize,
    pub points: Vec<ConvergencePoint>,
}

impl ConvergenceRun {
    /// `K` at which the continuous value is smallest (first on ties).
    pub fn continuous_argmin(&self) -> usize {
        argmin(&self.points, |p| p.continuous)
    }

    /// `K` at which the rounded selection is best (first on ties).
    pub fn pretender_argmin(&self) -> usize {
        argmin(&self.points, |p| p.pretender)
    }
}

fn argmin(points: &[ConvergencePoint], f: impl Fn(&ConvergencePoint) -> f64) -> usize {
    points
        .iter()
        .fold(None::<&ConvergencePoint>, |best, p| match best {
            Some(b) if f(b) <= f(p) => Some(b),
            _ => Some(p),
        })
        .map_or(0, |p| p.k)
}

/// Runs the pipeline for one user at every `K` in `k_list`. The candidate
/// Gram matrix is shared by all values of `K`.
pub fn run_convergence(
    dataset: &Dataset,
    split: &ServiceSplit,
    user_id: &str,
    k_list: &[usize],
    config: &RunConfig,
) -> Result<ConvergenceRun> {
    let user = dataset.user(user_id)?;
    let source = dataset.source_preferences(user, split, config.label_scale)?;
    let pool = dataset.target_pool(split, config.label_scale)?;
    let prepared = PreparedPool::new(&pool, config)?;
    let instance = prepared.instance(&source)?;
    let mut points = Vec::with_capacity(k_list.len());
    for &k in k_list {
        let limit = if config.exclusive_labels { pool.num_items() } else { pool.len() };
        if k == 0 || k > limit {
            return Err(Error::InvalidK { k, candidates: limit });
        }
        let seed = derive_seed(config.seed, &["convergence", &dataset.name, user_id, &k.to_string()]);
        let result = instance.run(k, config, seed)?;
        points.push(ConvergencePoint {
            k,
            continuous: result.continuous,
            continuous_lower: result.continuous_lower,
            pretender: result.outcome.distance,
            seed,
        });
    }
    Ok(ConvergenceRun {
        user_id: user_id.to_string(),
        source_up: source.count_label(Label::Up),
        source_down: source.count_label(Label::Down),
        points,
    })
}

pub fn convergence_csv(
    dataset: &str,
    split: &ServiceSplit,
    runs: &[ConvergenceRun],
    manifest: &RunManifest,
) -> CsvTable {
    let hash = manifest.config_hash();
    let mut t = CsvTable::new([
        "dataset",
        "split",
        "user",
        "K",
        "continuous",
        "continuous_lower",
        "pretender",
        "gap",
        "seed",
        "config_hash",
    ]);
    for run in runs {
        for p in &run.points {
            t.push(vec![
                dataset.to_string(),
                split.mode.to_string(),
                run.user_id.clone(),
                p.k.to_string(),
                fmt_f64(p.continuous),
                fmt_f64(p.continuous_lower),
                fmt_f64(p.pretender),
                fmt_f64(p.gap()),
                p.seed.to_string(),
                hash.clone(),
            ]);
        }
    }
    t
}

/// Distance against `K` on a log axis: the rounded selection above, the
/// continuous relaxation below.
pub fn convergence_svg(run: &ConvergenceRun, metric_name: &str) -> String {
    let series = [
        Series {
            name: "Pretender".into(),
            color: "#005aff".into(),
            points: run.points.iter().map(|p| (p.k as f64, p.pretender)).collect(),
        },
        Series {
            name: "continuous".into(),
            color: "#ff4b00".into(),
            points: run.points.iter().map(|p| (p.k as f64, p.continuous)).collect(),
        },
    ];
    svg_line_plot(&format!("user {}", run.user_id), "K", metric_name, &series, true)
}
