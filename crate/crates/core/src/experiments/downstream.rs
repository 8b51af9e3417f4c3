//! Does a classifier trained on the selected items predict the source
//! labels? A small L2-regularized logistic regression is fitted on each
//! selection and scored by mean log-loss on the user's source ratings.

use nalgebra::{DMatrix, DVector};

use crate::baselines::{greedy_nearest, random_select};
use crate::data::{Dataset, ServiceSplit};
use crate::error::{Error, Result};
use crate::model::{CandidatePool, Label, RunConfig};

use super::manifest::{derive_seed, RunManifest};
use super::output::{fmt_f64, CsvTable};
use super::runner::PreparedPool;

#[derive(Clone, Debug, PartialEq)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl LogisticModel {
    pub fn logit(&self, x: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(x).map(|(w, x)| w * x).sum::<f64>()
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }

    /// Mean negative log-likelihood of `labels`.
    pub fn log_loss(&self, xs: &[&[f64]], labels: &[bool]) -> f64 {
        let total: f64 = xs
            .iter()
            .zip(labels)
            .map(|(x, &y)| {
                let z = self.logit(x);
                if y {
                    softplus(-z)
                } else {
                    softplus(z)
                }
            })
            .sum();
        total / xs.len() as f64
    }
}

/// Minimizes `mean log-loss + λ/2 ‖w‖²` by Newton's method. The bias is
/// not penalized.
pub fn fit_logistic(xs: &[&[f64]], labels: &[bool], lambda: f64) -> Result<LogisticModel> {
    if xs.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let n = xs.len();
    let d = xs[0].len();
    let p = d + 1;
    let mut theta = DVector::<f64>::zeros(p);
    let feature = |i: usize, c: usize| if c == d { 1.0 } else { xs[i][c] };
    for _ in 0..100 {
        let mut grad = DVector::<f64>::zeros(p);
        let mut hess = DMatrix::<f64>::zeros(p, p);
        for (i, &label) in labels.iter().enumerate() {
            let z: f64 = (0..p).map(|c| theta[c] * feature(i, c)).sum();
            let mu = sigmoid(z);
            let y = if label { 1.0 } else { 0.0 };
            let s = mu * (1.0 - mu);
            for a in 0..p {
                let fa = feature(i, a);
                grad[a] += (mu - y) * fa;
                for b in a..p {
                    hess[(a, b)] += s * fa * feature(i, b);
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                hess[(a, b)] = hess[(b, a)];
            }
        }
        grad /= n as f64;
        hess /= n as f64;
        for c in 0..d {
            grad[c] += lambda * theta[c];
            hess[(c, c)] += lambda;
        }
        hess[(d, d)] += 1e-12;
        let step = hess
            .cholesky()
            .ok_or_else(|| Error::InfeasibleWeights("logistic Hessian is not positive definite".into()))?
            .solve(&grad);
        theta -= &step;
        if step.amax() < 1e-10 {
            break;
        }
    }
    Ok(LogisticModel { weights: theta.rows(0, d).iter().copied().collect(), bias: theta[d] })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Selector {
    /// Trained on the source ratings themselves.
    Source,
    Pretender,
    Greedy,
    Random,
}

impl Selector {
    pub const ALL: [Selector; 4] = [Selector::Source, Selector::Pretender, Selector::Greedy, Selector::Random];

    pub fn name(self) -> &'static str {
        match self {
            Selector::Source => "source",
            Selector::Pretender => "pretender",
            Selector::Greedy => "greedy",
            Selector::Random => "random",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DownstreamRow {
    pub selector: Selector,
    pub seed: u64,
    pub source_loss: f64,
    pub train_loss: f64,
    /// `"ok"`, or `"single-class"` when every training label is the same.
    /// Single-class selections are not trained and their losses are NaN.
    pub status: &'static str,
}

#[derive(Clone, Debug)]
pub struct DownstreamRun {
    pub user_id: String,
    pub k: usize,
    pub lambda: f64,
    pub rows: Vec<DownstreamRow>,
}

pub const DEFAULT_LAMBDA: f64 = 1e-2;

/// Trains one classifier per selector and scores it on the user's source
/// ratings.
pub fn run_downstream(
    dataset: &Dataset,
    split: &ServiceSplit,
    user_id: &str,
    config: &RunConfig,
    lambda: f64,
) -> Result<DownstreamRun> {
    let user = dataset.user(user_id)?;
    let source = dataset.source_preferences(user, split, config.label_scale)?;
    let ratings = dataset.source_ratings(user, split);
    let pool = dataset.target_pool(split, config.label_scale)?;
    let target_items = dataset.target_items(split);
    let features = &dataset.catalog.features;

    let eval_x: Vec<&[f64]> = ratings.iter().map(|r| features.row(r.item)).collect();
    let eval_y: Vec<bool> = ratings.iter().map(|r| r.label == Label::Up).collect();

    let prepared = PreparedPool::new(&pool, config)?;
    let instance = prepared.instance(&source)?;
    let base = derive_seed(config.seed, &["downstream", &dataset.name, user_id]);
    let pretender = instance.run(config.k, config, base)?.outcome.selection;
    let greedy = greedy_nearest(&pool, &source, config.k, config.exclusive_labels)?;
    let random_seed = derive_seed(config.seed, &["downstream-random", &dataset.name, user_id]);
    let random = random_select(pool.len(), config.k, random_seed, config.exclusive_labels)?;

    let selected = |indices: &[usize]| -> (Vec<&[f64]>, Vec<bool>) {
        indices
            .iter()
            .map(|&j| {
                let item = target_items[CandidatePool::item_index(j)];
                (features.row(item), pool.candidate(j).label.is_up())
            })
            .unzip()
    };

    let mut rows = Vec::new();
    for selector in Selector::ALL {
        let (train_x, train_y, seed) = match selector {
            Selector::Source => (eval_x.clone(), eval_y.clone(), config.seed),
            Selector::Pretender => {
                let (x, y) = selected(pretender.indices());
                (x, y, base)
            }
            Selector::Greedy => {
                let (x, y) = selected(greedy.indices());
                (x, y, config.seed)
            }
            Selector::Random => {
                let (x, y) = selected(random.indices());
                (x, y, random_seed)
            }
        };
        let single = train_y.iter().all(|&y| y) || train_y.iter().all(|&y| !y);
        if single {
            rows.push(DownstreamRow {
                selector,
                seed,
                source_loss: f64::NAN,
                train_loss: f64::NAN,
                status: "single-class",
            });
            continue;
        }
        let model = fit_logistic(&train_x, &train_y, lambda)?;
        rows.push(DownstreamRow {
            selector,
            seed,
            source_loss: model.log_loss(&eval_x, &eval_y),
            train_loss: model.log_loss(&train_x, &train_y),
            status: "ok",
        });
    }
    Ok(DownstreamRun { user_id: user_id.to_string(), k: config.k, lambda, rows })
}

pub fn downstream_csv(dataset: &str, runs: &[DownstreamRun], manifest: &RunManifest) -> CsvTable {
    let hash = manifest.config_hash();
    let mut t = CsvTable::new([
        "dataset",
        "user",
        "K",
        "selector",
        "seed",
        "source_loss",
        "train_loss",
        "status",
        "config_hash",
    ]);
    for run in runs {
        for r in &run.rows {
            t.push(vec![
                dataset.to_string(),
                run.user_id.clone(),
                run.k.to_string(),
                r.selector.name().to_string(),
                r.seed.to_string(),
                fmt_f64(r.source_loss),
                fmt_f64(r.train_loss),
                r.status.to_string(),
                hash.clone(),
            ]);
        }
    }
    t
}
