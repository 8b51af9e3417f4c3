use crate::baselines::{greedy_nearest, random_select};
use crate::data::{Dataset, ServiceSplit, UserHistory};
use crate::error::Result;
use crate::model::{Label, RunConfig};

use super::manifest::{derive_seed, RunManifest};
use super::output::{fmt_f64, CsvTable};
use super::runner::PreparedPool;

/// Which users enter the comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UserFilter {
    /// Minimum thumbs-up among the user's source-service ratings.
    pub min_up: usize,
    pub min_down: usize,
    /// Keep only the first this-many eligible users, in id order.
    pub max_users: Option<usize>,
}

impl Default for UserFilter {
    fn default() -> Self {
        Self { min_up: 2, min_down: 2, max_users: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UserScores {
    pub user_id: String,
    pub source_size: usize,
    pub continuous: f64,
    pub pretender: f64,
    pub greedy: f64,
    pub random: f64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Continuous,
    Pretender,
    Greedy,
    Random,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Continuous, Method::Pretender, Method::Greedy, Method::Random];

    pub fn name(self) -> &'static str {
        match self {
            Method::Continuous => "continuous",
            Method::Pretender => "pretender",
            Method::Greedy => "greedy",
            Method::Random => "random",
        }
    }

    fn score(self, s: &UserScores) -> f64 {
        match self {
            Method::Continuous => s.continuous,
            Method::Pretender => s.pretender,
            Method::Greedy => s.greedy,
            Method::Random => s.random,
        }
    }
}

/// Mean and sample standard deviation across users.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

#[derive(Clone, Debug)]
pub struct TableRun {
    pub dataset: String,
    pub split: ServiceSplit,
    pub k: usize,
    pub users: Vec<UserScores>,
    /// Users that failed the filter or had too few target candidates.
    pub skipped_users: usize,
    /// Users whose continuous value exceeded a selection's distance.
    pub violations: Vec<String>,
}

impl TableRun {
    pub fn summary(&self, method: Method) -> Summary {
        let xs: Vec<f64> = self.users.iter().map(|u| method.score(u)).collect();
        let n = xs.len();
        if n == 0 {
            return Summary { mean: f64::NAN, std: f64::NAN, count: 0 };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std =
            if n > 1 { (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() } else { 0.0 };
        Summary { mean, std, count: n }
    }
}

/// Compares the pipeline, its continuous relaxation and both baselines for
/// every eligible user of one dataset and split.
///
/// Users are spread over the available cores. Every user's seeds are
/// derived from the configuration, so the result does not depend on the
/// thread count.
pub fn run_table(dataset: &Dataset, split: &ServiceSplit, config: &RunConfig, filter: &UserFilter) -> Result<TableRun> {
    let pool = dataset.target_pool(split, config.label_scale)?;
    let prepared = PreparedPool::new(&pool, config)?;
    let limit = if config.exclusive_labels { pool.num_items() } else { pool.len() };
    let split_name = split.mode.to_string();
    let mut eligible = Vec::new();
    let mut skipped = 0;
    for user in &dataset.users {
        if filter.max_users.is_some_and(|m| eligible.len() >= m) {
            break;
        }
        let ratings = dataset.source_ratings(user, split);
        let up = ratings.iter().filter(|r| r.label == Label::Up).count();
        if up < filter.min_up || ratings.len() - up < filter.min_down || config.k > limit {
            skipped += 1;
            continue;
        }
        eligible.push(user);
    }

    let score = |user: &UserHistory| -> Result<UserScores> {
        let source = dataset.source_preferences(user, split, config.label_scale)?;
        let instance = prepared.instance(&source)?;
        let seed = derive_seed(config.seed, &["table", &dataset.name, &split_name, &user.user_id]);
        let result = instance.run(config.k, config, seed)?;
        let greedy = greedy_nearest(&pool, &source, config.k, config.exclusive_labels)?;
        let random_seed = derive_seed(config.seed, &["random", &dataset.name, &split_name, &user.user_id]);
        let random = random_select(pool.len(), config.k, random_seed, config.exclusive_labels)?;
        Ok(UserScores {
            user_id: user.user_id.clone(),
            source_size: source.len(),
            continuous: result.continuous,
            pretender: result.outcome.distance,
            greedy: instance.distance(greedy.indices()),
            random: instance.distance(random.indices()),
            seed,
        })
    };
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(eligible.len().max(1));
    let chunk = eligible.len().div_ceil(threads).max(1);
    let users: Vec<UserScores> = std::thread::scope(|scope| {
        let handles: Vec<_> = eligible
            .chunks(chunk)
            .map(|part| scope.spawn(|| part.iter().map(|u| score(u)).collect::<Result<Vec<_>>>()))
            .collect();
        handles.into_iter().map(|h| h.join().expect("table worker panicked")).collect::<Result<Vec<_>>>()
    })?
    .into_iter()
    .flatten()
    .collect();

    let mut violations = Vec::new();
    for scores in &users {
        for m in [Method::Pretender, Method::Greedy, Method::Random] {
            if scores.continuous > m.score(scores) {
                violations.push(format!(
                    "user {}: continuous {} exceeds {} {}",
                    scores.user_id,
                    scores.continuous,
                    m.name(),
                    m.score(scores)
                ));
            }
        }
    }
    Ok(TableRun {
        dataset: dataset.name.clone(),
        split: split.clone(),
        k: config.k,
        users,
        skipped_users: skipped,
        violations,
    })
}

/// One row per method with mean and standard deviation across users.
pub fn table_summary_csv(runs: &[TableRun], manifest: &RunManifest, seed: u64) -> CsvTable {
    let hash = manifest.config_hash();
    let mut t = CsvTable::new(["dataset", "split", "K", "method", "mean", "std", "users", "seed", "config_hash"]);
    for run in runs {
        for m in Method::ALL {
            let s = run.summary(m);
            t.push(vec![
                run.dataset.clone(),
                run.split.mode.to_string(),
                run.k.to_string(),
                m.name().to_string(),
                fmt_f64(s.mean),
                fmt_f64(s.std),
                s.count.to_string(),
                seed.to_string(),
                hash.clone(),
            ]);
        }
    }
    t
}

/// Per-user scores.
pub fn table_users_csv(runs: &[TableRun], manifest: &RunManifest) -> CsvTable {
    let hash = manifest.config_hash();
    let mut t = CsvTable::new([
        "dataset",
        "split",
        "K",
        "user",
        "source_size",
        "continuous",
        "pretender",
        "greedy",
        "random",
        "seed",
        "config_hash",
    ]);
    for run in runs {
        for u in &run.users {
            t.push(vec![
                run.dataset.clone(),
                run.split.mode.to_string(),
                run.k.to_string(),
                u.user_id.clone(),
                u.source_size.to_string(),
                fmt_f64(u.continuous),
                fmt_f64(u.pretender),
                fmt_f64(u.greedy),
                fmt_f64(u.random),
                u.seed.to_string(),
                hash.clone(),
            ]);
        }
    }
    t
}
