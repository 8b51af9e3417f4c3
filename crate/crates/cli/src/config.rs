use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use pretender::data::SplitMode;
use pretender::experiments::DatasetSource;
use pretender::{Metric, RunConfig};

/// Options shared by every subcommand. Anything left unset falls back to
/// the config file, then to the built-in default.
#[derive(Args, Clone, Debug, Default)]
pub struct CommonArgs {
    /// Flat `key = value` file; command-line flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// movielens, lastfm, amazon or a canonical .csv file.
    #[arg(long)]
    pub dataset: Option<String>,
    #[arg(long = "data-dir")]
    pub data_dir: Option<PathBuf>,
    /// mmd or w1.
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long = "K")]
    pub k: Option<usize>,
    /// Comma-separated list of K values.
    #[arg(long = "K-list")]
    pub k_list: Option<String>,
    /// Frank-Wolfe iterations.
    #[arg(long = "L")]
    pub l: Option<usize>,
    /// Rounding repeats.
    #[arg(long = "R")]
    pub r: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Label coordinate scale.
    #[arg(long = "C")]
    pub c: Option<f64>,
    /// intersect or disjoint; both when unset for the table command.
    #[arg(long)]
    pub split: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "exclusive-labels")]
    pub exclusive_labels: bool,
    #[arg(long = "out-dir")]
    pub out_dir: Option<PathBuf>,
}

pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("config line {}: expected key = value, got {raw:?}", n + 1);
        };
        map.insert(key.trim().replace('_', "-"), value.trim().to_string());
    }
    Ok(map)
}

/// Fully resolved settings.
#[derive(Clone, Debug)]
pub struct Settings {
    pub dataset: DatasetSource,
    pub data_dir: PathBuf,
    pub run: RunConfig,
    pub k_list: Option<Vec<usize>>,
    pub split: Option<SplitMode>,
    pub out_dir: PathBuf,
    /// Remaining config-file keys, for subcommand-specific options.
    pub extra: BTreeMap<String, String>,
}

fn parse_list(s: &str) -> Result<Vec<usize>> {
    s.split(',').map(|p| p.trim().parse::<usize>().with_context(|| format!("bad K value {p:?}"))).collect()
}

fn pick<T: std::str::FromStr>(flag: Option<T>, file: &mut BTreeMap<String, String>, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    let from_file = file.remove(key);
    if flag.is_some() {
        return Ok(flag);
    }
    match from_file {
        Some(v) => v.parse::<T>().map(Some).map_err(|e| anyhow::anyhow!("config key {key}: {e}")),
        None => Ok(None),
    }
}

impl Settings {
    pub fn resolve(args: &CommonArgs) -> Result<Self> {
        let mut file = match &args.config {
            Some(p) => parse_config_file(&read(p)?)?,
            None => BTreeMap::new(),
        };
        let defaults = RunConfig::default();
        let dataset: String = pick(args.dataset.clone(), &mut file, "dataset")?.unwrap_or_else(|| "movielens".into());
        let metric: Option<String> = pick(args.metric.clone(), &mut file, "metric")?;
        let split: Option<String> = pick(args.split.clone(), &mut file, "split")?;
        let k_list: Option<String> = pick(args.k_list.clone(), &mut file, "K-list")?;
        let exclusive_file: Option<bool> = pick(None, &mut file, "exclusive-labels")?;
        let run = RunConfig {
            k: pick(args.k, &mut file, "K")?.unwrap_or(defaults.k),
            iterations: pick(args.l, &mut file, "L")?.unwrap_or(defaults.iterations),
            repeats: pick(args.r, &mut file, "R")?.unwrap_or(defaults.repeats),
            seed: pick(args.seed, &mut file, "seed")?.unwrap_or(defaults.seed),
            metric: match metric {
                Some(m) => m.parse::<Metric>()?,
                None => defaults.metric,
            },
            sigma: pick(args.sigma, &mut file, "sigma")?.unwrap_or(defaults.sigma),
            label_scale: pick(args.c, &mut file, "C")?.unwrap_or(defaults.label_scale),
            exclusive_labels: args.exclusive_labels || exclusive_file.unwrap_or(false),
        };
        Ok(Self {
            dataset: dataset.parse()?,
            data_dir: pick(args.data_dir.clone(), &mut file, "data-dir")?.unwrap_or_else(|| PathBuf::from("data")),
            run,
            k_list: k_list.as_deref().map(parse_list).transpose()?,
            split: split.map(|s| s.parse::<SplitMode>()).transpose()?,
            out_dir: pick(args.out_dir.clone(), &mut file, "out-dir")?.unwrap_or_else(|| PathBuf::from("out")),
            extra: file,
        })
    }

    /// A subcommand option: the flag if given, else the config file.
    pub fn option<T: std::str::FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        pick(flag, &mut self.extra.clone(), key)
    }

    pub fn splits(&self) -> Vec<SplitMode> {
        match self.split {
            Some(s) => vec![s],
            None => vec![SplitMode::WithIntersection, SplitMode::NoIntersection],
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading config file {}", path.display()))
}
