mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use log::info;
use pretender::data::{make_split, write_canonical, Dataset, ServiceSplit, SplitMode};
use pretender::experiments::{
    convergence_csv, convergence_svg, default_k_list, downstream_csv, load_dataset, run_case_study, run_convergence,
    run_downstream, run_table, run_theory_checks, table_summary_csv, table_users_csv, RunManifest, TheoryOptions,
    UserFilter, DEFAULT_LAMBDA,
};
use pretender::{Metric, RunConfig};

use config::{CommonArgs, Settings};

#[derive(Parser, Debug)]
#[command(name = "pretender", version, about = "Select K labeled items whose distribution mimics a user's history")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load a raw dataset and write it in the canonical CSV layout.
    Ingest {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Distance of the rounded selection and of the continuous relaxation
    /// against K for a few users.
    Convergence {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated user ids.
        #[arg(long)]
        users: Option<String>,
    },
    /// Mean distance of every method across users.
    Table {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long = "max-users")]
        max_users: Option<usize>,
        #[arg(long = "min-up")]
        min_up: Option<usize>,
        #[arg(long = "min-down")]
        min_down: Option<usize>,
    },
    /// Side-by-side listing of one user's history and selection.
    CaseStudy {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        user: Option<String>,
    },
    /// Monte-Carlo checks of the rounding guarantees on synthetic data.
    TheoryCheck {
        #[command(flatten)]
        common: CommonArgs,
        /// Fewer trials and instances.
        #[arg(long)]
        quick: bool,
    },
    /// Trains a logistic model on each selection and scores it on the
    /// source history.
    Downstream {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        users: Option<String>,
        /// Number of consecutive seeds starting at --seed.
        #[arg(long)]
        seeds: Option<u64>,
        #[arg(long)]
        lambda: Option<f64>,
    },
}

/// Default users for the per-user commands on MovieLens. The raw files
/// number users from 1.
const MOVIELENS_USERS: [&str; 2] = ["309", "22"];

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let started = Instant::now();
    match cli.command {
        Command::Ingest { common } => ingest(&Settings::resolve(&common)?),
        Command::Convergence { common, users } => {
            let s = Settings::resolve(&common)?;
            let users = s.option(users, "users")?;
            convergence(&s, users)
        }
        Command::Table { common, max_users, min_up, min_down } => {
            let s = Settings::resolve(&common)?;
            let defaults = UserFilter::default();
            let filter = UserFilter {
                min_up: s.option(min_up, "min-up")?.unwrap_or(defaults.min_up),
                min_down: s.option(min_down, "min-down")?.unwrap_or(defaults.min_down),
                max_users: s.option(max_users, "max-users")?,
            };
            table(&s, &filter)
        }
        Command::CaseStudy { common, user } => {
            let s = Settings::resolve(&common)?;
            let user = s.option(user, "user")?;
            case_study(&s, user)
        }
        Command::TheoryCheck { common, quick } => {
            let s = Settings::resolve(&common)?;
            let quick = quick || s.option::<bool>(None, "quick")?.unwrap_or(false);
            theory_check(&s, quick)
        }
        Command::Downstream { common, users, seeds, lambda } => {
            let s = Settings::resolve(&common)?;
            let users = s.option(users, "users")?;
            let seeds = s.option(seeds, "seeds")?.unwrap_or(1);
            let lambda = s.option(lambda, "lambda")?.unwrap_or(DEFAULT_LAMBDA);
            downstream(&s, users, seeds, lambda)
        }
    }?;
    info!("done in {:.1}s", started.elapsed().as_secs_f64());
    Ok(())
}

fn load(s: &Settings) -> Result<Dataset> {
    let t = Instant::now();
    let dataset = load_dataset(&s.dataset, &s.data_dir, s.run.seed)
        .with_context(|| format!("loading {} from {}", s.dataset, s.data_dir.display()))?;
    info!(
        "loaded {}: {} items, {} users, {} skipped rows ({:.1}s)",
        dataset.name,
        dataset.catalog.len(),
        dataset.users.len(),
        dataset.skipped_rows,
        t.elapsed().as_secs_f64()
    );
    Ok(dataset)
}

fn split_for(dataset: &Dataset, mode: SplitMode, seed: u64) -> Result<ServiceSplit> {
    let split = make_split(dataset.catalog.len(), mode, seed)?;
    info!(
        "{mode} split: {} source items, {} target items, {} shared",
        split.source_items().len(),
        split.target_items().len(),
        split.shared_items().len()
    );
    Ok(split)
}

fn manifest(command: &str, s: &Settings, dataset: &Dataset) -> RunManifest {
    RunManifest::new(command, &dataset.name).run_config(&s.run).checksums(&dataset.checksums)
}

fn out_path(s: &Settings, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(&s.out_dir).with_context(|| format!("creating {}", s.out_dir.display()))?;
    Ok(s.out_dir.join(name))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn user_list(s: &Settings, dataset: &Dataset, users: Option<String>) -> Vec<String> {
    match users {
        Some(list) => list.split(',').map(|u| u.trim().to_string()).collect(),
        None if dataset.name == "movielens" => MOVIELENS_USERS.iter().map(|u| u.to_string()).collect(),
        None => {
            let first = dataset.users.first().map(|u| u.user_id.clone());
            log::warn!("no --users given for {}; using {:?}", s.dataset, first);
            first.into_iter().collect()
        }
    }
}

fn ingest(s: &Settings) -> Result<()> {
    let dataset = load(s)?;
    let path = out_path(s, &format!("{}.csv", dataset.name))?;
    write_canonical(&dataset, &path)?;
    info!("wrote {}", path.display());
    let m = RunManifest::new("ingest", &dataset.name)
        .param("seed", s.run.seed)
        .param("items", dataset.catalog.len())
        .param("users", dataset.users.len())
        .param("feature_dim", dataset.catalog.dim())
        .param("skipped_rows", dataset.skipped_rows)
        .checksums(&dataset.checksums);
    m.write_beside(&path)?;
    Ok(())
}

fn convergence(s: &Settings, users: Option<String>) -> Result<()> {
    let dataset = load(s)?;
    let mode = s.split.unwrap_or(SplitMode::WithIntersection);
    let split = split_for(&dataset, mode, s.run.seed)?;
    let k_list = s.k_list.clone().unwrap_or_else(default_k_list);
    let users = user_list(s, &dataset, users);
    let m = manifest("convergence", s, &dataset)
        .param("K-list", k_list.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(","))
        .param("users", users.join(","))
        .split_seed(mode, split.seed);
    let mut runs = Vec::new();
    for user in &users {
        let t = Instant::now();
        let run = run_convergence(&dataset, &split, user, &k_list, &s.run)?;
        for p in &run.points {
            info!(
                "user {user} K={}: pretender {:.5} continuous {:.5} gap {:.5}",
                p.k,
                p.pretender,
                p.continuous,
                p.gap()
            );
        }
        info!("user {user} finished in {:.1}s", t.elapsed().as_secs_f64());
        let svg = out_path(s, &format!("convergence_{}_{}.svg", dataset.name, user))?;
        write_text(&svg, &convergence_svg(&run, &s.run.metric.to_string().to_uppercase()))?;
        m.write_beside(&svg)?;
        runs.push(run);
    }
    let csv = out_path(s, &format!("convergence_{}.csv", dataset.name))?;
    convergence_csv(&dataset.name, &split, &runs, &m).write(&csv)?;
    m.write_beside(&csv)?;
    info!("wrote {}", csv.display());
    Ok(())
}

fn table(s: &Settings, filter: &UserFilter) -> Result<()> {
    let dataset = load(s)?;
    let mut m = manifest("table", s, &dataset)
        .param("min-up", filter.min_up)
        .param("min-down", filter.min_down)
        .param("max-users", filter.max_users.map_or("all".to_string(), |n| n.to_string()));
    let mut runs = Vec::new();
    for mode in s.splits() {
        let split = split_for(&dataset, mode, s.run.seed)?;
        m = m.split_seed(mode, split.seed);
        let t = Instant::now();
        let run = run_table(&dataset, &split, &s.run, filter)?;
        info!("{mode}: {} users, {} skipped, {:.1}s", run.users.len(), run.skipped_users, t.elapsed().as_secs_f64());
        for v in &run.violations {
            log::error!("{v}");
        }
        runs.push(run);
    }
    let summary = table_summary_csv(&runs, &m, s.run.seed);
    print!("{}", summary.to_csv_string());
    let path = out_path(s, &format!("table_{}.csv", dataset.name))?;
    summary.write(&path)?;
    m.write_beside(&path)?;
    let users_path = out_path(s, &format!("table_{}_users.csv", dataset.name))?;
    table_users_csv(&runs, &m).write(&users_path)?;
    m.write_beside(&users_path)?;
    if runs.iter().any(|r| !r.violations.is_empty()) {
        anyhow::bail!("continuous value exceeded a selection's distance; see log");
    }
    Ok(())
}

fn case_study(s: &Settings, user: Option<String>) -> Result<()> {
    let dataset = load(s)?;
    let mode = s.split.unwrap_or(SplitMode::WithIntersection);
    let split = split_for(&dataset, mode, s.run.seed)?;
    let user = user.unwrap_or_else(|| user_list(s, &dataset, None).remove(0));
    let study = run_case_study(&dataset, &split, &user, &s.run)?;
    let report = study.report();
    print!("{report}");
    let path = out_path(s, &format!("case_study_{}_{}.txt", dataset.name, user))?;
    write_text(&path, &report)?;
    manifest("case-study", s, &dataset).param("user", &user).split_seed(mode, split.seed).write_beside(&path)?;
    Ok(())
}

fn theory_check(s: &Settings, quick: bool) -> Result<()> {
    let opts = if quick { TheoryOptions::quick(s.run.seed) } else { TheoryOptions::full(s.run.seed) };
    let lines = run_theory_checks(&opts)?;
    let mut report = String::new();
    for l in &lines {
        report.push_str(&format!("{l}\n"));
    }
    let failed = lines.iter().filter(|l| !l.passed).count();
    report.push_str(&format!("{} checks, {} failed\n", lines.len(), failed));
    print!("{report}");
    let path = out_path(s, "theory_check.txt")?;
    write_text(&path, &report)?;
    RunManifest::new("theory-check", "synthetic")
        .param("seed", s.run.seed)
        .param("trials", opts.trials)
        .param("rate_instances", opts.rate_instances)
        .param("quick", quick)
        .write_beside(&path)?;
    Ok(())
}

fn downstream(s: &Settings, users: Option<String>, seeds: u64, lambda: f64) -> Result<()> {
    let dataset = load(s)?;
    let mode = s.split.unwrap_or(SplitMode::WithIntersection);
    let split = split_for(&dataset, mode, s.run.seed)?;
    let users = user_list(s, &dataset, users);
    let mut runs = Vec::new();
    for user in &users {
        for offset in 0..seeds {
            let config = RunConfig { seed: s.run.seed + offset, ..s.run.clone() };
            let run = run_downstream(&dataset, &split, user, &config, lambda)?;
            for r in &run.rows {
                info!(
                    "user {user} seed {} {}: source loss {:.4} ({})",
                    config.seed,
                    r.selector.name(),
                    r.source_loss,
                    r.status
                );
            }
            runs.push(run);
        }
    }
    let m = manifest("downstream", s, &dataset)
        .param("users", users.join(","))
        .param("seeds", seeds)
        .param("lambda", lambda)
        .split_seed(mode, split.seed);
    let table = downstream_csv(&dataset.name, &runs, &m);
    let path = out_path(s, &format!("downstream_{}.csv", dataset.name))?;
    table.write(&path)?;
    m.write_beside(&path)?;
    info!("wrote {}", path.display());
    if s.run.metric == Metric::W1 {
        log::warn!("downstream selections used the W1 pipeline");
    }
    Ok(())
}
