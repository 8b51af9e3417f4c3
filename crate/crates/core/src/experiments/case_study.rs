use std::collections::HashSet;
use std::fmt::Write as _;

use crate::data::{Dataset, ServiceSplit};
use crate::error::Result;
use crate::model::{CandidatePool, Label, RunConfig};

use super::manifest::derive_seed;
use super::runner::PreparedPool;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseEntry {
    pub item_id: String,
    pub title: String,
    pub label: Label,
    /// The same item with the same label is on both lists.
    pub exact_copy: bool,
    /// The item is offered by both services.
    pub shared: bool,
}

#[derive(Clone, Debug)]
pub struct CaseStudy {
    pub user_id: String,
    pub k: usize,
    pub source: Vec<CaseEntry>,
    pub selected: Vec<CaseEntry>,
    pub distance: f64,
    pub continuous: f64,
    pub seed: u64,
}

impl CaseStudy {
    pub fn exact_copies(&self) -> impl Iterator<Item = &CaseEntry> {
        self.selected.iter().filter(|e| e.exact_copy)
    }

    /// Source thumbs-up items that the target service also offers.
    pub fn shared_positives(&self) -> usize {
        self.source.iter().filter(|e| e.shared && e.label == Label::Up).count()
    }

    pub fn report(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "user {}  K = {}  seed = {}", self.user_id, self.k, self.seed);
        let _ = writeln!(out, "distance {}  continuous {}", self.distance, self.continuous);
        let _ = writeln!(out, "items marked * are exact copies (same item, same label, in both services)");
        for (heading, entries) in [("source", &self.source), ("selected", &self.selected)] {
            for label in [Label::Up, Label::Down] {
                let name = if label.is_up() { "thumbs-up" } else { "thumbs-down" };
                let list: Vec<&CaseEntry> = entries.iter().filter(|e| e.label == label).collect();
                let _ = writeln!(out, "\n{heading} {name} ({}):", list.len());
                for e in list {
                    let mark = if e.exact_copy { "*" } else { " " };
                    let _ = writeln!(out, " {mark} {}  [{}]", e.title, e.item_id);
                }
            }
        }
        out
    }
}

/// Selects `K` target items for one user and lines them up against the
/// user's source history.
pub fn run_case_study(dataset: &Dataset, split: &ServiceSplit, user_id: &str, config: &RunConfig) -> Result<CaseStudy> {
    let user = dataset.user(user_id)?;
    let source = dataset.source_preferences(user, split, config.label_scale)?;
    let pool = dataset.target_pool(split, config.label_scale)?;
    let target_items = dataset.target_items(split);
    let prepared = PreparedPool::new(&pool, config)?;
    let instance = prepared.instance(&source)?;
    let seed = derive_seed(config.seed, &["case-study", &dataset.name, user_id]);
    let result = instance.run(config.k, config, seed)?;

    let source_ratings = dataset.source_ratings(user, split);
    let picked: HashSet<(usize, Label)> = result
        .outcome
        .selection
        .indices()
        .iter()
        .map(|&j| (target_items[CandidatePool::item_index(j)], pool.candidate(j).label))
        .collect();
    let rated: HashSet<(usize, Label)> = source_ratings.iter().map(|r| (r.item, r.label)).collect();
    let entry = |item: usize, label: Label, copy: bool| CaseEntry {
        item_id: dataset.catalog.item_ids[item].clone(),
        title: dataset.catalog.titles[item].clone(),
        label,
        exact_copy: copy,
        shared: split.in_source[item] && split.in_target[item],
    };
    let source_entries =
        source_ratings.iter().map(|r| entry(r.item, r.label, picked.contains(&(r.item, r.label)))).collect();
    let selected = result
        .outcome
        .selection
        .indices()
        .iter()
        .map(|&j| {
            let item = target_items[CandidatePool::item_index(j)];
            let label = pool.candidate(j).label;
            entry(item, label, rated.contains(&(item, label)))
        })
        .collect();
    Ok(CaseStudy {
        user_id: user_id.to_string(),
        k: config.k,
        source: source_entries,
        selected,
        distance: result.outcome.distance,
        continuous: result.continuous,
        seed,
    })
}
