//! Dataset ingestion: native MovieLens-100K, HetRec Last.fm and
//! Amazon-review loaders, PCA, service splits, and a canonical columnar
//! format that makes the rest of the pipeline dataset-agnostic.

mod amazon;
mod canonical;
mod lastfm;
mod movielens;
mod pca;
mod split;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

pub use amazon::{load_amazon, tokenize, vocabulary, AmazonOptions, DEFAULT_VOCABULARY};
pub use canonical::{read_canonical, write_canonical};
pub use lastfm::{load_lastfm, load_lastfm_with};
pub use movielens::{load_movielens, year_bin, GENRES, YEAR_BINS};
pub use pca::{apply_pca, fit_pca, PcaModel, RawFeatures, DEFAULT_COMPONENTS};
pub use split::{make_split, ServiceSplit, SplitMode};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{CandidatePool, Label, LabeledPoint, PreferenceSet};

/// Items with dense features.
#[derive(Clone, Debug)]
pub struct Catalog {
    pub item_ids: Vec<String>,
    pub titles: Vec<String>,
    pub features: Matrix,
}

impl Catalog {
    pub fn len(&self) -> usize {
        self.item_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.item_ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn index_of(&self, item_id: &str) -> Option<usize> {
        self.item_ids.iter().position(|i| i == item_id)
    }
}

/// One labeled interaction; `item` indexes the catalog.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rating {
    pub item: usize,
    pub label: Label,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UserHistory {
    pub user_id: String,
    pub ratings: Vec<Rating>,
}

impl UserHistory {
    pub fn count(&self, label: Label) -> usize {
        self.ratings.iter().filter(|r| r.label == label).count()
    }
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub name: String,
    pub catalog: Catalog,
    /// Users in ascending id order (numeric when ids are numeric).
    pub users: Vec<UserHistory>,
    /// SHA-256 of every input file, keyed by file name.
    pub checksums: BTreeMap<String, String>,
    /// Malformed input rows that were skipped.
    pub skipped_rows: usize,
}

impl Dataset {
    pub fn user(&self, user_id: &str) -> Result<&UserHistory> {
        self.users.iter().find(|u| u.user_id == user_id).ok_or_else(|| Error::UnknownUser(user_id.to_string()))
    }

    /// Doubled candidate pool over the target service's items.
    pub fn target_pool(&self, split: &ServiceSplit, label_scale: f64) -> Result<CandidatePool> {
        let items = (0..self.catalog.len())
            .filter(|&i| split.in_target[i])
            .map(|i| (self.catalog.item_ids[i].clone(), self.catalog.features.row(i).to_vec()))
            .collect();
        CandidatePool::build(items, label_scale)
    }

    /// Catalog indices of the target pool's items, in pool order.
    pub fn target_items(&self, split: &ServiceSplit) -> Vec<usize> {
        (0..self.catalog.len()).filter(|&i| split.in_target[i]).collect()
    }

    /// The user's ratings restricted to the source service.
    pub fn source_ratings(&self, user: &UserHistory, split: &ServiceSplit) -> Vec<Rating> {
        user.ratings.iter().copied().filter(|r| split.in_source[r.item]).collect()
    }

    /// `D_u ∩ D_S` as a preference set.
    pub fn source_preferences(
        &self,
        user: &UserHistory,
        split: &ServiceSplit,
        label_scale: f64,
    ) -> Result<PreferenceSet> {
        let points = self
            .source_ratings(user, split)
            .into_iter()
            .map(|r| {
                LabeledPoint::new(
                    self.catalog.item_ids[r.item].clone(),
                    self.catalog.features.row(r.item).to_vec(),
                    r.label,
                    label_scale,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        if points.is_empty() {
            return Err(Error::Empty("source preferences for this user"));
        }
        PreferenceSet::new(points)
    }
}

pub(crate) fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|_| Error::MissingFile(path.to_path_buf()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub(crate) fn require(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::MissingFile(path.to_path_buf()))
    }
}

/// Sorts numerically when every id parses as an integer.
pub(crate) fn sort_user_ids(ids: &mut [String]) {
    if ids.iter().all(|s| s.parse::<u64>().is_ok()) {
        ids.sort_by_key(|s| s.parse::<u64>().unwrap());
    } else {
        ids.sort();
    }
}

/// Groups `(user, item, label)` triples into histories, keeping the first
/// rating of a repeated (user, item) pair.
pub(crate) fn group_users(triples: Vec<(String, usize, Label)>) -> Vec<UserHistory> {
    let mut by_user: BTreeMap<String, Vec<Rating>> = BTreeMap::new();
    for (u, item, label) in triples {
        let entry = by_user.entry(u).or_default();
        if !entry.iter().any(|r| r.item == item) {
            entry.push(Rating { item, label });
        }
    }
    let mut ids: Vec<String> = by_user.keys().cloned().collect();
    sort_user_ids(&mut ids);
    ids.into_iter()
        .map(|id| {
            let ratings = by_user.remove(&id).unwrap_or_default();
            UserHistory { user_id: id, ratings }
        })
        .collect()
}
