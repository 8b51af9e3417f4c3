use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::data::{load_amazon, load_lastfm, load_movielens, read_canonical, AmazonOptions, Dataset};
use crate::error::{Error, Result};

/// Datasets the experiment drivers know how to find.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DatasetSource {
    MovieLens,
    LastFm,
    Amazon,
    /// A file in the canonical CSV layout.
    Canonical(PathBuf),
}

impl fmt::Display for DatasetSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetSource::MovieLens => f.write_str("movielens"),
            DatasetSource::LastFm => f.write_str("lastfm"),
            DatasetSource::Amazon => f.write_str("amazon"),
            DatasetSource::Canonical(p) => write!(f, "{}", p.display()),
        }
    }
}

impl FromStr for DatasetSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "movielens" | "ml-100k" | "ml100k" => Ok(DatasetSource::MovieLens),
            "lastfm" | "last.fm" | "hetrec-lastfm" => Ok(DatasetSource::LastFm),
            "amazon" => Ok(DatasetSource::Amazon),
            _ if s.ends_with(".csv") => Ok(DatasetSource::Canonical(PathBuf::from(s))),
            other => Err(Error::Config(format!(
                "unknown dataset `{other}`; expected movielens, lastfm, amazon or a canonical .csv file"
            ))),
        }
    }
}

fn first_existing(candidates: &[PathBuf], marker: &str) -> Option<PathBuf> {
    candidates.iter().find(|d| d.join(marker).is_file()).cloned()
}

/// Where a dataset lives under `data_dir`. Each loader accepts either the
/// conventional sub-directory or `data_dir` itself.
pub fn dataset_path(source: &DatasetSource, data_dir: &Path) -> Result<PathBuf> {
    let missing = |p: PathBuf| Error::MissingFile(p);
    match source {
        DatasetSource::MovieLens => first_existing(&[data_dir.join("ml-100k"), data_dir.to_path_buf()], "u.data")
            .ok_or_else(|| missing(data_dir.join("ml-100k").join("u.data"))),
        DatasetSource::LastFm => first_existing(
            &[data_dir.join("hetrec2011-lastfm-2k"), data_dir.join("lastfm"), data_dir.to_path_buf()],
            "user_artists.dat",
        )
        .ok_or_else(|| missing(data_dir.join("hetrec2011-lastfm-2k").join("user_artists.dat"))),
        DatasetSource::Amazon => {
            let names = ["amazon/reviews.json", "amazon/reviews.jsonl", "amazon.json", "amazon.jsonl"];
            names.iter().map(|n| data_dir.join(n)).find(|p| p.is_file()).ok_or_else(|| missing(data_dir.join(names[0])))
        }
        DatasetSource::Canonical(p) => {
            if p.is_absolute() || p.is_file() {
                Ok(p.clone())
            } else {
                Ok(data_dir.join(p))
            }
        }
    }
}

/// Loads a dataset. `seed` drives Last.fm negative sampling.
pub fn load_dataset(source: &DatasetSource, data_dir: &Path, seed: u64) -> Result<Dataset> {
    let path = dataset_path(source, data_dir)?;
    match source {
        DatasetSource::MovieLens => load_movielens(&path),
        DatasetSource::LastFm => load_lastfm(&path, seed),
        DatasetSource::Amazon => load_amazon(&path, &AmazonOptions::default()),
        DatasetSource::Canonical(_) => read_canonical(&path),
    }
}
