use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::kernels::KERNEL_CONVENTION;
use crate::model::RunConfig;

/// Everything that determines an artifact's bytes. Two runs with equal
/// manifests write identical files.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub dataset: String,
    /// Run parameters, rendered as strings.
    pub params: BTreeMap<String, String>,
    /// SHA-256 of each input file.
    pub checksums: BTreeMap<String, String>,
    /// Effective split seed per split mode.
    pub split_seeds: BTreeMap<String, u64>,
    pub kernel_convention: String,
    pub version: String,
}

impl RunManifest {
    pub fn new(command: &str, dataset: &str) -> Self {
        Self {
            command: command.to_string(),
            dataset: dataset.to_string(),
            params: BTreeMap::new(),
            checksums: BTreeMap::new(),
            split_seeds: BTreeMap::new(),
            kernel_convention: KERNEL_CONVENTION.to_string(),
            version: crate::VERSION.to_string(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Display) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn run_config(self, c: &RunConfig) -> Self {
        self.param("K", c.k)
            .param("L", c.iterations)
            .param("R", c.repeats)
            .param("seed", c.seed)
            .param("metric", c.metric)
            .param("sigma", c.sigma)
            .param("C", c.label_scale)
            .param("exclusive_labels", c.exclusive_labels)
    }

    pub fn checksums(mut self, sums: &BTreeMap<String, String>) -> Self {
        self.checksums.extend(sums.iter().map(|(k, v)| (k.clone(), v.clone())));
        self
    }

    pub fn split_seed(mut self, mode: impl Display, seed: u64) -> Self {
        self.split_seeds.insert(mode.to_string(), seed);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    /// First 16 hex digits of the SHA-256 of the compact JSON form.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("manifest serializes");
        hex::encode(Sha256::digest(json.as_bytes()))[..16].to_string()
    }

    /// Path of the manifest that accompanies `artifact`: `table.csv` gets
    /// `table.manifest.json`.
    pub fn path_for(artifact: &Path) -> PathBuf {
        let stem = artifact.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        artifact.with_file_name(format!("{stem}.manifest.json"))
    }

    pub fn write_beside(&self, artifact: &Path) -> Result<PathBuf> {
        let path = Self::path_for(artifact);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        fs::write(&path, self.to_json())?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

/// A seed for one sub-task, derived from the run seed and a list of labels
/// so that results do not depend on the order tasks run in.
pub fn derive_seed(seed: u64, parts: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("eight bytes"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_tracks_content() {
        let a = RunManifest::new("table", "movielens").param("K", 100);
        let b = RunManifest::new("table", "movielens").param("K", 100);
        let c = RunManifest::new("table", "movielens").param("K", 50);
        assert_eq!(a.config_hash(), b.config_hash());
        assert_ne!(a.config_hash(), c.config_hash());
        assert_eq!(a.config_hash().len(), 16);
    }

    #[test]
    fn roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let artifact = dir.path().join("table.csv");
        let m = RunManifest::new("table", "x").run_config(&RunConfig::default()).split_seed("intersect", 3);
        let path = m.write_beside(&artifact).unwrap();
        assert!(path.ends_with("table.manifest.json"));
        assert_eq!(RunManifest::read(&path).unwrap(), m);
    }

    #[test]
    fn derived_seeds_differ_by_label() {
        assert_eq!(derive_seed(1, &["a", "b"]), derive_seed(1, &["a", "b"]));
        assert_ne!(derive_seed(1, &["a", "b"]), derive_seed(1, &["ab"]));
        assert_ne!(derive_seed(1, &["a"]), derive_seed(2, &["a"]));
    }
}
