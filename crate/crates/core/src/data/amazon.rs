use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::Label;

use super::pca::{apply_pca, fit_pca, RawFeatures, DEFAULT_COMPONENTS};
use super::{group_users, require, sha256_file, Catalog, Dataset};

pub const DEFAULT_VOCABULARY: usize = 5000;

#[derive(Clone, Copy, Debug)]
pub struct AmazonOptions {
    /// Number of most frequent corpus terms kept.
    pub vocabulary: usize,
    pub components: usize,
}

impl Default for AmazonOptions {
    fn default() -> Self {
        Self { vocabulary: DEFAULT_VOCABULARY, components: DEFAULT_COMPONENTS }
    }
}

#[derive(Deserialize)]
struct Review {
    #[serde(rename = "reviewerID")]
    reviewer: String,
    asin: String,
    overall: f64,
    #[serde(rename = "reviewText", default)]
    text: String,
}

/// Lowercased maximal runs of alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
}

/// Loads Amazon reviews from a JSON-lines file with the keys `reviewerID`,
/// `asin`, `overall` and `reviewText`.
///
/// Each product is the bag of words of all its reviews over the most
/// frequent `vocabulary` terms (count ties broken alphabetically), reduced
/// by PCA. A rating of 4 or more is a thumbs-up.
pub fn load_amazon(path: &Path, options: &AmazonOptions) -> Result<Dataset> {
    require(path)?;
    let bytes = fs::read(path)?;
    let text = String::from_utf8_lossy(&bytes);
    let mut skipped = 0;
    let mut reviews = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Review>(line) {
            Ok(r) if !r.asin.is_empty() && !r.reviewer.is_empty() => reviews.push(r),
            _ => {
                log::warn!("{}: line {} malformed, skipped", path.display(), lineno + 1);
                skipped += 1;
            }
        }
    }
    if reviews.is_empty() {
        return Err(Error::Parse {
            file: path.display().to_string(),
            line: 0,
            msg: "no valid review records".to_string(),
        });
    }

    let tokens: Vec<Vec<String>> = reviews.iter().map(|r| tokenize(&r.text)).collect();
    let terms = vocabulary(reviews.iter().map(|r| r.text.as_str()), options.vocabulary);
    let vocab: HashMap<&str, usize> = terms.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();

    let mut asins: Vec<String> = reviews.iter().map(|r| r.asin.clone()).collect();
    asins.sort();
    asins.dedup();
    let index: HashMap<&str, usize> = asins.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect();
    let mut counts: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); asins.len()];
    for (r, toks) in reviews.iter().zip(&tokens) {
        let row = &mut counts[index[r.asin.as_str()]];
        for t in toks {
            if let Some(&v) = vocab.get(t.as_str()) {
                *row.entry(v).or_default() += 1.0;
            }
        }
    }
    let raw = RawFeatures::Sparse {
        dim: vocab.len().max(1),
        rows: counts.into_iter().map(|m| m.into_iter().collect()).collect(),
    };
    let k = options.components.min(raw.dim());
    if k < options.components {
        log::warn!("Amazon: vocabulary has {} terms, keeping {k} components", raw.dim());
    }
    let model = fit_pca(&raw, k)?;
    let features = apply_pca(&model, &raw)?;

    let triples = reviews
        .iter()
        .map(|r| (r.reviewer.clone(), index[r.asin.as_str()], Label::from_bool(r.overall >= 4.0)))
        .collect();
    let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    let mut checksums = BTreeMap::new();
    checksums.insert(file, sha256_file(path)?);
    Ok(Dataset {
        name: "amazon".to_string(),
        catalog: Catalog { titles: asins.clone(), item_ids: asins, features },
        users: group_users(triples),
        checksums,
        skipped_rows: skipped,
    })
}

/// Vocabulary that [`load_amazon`] would build for these review texts.
pub fn vocabulary<'a>(texts: impl IntoIterator<Item = &'a str>, size: usize) -> Vec<String> {
    let mut freq: HashMap<String, usize> = HashMap::new();
    for t in texts.into_iter().flat_map(tokenize) {
        *freq.entry(t).or_default() += 1;
    }
    let mut terms: Vec<(String, usize)> = freq.into_iter().collect();
    terms.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    terms.into_iter().take(size).map(|(t, _)| t).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer() {
        assert_eq!(tokenize("Great product!! Works, 10/10."), ["great", "product", "works", "10", "10"]);
        assert!(tokenize("  ...  ").is_empty());
    }

    #[test]
    fn vocabulary_is_capped_and_ordered() {
        let v = vocabulary(["b a a", "c b a"], 2);
        assert_eq!(v, ["a", "b"]);
    }
}
