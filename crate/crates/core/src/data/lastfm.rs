use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::Label;

use super::pca::{apply_pca, fit_pca, RawFeatures, DEFAULT_COMPONENTS};
use super::{group_users, require, sha256_file, sort_user_ids, Catalog, Dataset};

fn read_table(path: &Path, min_fields: usize, skipped: &mut usize) -> Result<Vec<Vec<String>>> {
    let bytes = fs::read(path)?;
    let text = String::from_utf8_lossy(&bytes);
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if lineno == 0 || line.trim().is_empty() {
            // Header row.
            continue;
        }
        let fields: Vec<String> = line.split('\t').map(|f| f.trim().to_string()).collect();
        if fields.len() < min_fields || fields[..min_fields].iter().any(|f| f.is_empty()) {
            log::warn!("{}: line {} malformed, skipped", path.display(), lineno + 1);
            *skipped += 1;
            continue;
        }
        rows.push(fields);
    }
    Ok(rows)
}

/// Loads the HetRec Last.fm release from `user_artists.dat` and
/// `user_taggedartists.dat` (plus `artists.dat` for names when present).
///
/// Listened artists are thumbs-up. Each user also gets as many thumbs-down
/// artists, drawn without replacement from the artists they never played.
/// Raw features are per-artist tag counts reduced by PCA.
pub fn load_lastfm(dir: &Path, seed: u64) -> Result<Dataset> {
    load_lastfm_with(dir, seed, DEFAULT_COMPONENTS)
}

pub fn load_lastfm_with(dir: &Path, seed: u64, components: usize) -> Result<Dataset> {
    let listens_path = dir.join("user_artists.dat");
    let tags_path = dir.join("user_taggedartists.dat");
    let names_path = dir.join("artists.dat");
    require(&listens_path)?;
    require(&tags_path)?;
    let mut skipped = 0;

    let mut listens = Vec::new();
    for row in read_table(&listens_path, 3, &mut skipped)? {
        match row[2].parse::<f64>() {
            Ok(weight) => listens.push((row[0].clone(), row[1].clone(), weight)),
            Err(_) => skipped += 1,
        }
    }
    let tagged = read_table(&tags_path, 3, &mut skipped)?;

    let artist_set: BTreeSet<&str> = listens.iter().map(|(_, a, _)| a.as_str()).collect();
    let mut artist_ids: Vec<String> = artist_set.into_iter().map(str::to_string).collect();
    sort_user_ids(&mut artist_ids);
    if artist_ids.is_empty() {
        return Err(Error::Empty("listened artists"));
    }
    let index: HashMap<&str, usize> = artist_ids.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect();

    let mut tag_ids: Vec<&str> = tagged.iter().map(|r| r[2].as_str()).collect::<BTreeSet<_>>().into_iter().collect();
    tag_ids.sort_by_key(|t| (t.parse::<u64>().unwrap_or(u64::MAX), t.to_string()));
    let tag_index: HashMap<&str, usize> = tag_ids.iter().enumerate().map(|(i, t)| (*t, i)).collect();
    let mut counts: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); artist_ids.len()];
    for row in &tagged {
        if let Some(&a) = index.get(row[1].as_str()) {
            *counts[a].entry(tag_index[row[2].as_str()]).or_default() += 1.0;
        }
    }
    let raw = RawFeatures::Sparse {
        dim: tag_ids.len().max(1),
        rows: counts.into_iter().map(|m| m.into_iter().collect()).collect(),
    };
    let k = components.min(raw.dim());
    if k < components {
        log::warn!("Last.fm: only {} tag dimensions, keeping {k} components", raw.dim());
    }
    let model = fit_pca(&raw, k)?;
    let features = apply_pca(&model, &raw)?;

    let mut names: HashMap<String, String> = HashMap::new();
    let mut checksums = BTreeMap::new();
    if names_path.is_file() {
        for row in read_table(&names_path, 2, &mut skipped)? {
            names.insert(row[0].clone(), row[1].clone());
        }
        checksums.insert("artists.dat".to_string(), sha256_file(&names_path)?);
    }
    checksums.insert("user_artists.dat".to_string(), sha256_file(&listens_path)?);
    checksums.insert("user_taggedartists.dat".to_string(), sha256_file(&tags_path)?);

    let positives: Vec<(String, usize, Label)> = listens
        .iter()
        .filter(|(_, _, w)| *w > 0.0)
        .map(|(u, a, _)| (u.clone(), index[a.as_str()], Label::Up))
        .collect();
    let mut played: HashMap<&str, BTreeSet<usize>> = HashMap::new();
    for (u, a, _) in &listens {
        played.entry(u.as_str()).or_default().insert(index[a.as_str()]);
    }
    let mut users = group_users(positives);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for user in &mut users {
        let listened = &played[user.user_id.as_str()];
        let pool: Vec<usize> = (0..artist_ids.len()).filter(|a| !listened.contains(a)).collect();
        let want = user.ratings.len();
        if want > pool.len() {
            log::warn!("Last.fm user {}: only {} unplayed artists for {want} negatives", user.user_id, pool.len());
        }
        let take = want.min(pool.len());
        let mut negatives: Vec<usize> = sample(&mut rng, pool.len(), take).into_iter().map(|i| pool[i]).collect();
        negatives.sort_unstable();
        user.ratings.extend(negatives.into_iter().map(|item| super::Rating { item, label: Label::Down }));
    }

    let titles = artist_ids.iter().map(|a| names.get(a).cloned().unwrap_or_else(|| a.clone())).collect();
    Ok(Dataset {
        name: "lastfm".to_string(),
        catalog: Catalog { item_ids: artist_ids, titles, features },
        users,
        checksums,
        skipped_rows: skipped,
    })
}
