use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::Label;

use super::{group_users, require, sha256_file, Catalog, Dataset};

pub const GENRES: usize = 19;
/// One bin for an unknown release year plus 70 one-year bins ending at the
/// latest year in the catalog; older years share the first year bin.
pub const YEAR_BINS: usize = 71;
const YEAR_SPAN: i32 = (YEAR_BINS - 1) as i32;

/// The user whose history is exactly ten thumbs-up and ten thumbs-down in
/// the full 943-user release.
const BALANCED_USER: &str = "309";
const FULL_RELEASE_USERS: usize = 943;

/// Bin index for a release year, given the catalog's latest year.
pub fn year_bin(year: Option<i32>, latest: i32) -> usize {
    match year {
        None => 0,
        Some(y) => 1 + (y - (latest - YEAR_SPAN + 1)).clamp(0, YEAR_SPAN - 1) as usize,
    }
}

/// `u.item` is Latin-1; every byte maps to the code point of equal value.
fn latin1(bytes: &[u8]) -> String {
    bytes.iter().map(|&b| b as char).collect()
}

fn parse_year(date: &str) -> Option<i32> {
    let tail = date.trim().rsplit('-').next()?;
    if tail.len() == 4 {
        tail.parse().ok()
    } else {
        None
    }
}

struct ItemRow {
    id: String,
    title: String,
    year: Option<i32>,
    genres: [bool; GENRES],
}

fn parse_item(line: &str) -> Option<ItemRow> {
    let fields: Vec<&str> = line.split('|').collect();
    if fields.len() < 5 + GENRES {
        return None;
    }
    let mut genres = [false; GENRES];
    for (g, flag) in fields[fields.len() - GENRES..].iter().enumerate() {
        genres[g] = match flag.trim() {
            "0" => false,
            "1" => true,
            _ => return None,
        };
    }
    let id = fields[0].trim();
    if id.is_empty() {
        return None;
    }
    Some(ItemRow { id: id.to_string(), title: fields[1].to_string(), year: parse_year(fields[2]), genres })
}

/// Loads MovieLens-100K from `u.data` and `u.item` in `dir`.
///
/// Features are the 19 genre flags followed by a one-hot release-year bin,
/// 90 binary coordinates in total. A rating of 4 or more is a thumbs-up.
pub fn load_movielens(dir: &Path) -> Result<Dataset> {
    let data_path = dir.join("u.data");
    let item_path = dir.join("u.item");
    require(&data_path)?;
    require(&item_path)?;
    let mut skipped = 0usize;

    let raw = fs::read(&item_path)?;
    let mut items = Vec::new();
    for (lineno, line) in raw.split(|&b| b == b'\n').enumerate() {
        let line = latin1(line);
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        match parse_item(line) {
            Some(row) => items.push(row),
            None => {
                log::warn!("u.item line {}: malformed, skipped", lineno + 1);
                skipped += 1;
            }
        }
    }
    if items.is_empty() {
        return Err(Error::Empty("u.item rows"));
    }
    let latest = items.iter().filter_map(|r| r.year).max().unwrap_or(0);
    let dim = GENRES + YEAR_BINS;
    let mut features = Matrix::zeros(items.len(), dim);
    let mut index = HashMap::new();
    for (i, row) in items.iter().enumerate() {
        for (g, &on) in row.genres.iter().enumerate() {
            if on {
                features.set(i, g, 1.0);
            }
        }
        features.set(i, GENRES + year_bin(row.year, latest), 1.0);
        if index.insert(row.id.clone(), i).is_some() {
            return Err(Error::Parse {
                file: item_path.display().to_string(),
                line: i + 1,
                msg: format!("duplicate item id {}", row.id),
            });
        }
    }

    let text = latin1(&fs::read(&data_path)?);
    let mut triples = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let parsed = (fields.len() >= 3)
            .then(|| {
                let item = *index.get(fields[1].trim())?;
                let rating: f64 = fields[2].trim().parse().ok()?;
                let user = fields[0].trim();
                (!user.is_empty()).then(|| (user.to_string(), item, Label::from_bool(rating >= 4.0)))
            })
            .flatten();
        match parsed {
            Some(t) => triples.push(t),
            None => {
                log::warn!("u.data line {}: malformed, skipped", lineno + 1);
                skipped += 1;
            }
        }
    }
    if skipped > 0 {
        log::warn!("MovieLens: skipped {skipped} malformed rows");
    }

    let mut checksums = BTreeMap::new();
    checksums.insert("u.data".to_string(), sha256_file(&data_path)?);
    checksums.insert("u.item".to_string(), sha256_file(&item_path)?);
    let dataset = Dataset {
        name: "movielens".to_string(),
        catalog: Catalog {
            item_ids: items.iter().map(|r| r.id.clone()).collect(),
            titles: items.into_iter().map(|r| r.title).collect(),
            features,
        },
        users: group_users(triples),
        checksums,
        skipped_rows: skipped,
    };
    check_balanced_user(&dataset)?;
    Ok(dataset)
}

fn check_balanced_user(dataset: &Dataset) -> Result<()> {
    if dataset.users.len() != FULL_RELEASE_USERS {
        return Ok(());
    }
    let user = dataset.user(BALANCED_USER)?;
    let (up, down) = (user.count(Label::Up), user.count(Label::Down));
    if (up, down) != (10, 10) {
        return Err(Error::DataCheck(format!(
            "user {BALANCED_USER} should have 10 thumbs-up and 10 thumbs-down, found {up} and {down}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn year_bins() {
        assert_eq!(year_bin(None, 1998), 0);
        assert_eq!(year_bin(Some(1998), 1998), 70);
        assert_eq!(year_bin(Some(1929), 1998), 1);
        assert_eq!(year_bin(Some(1922), 1998), 1);
        assert_eq!(year_bin(Some(1930), 1998), 2);
    }

    #[test]
    fn parses_dates() {
        assert_eq!(parse_year("01-Jan-1995"), Some(1995));
        assert_eq!(parse_year(""), None);
        assert_eq!(parse_year("unknown"), None);
    }

    #[test]
    fn latin1_titles() {
        assert_eq!(latin1(&[0x43, 0x6c, 0xe9, 0x6f]), "Cléo");
    }
}
