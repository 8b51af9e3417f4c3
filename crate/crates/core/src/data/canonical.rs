//! One self-describing CSV file per dataset.
//!
//! The header is `item_id,label,user_id,title,x0,...,x{d-1}`. Two kinds of
//! rows share it:
//!
//! * catalog rows have an empty `label` and `user_id` and carry the
//!   features;
//! * interaction rows have `label` set to `1` (thumbs-up) or `0` and
//!   leave `title` and the feature columns empty.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::Label;

use super::{group_users, sha256_file, Catalog, Dataset};

const FIXED: [&str; 4] = ["item_id", "label", "user_id", "title"];

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse { file: path.display().to_string(), line, msg: e.to_string() }
}

/// Writes the dataset; users keep their order and ratings their order.
pub fn write_canonical(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let d = dataset.catalog.dim();
    let mut header: Vec<String> = FIXED.iter().map(|s| s.to_string()).collect();
    header.extend((0..d).map(|j| format!("x{j}")));
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    let catalog = &dataset.catalog;
    for i in 0..catalog.len() {
        let mut rec = vec![catalog.item_ids[i].clone(), String::new(), String::new(), catalog.titles[i].clone()];
        rec.extend(catalog.features.row(i).iter().map(|v| format!("{v}")));
        w.write_record(&rec).map_err(|e| csv_error(path, e))?;
    }
    let blank = vec![String::new(); d + 1];
    for user in &dataset.users {
        for r in &user.ratings {
            let mut rec = vec![
                catalog.item_ids[r.item].clone(),
                if r.label.is_up() { "1" } else { "0" }.to_string(),
                user.user_id.clone(),
            ];
            rec.extend(blank.iter().cloned());
            w.write_record(&rec).map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a file produced by [`write_canonical`]. The dataset is named
/// after the file stem.
pub fn read_canonical(path: &Path) -> Result<Dataset> {
    super::require(path)?;
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
    let parse_err = |line: usize, msg: String| Error::Parse { file: path.display().to_string(), line, msg };
    if header.len() < FIXED.len() || header.iter().take(4).ne(FIXED.iter().copied()) {
        return Err(parse_err(1, format!("header must start with {}", FIXED.join(","))));
    }
    for (j, name) in header.iter().skip(4).enumerate() {
        if name != format!("x{j}") {
            return Err(parse_err(1, format!("feature column {j} is named `{name}`")));
        }
    }
    let d = header.len() - FIXED.len();

    let mut ids = Vec::new();
    let mut titles = Vec::new();
    let mut values = Vec::new();
    let mut index = HashMap::new();
    let mut interactions = Vec::new();
    let mut skipped = 0;
    for (n, rec) in r.records().enumerate() {
        let line = n + 2;
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let (item, label, user) = (&rec[0], &rec[1], &rec[2]);
        if label.is_empty() && user.is_empty() {
            let row: std::result::Result<Vec<f64>, _> = rec.iter().skip(4).map(str::parse::<f64>).collect();
            let row = row.map_err(|e| parse_err(line, e.to_string()))?;
            if index.insert(item.to_string(), ids.len()).is_some() {
                return Err(parse_err(line, format!("duplicate item `{item}`")));
            }
            ids.push(item.to_string());
            titles.push(rec[3].to_string());
            values.extend(row);
        } else {
            let label = match label {
                "1" => Label::Up,
                "0" => Label::Down,
                other => return Err(parse_err(line, format!("label `{other}` is not 0 or 1"))),
            };
            interactions.push((line, user.to_string(), item.to_string(), label));
        }
    }
    let mut triples = Vec::with_capacity(interactions.len());
    for (line, user, item, label) in interactions {
        match index.get(&item) {
            Some(&i) => triples.push((user, i, label)),
            None => {
                log::warn!("{}: line {line} names unknown item `{item}`, skipped", path.display());
                skipped += 1;
            }
        }
    }
    let features = Matrix::from_vec(ids.len(), d, values)?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let file = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut checksums = BTreeMap::new();
    checksums.insert(file, sha256_file(path)?);
    Ok(Dataset {
        name,
        catalog: Catalog { item_ids: ids, titles, features },
        users: group_users(triples),
        checksums,
        skipped_rows: skipped,
    })
}
