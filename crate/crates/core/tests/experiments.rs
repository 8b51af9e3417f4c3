mod common;

use std::collections::BTreeMap;

use common::*;
use pretender::data::{make_split, Catalog, Dataset, Rating, SplitMode, UserHistory};
use pretender::experiments::{
    convergence_csv, derive_seed, downstream_csv, run_case_study, run_convergence, run_downstream, run_table,
    table_users_csv, Method, RunManifest, Selector, UserFilter,
};
use pretender::{Label, Matrix, Metric, RunConfig};
use rand::Rng;

/// Items on a few clusters; each user likes one cluster and dislikes
/// another.
fn toy_dataset(seed: u64) -> Dataset {
    let mut r = rng(seed);
    let items = 120;
    let centers = [[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]];
    let mut feats = Vec::new();
    for i in 0..items {
        let c = centers[i % 3];
        feats.push(vec![c[0] + r.gen_range(-0.5..0.5), c[1] + r.gen_range(-0.5..0.5)]);
    }
    let users = (0..8)
        .map(|u| {
            let (like, hate) = (u % 3, (u + 1) % 3);
            let ratings = (0..items)
                .filter(|i| (i % 3 == like || i % 3 == hate) && r.gen_bool(0.4))
                .map(|i| Rating { item: i, label: Label::from_bool(i % 3 == like) })
                .collect();
            UserHistory { user_id: (u + 1).to_string(), ratings }
        })
        .collect();
    Dataset {
        name: "toy".into(),
        catalog: Catalog {
            item_ids: (0..items).map(|i| format!("item{i}")).collect(),
            titles: (0..items).map(|i| format!("Item {i}")).collect(),
            features: Matrix::from_rows(&feats).unwrap(),
        },
        users,
        checksums: BTreeMap::new(),
        skipped_rows: 0,
    }
}

fn config(k: usize) -> RunConfig {
    RunConfig { k, iterations: 300, repeats: 20, seed: 5, ..RunConfig::default() }
}

#[test]
fn identical_manifests_give_identical_bytes() {
    let d = toy_dataset(1);
    let split = make_split(d.catalog.len(), SplitMode::WithIntersection, 5).unwrap();
    let c = config(8);
    let manifest = RunManifest::new("table", &d.name).run_config(&c).split_seed(split.mode, split.seed);
    let a = run_table(&d, &split, &c, &UserFilter::default()).unwrap();
    let b = run_table(&d, &split, &c, &UserFilter::default()).unwrap();
    let (ta, tb) = (table_users_csv(&[a], &manifest), table_users_csv(&[b], &manifest));
    assert_eq!(ta.to_csv_string(), tb.to_csv_string());
    // Every row carries the seed and the config hash.
    let hash = manifest.config_hash();
    assert!(ta.column("config_hash").unwrap().iter().all(|h| *h == hash));
    let seeds = ta.column("seed").unwrap();
    let users = ta.column("user").unwrap();
    for (s, u) in seeds.iter().zip(users) {
        let expected = derive_seed(c.seed, &["table", "toy", "intersect", u]);
        assert_eq!(s.parse::<u64>().unwrap(), expected);
    }
}

#[test]
fn table_brackets_and_orders_methods() {
    let d = toy_dataset(2);
    for mode in [SplitMode::WithIntersection, SplitMode::NoIntersection] {
        let split = make_split(d.catalog.len(), mode, 5).unwrap();
        let run = run_table(&d, &split, &config(10), &UserFilter::default()).unwrap();
        assert!(!run.users.is_empty());
        assert!(run.violations.is_empty(), "{:?}", run.violations);
        for u in &run.users {
            assert!(u.continuous <= u.pretender && u.continuous <= u.greedy && u.continuous <= u.random);
        }
        let p = run.summary(Method::Pretender).mean;
        assert!(p < run.summary(Method::Random).mean);
        assert!(p < run.summary(Method::Greedy).mean);
    }
}

#[test]
fn table_filter_and_cap() {
    let d = toy_dataset(3);
    let split = make_split(d.catalog.len(), SplitMode::WithIntersection, 5).unwrap();
    let filter = UserFilter { min_up: 1, min_down: 1, max_users: Some(3) };
    let run = run_table(&d, &split, &config(4), &filter).unwrap();
    assert_eq!(run.users.len(), 3);
    assert_eq!(run.users[0].user_id, "1");
}

#[test]
fn w1_table_uses_the_lp_value() {
    let d = toy_dataset(4);
    let split = make_split(d.catalog.len(), SplitMode::WithIntersection, 5).unwrap();
    let c = RunConfig { metric: Metric::W1, repeats: 5, ..config(6) };
    let filter = UserFilter { max_users: Some(2), ..UserFilter::default() };
    let run = run_table(&d, &split, &c, &filter).unwrap();
    assert!(run.violations.is_empty());
}

#[test]
fn convergence_gap_shrinks() {
    let d = toy_dataset(5);
    let split = make_split(d.catalog.len(), SplitMode::WithIntersection, 5).unwrap();
    let run = run_convergence(&d, &split, "1", &[1, 4, 16], &config(1)).unwrap();
    assert_eq!(run.points.len(), 3);
    assert!(run.points.iter().all(|p| p.continuous <= p.pretender && p.continuous_lower <= p.continuous + 1e-12));
    assert!(run.points[2].gap() < run.points[0].gap());
    let m = RunManifest::new("convergence", "toy");
    let csv = convergence_csv("toy", &split, &[run], &m);
    assert_eq!(csv.rows.len(), 3);
}

#[test]
fn unknown_user_is_an_error() {
    let d = toy_dataset(6);
    let split = make_split(d.catalog.len(), SplitMode::WithIntersection, 5).unwrap();
    assert!(run_convergence(&d, &split, "nobody", &[1], &config(1)).is_err());
}

#[test]
fn case_study_flags_exact_copies() {
    let d = toy_dataset(7);
    let split = make_split(d.catalog.len(), SplitMode::WithIntersection, 5).unwrap();
    let study = run_case_study(&d, &split, "2", &config(12)).unwrap();
    assert_eq!(study.selected.len(), 12);
    let user = d.user("2").unwrap();
    for e in study.exact_copies() {
        let item = d.catalog.index_of(&e.item_id).unwrap();
        assert!(split.in_source[item] && split.in_target[item]);
        assert!(user.ratings.iter().any(|r| r.item == item && r.label == e.label));
    }
    assert!(study.report().contains("selected thumbs-up"));
}

#[test]
fn downstream_source_anchor_is_best() {
    let d = toy_dataset(8);
    let split = make_split(d.catalog.len(), SplitMode::WithIntersection, 5).unwrap();
    // With almost no penalty the anchor nearly minimizes the source loss
    // itself, so no other training set can beat it by much.
    let run = run_downstream(&d, &split, "3", &config(10), 1e-6).unwrap();
    let loss = |s: Selector| run.rows.iter().find(|r| r.selector == s).unwrap();
    let anchor = loss(Selector::Source);
    assert_eq!(anchor.status, "ok");
    for r in &run.rows {
        if r.status == "ok" {
            assert!(r.source_loss.is_finite() && r.source_loss >= 0.0);
            assert!(anchor.source_loss <= r.source_loss + 1e-3, "{:?}", r.selector);
        } else {
            assert!(r.source_loss.is_nan());
        }
    }
    let m = RunManifest::new("downstream", "toy");
    assert_eq!(downstream_csv("toy", &[run], &m).rows.len(), 4);
}
