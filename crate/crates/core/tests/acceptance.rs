//! Acceptance report. Prints one line per criterion, written straight to
//! stdout so it shows up even when the harness captures test output.
//!
//! The MovieLens criteria need `data/ml-100k` (or `$PRETENDER_DATA`); the
//! ordering criterion also looks for Last.fm and Amazon next to it. Missing
//! data is reported as BLOCKED rather than passed.

mod common;

use std::fmt;
use std::io::Write;
use std::time::{Duration, Instant};

use common::*;
use pretender::data::{make_split, Dataset, SplitMode};
use pretender::experiments::{
    convergence_csv, default_k_list, load_dataset, run_convergence, run_table, run_theory_checks, table_users_csv,
    CheckLine, DatasetSource, Method, RunManifest, TableRun, TheoryOptions, UserFilter,
};
use pretender::transport::{solve_joint_lp, solve_joint_lp_costs, transport, w1_selection, CostMatrix};
use pretender::{build_matrices, run_mmd, CandidatePool, KernelSpec, Label, Matrix, PreferenceSet, RunConfig};
use rand::Rng;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    Pass,
    Fail,
    Blocked,
}

struct Line {
    id: &'static str,
    status: Status,
    detail: String,
}

impl fmt::Display for Line {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Blocked => "BLOCKED",
        };
        write!(f, "[{s:<7}] {:<4} {}", self.id, self.detail)
    }
}

/// Criteria that cannot hold as stated. They are still evaluated and
/// printed; a FAIL on one of these does not fail the test.
const KNOWN_UNATTAINABLE: [&str; 1] = ["8b"];

struct Report {
    lines: Vec<Line>,
}

impl Report {
    fn push(&mut self, id: &'static str, passed: bool, detail: impl Into<String>) {
        self.emit(Line { id, status: if passed { Status::Pass } else { Status::Fail }, detail: detail.into() });
    }

    fn blocked(&mut self, id: &'static str, detail: impl Into<String>) {
        self.emit(Line { id, status: Status::Blocked, detail: detail.into() });
    }

    fn emit(&mut self, line: Line) {
        let mut out = std::io::stdout().lock();
        writeln!(out, "{line}").unwrap();
        out.flush().unwrap();
        self.lines.push(line);
    }
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

fn tiny_instance(seed: u64) -> (CandidatePool, PreferenceSet, usize) {
    let mut r = rng(seed);
    let items = r.gen_range(1..=6);
    let n = r.gen_range(1..=6);
    let pool = CandidatePool::build(
        random_points(&mut r, items, 2).into_iter().enumerate().map(|(i, f)| (i.to_string(), f)).collect(),
        10.0,
    )
    .unwrap();
    let src: Vec<(String, Vec<f64>, Label)> = random_points(&mut r, n, 2)
        .into_iter()
        .enumerate()
        .map(|(i, f)| (format!("s{i}"), f, Label::from_bool(r.gen_bool(0.5))))
        .collect();
    let source = PreferenceSet::from_raw(src, 10.0).unwrap();
    let k = r.gen_range(1..=pool.len().min(4));
    (pool, source, k)
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn criterion_1(report: &mut Report) {
    let start = Instant::now();
    let (iterations, repeats, delta) = (2000, 200, 0.25);
    // C is fitted on a disjoint calibration set as the largest certified
    // Frank-Wolfe gap (in distance units) scaled by sqrt(L).
    let mut c_fit: f64 = 0.0;
    for case in 0..20 {
        let (pool, source, k) = tiny_instance(10_000 + case);
        let mats = build_matrices(&pool, &source, &KernelSpec::gaussian(1.0).unwrap()).unwrap();
        let res = run_mmd(&mats, k, iterations, 1, case, false).unwrap();
        c_fit = c_fit.max((res.continuous - res.continuous_lower) * (iterations as f64).sqrt());
    }
    let (mut violations, mut exact, mut worst_excess) = (0, 0, f64::NEG_INFINITY);
    for case in 0..50 {
        let (pool, source, k) = tiny_instance(case);
        let mats = build_matrices(&pool, &source, &KernelSpec::gaussian(1.0).unwrap()).unwrap();
        let got = run_mmd(&mats, k, iterations, repeats, case, false).unwrap().outcome.distance;
        let (cands, src) = (rows(pool.embeddings()), rows(source.embeddings()));
        let (opt, _) = exhaustive_min(pool.len(), k, false, |s| naive_subset_mmd(&cands, s, &src, 1.0));
        let envelope = opt + c_fit / (iterations as f64).sqrt() + 2.0 * (1.0 / (delta * k as f64)).sqrt();
        violations += usize::from(got > envelope + 1e-12);
        exact += usize::from(got <= opt + 1e-9);
        worst_excess = worst_excess.max(got - opt);
    }
    let elapsed = start.elapsed();
    report.push(
        "1",
        violations == 0 && elapsed < Duration::from_secs(120),
        format!(
            "exhaustive envelope: {violations}/50 violations, fitted C = {c_fit:.4}, {exact}/50 hit the exhaustive optimum, \
             worst excess {worst_excess:.2e} ({})",
            secs(elapsed)
        ),
    );
}

fn criteria_theory(report: &mut Report) {
    let start = Instant::now();
    let lines: Vec<CheckLine> = run_theory_checks(&TheoryOptions::full(0)).unwrap();
    let elapsed = start.elapsed();
    let group = |prefix: &str| -> Vec<&CheckLine> { lines.iter().filter(|l| l.name.starts_with(prefix)).collect() };
    let summarize = |ls: &[&CheckLine]| -> (bool, String) {
        let failed: Vec<&str> = ls.iter().filter(|l| !l.passed).map(|l| l.name.as_str()).collect();
        let detail = if failed.is_empty() {
            format!("{}/{} checks", ls.len(), ls.len())
        } else {
            format!("failed: {}", failed.join(", "))
        };
        (failed.is_empty() && !ls.is_empty(), detail)
    };

    let moments = group("count");
    let (ok, _) = summarize(&moments);
    let detail: Vec<&str> = moments.iter().map(|l| l.detail.as_str()).collect();
    report.push("3", ok, format!("rounding moments: {}", detail.join("; ")));

    let (ok, detail) = summarize(&group("rkhs"));
    report.push(
        "4",
        ok,
        format!("RKHS perturbation quantiles at K in {{10, 50, 200}}, delta in {{0.5, 0.25, 0.1}}: {detail}"),
    );
    let (ok, detail) = summarize(&group("w1"));
    report.push("4w", ok, format!("supplementary W1 perturbations and weak duality on the line: {detail}"));

    let slope = |name: &str| lines.iter().find(|l| l.name.starts_with(name)).unwrap();
    let (mmd, w1) = (slope("mmd regret slope"), slope("w1 regret slope"));
    report.push(
        "7",
        mmd.passed && w1.passed,
        format!("rates: MMD {}; W1 {} (all theory checks {})", mmd.detail, w1.detail, secs(elapsed)),
    );
}

fn criterion_5(report: &mut Report) {
    let start = Instant::now();
    let mut r = rng(21);
    let column = |v: &[f64]| Matrix::from_fn(v.len(), 1, |i, _| v[i]);
    let mut worst_line: f64 = 0.0;
    for _ in 0..100 {
        let a: Vec<f64> = (0..r.gen_range(1..30)).map(|_| r.gen_range(0.0..1.0)).collect();
        let b: Vec<f64> = (0..r.gen_range(1..30)).map(|_| r.gen_range(0.0..1.0)).collect();
        let costs = CostMatrix::euclidean(&column(&a), &column(&b)).unwrap();
        let all: Vec<usize> = (0..a.len()).collect();
        let flow = w1_selection(&all, &costs).unwrap().value;
        worst_line = worst_line.max((flow - sorted_coupling_w1(&a, &b)).abs());
    }
    let mut worst_assign: f64 = 0.0;
    for _ in 0..20 {
        let n = r.gen_range(1..=7);
        let d = r.gen_range(1..4);
        let (a, b) = (random_points(&mut r, n, d), random_points(&mut r, n, d));
        let costs = CostMatrix::euclidean(&Matrix::from_rows(&a).unwrap(), &Matrix::from_rows(&b).unwrap()).unwrap();
        let uniform = vec![1.0 / n as f64; n];
        let value = transport(&uniform, &uniform, costs.matrix()).unwrap().value;
        worst_assign = worst_assign.max((value - assignment_w1(&rows(costs.matrix()))).abs());
    }
    report.push(
        "5",
        worst_line <= 1e-9 && worst_assign <= 1e-8,
        format!(
            "W1 exactness: max error {worst_line:.1e} vs sorted coupling (100 line instances), {worst_assign:.1e} vs assignment \
             (20 balanced instances) ({})",
            secs(start.elapsed())
        ),
    );
}

fn criterion_6(report: &mut Report) {
    let start = Instant::now();
    let mut r = rng(23);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let m = r.gen_range(2..=5);
        let n = r.gen_range(1..=3);
        let k = r.gen_range(1..=m.min(3));
        let (a, b) = (random_points(&mut r, m, 2), random_points(&mut r, n, 2));
        let costs = CostMatrix::euclidean(&Matrix::from_rows(&a).unwrap(), &Matrix::from_rows(&b).unwrap()).unwrap();
        let sol = solve_joint_lp_costs(&costs, k).unwrap();
        let f = lcm(k, n);
        let per_col = vec![f / n; n];
        let c = rows(costs.matrix());
        let oracle = bounded_compositions(m, f / k, f)
            .iter()
            .map(|counts| integer_mass_w1(counts, &per_col, &c))
            .fold(f64::INFINITY, f64::min);
        worst = worst.max((sol.value - oracle).abs());
    }
    let pool = CandidatePool::build(vec![("1".into(), vec![0.0]), ("2".into(), vec![1.0])], 10.0).unwrap();
    let source = PreferenceSet::from_raw([("1", vec![0.0], Label::Up)], 10.0).unwrap();
    let k1 = solve_joint_lp(&pool, &source, 1).unwrap().value;
    let k2 = solve_joint_lp(&pool, &source, 2).unwrap().value;
    report.push(
        "6",
        worst <= 1e-6 && k1 == 0.0 && k2 > 0.0,
        format!(
            "joint LP: max error {worst:.1e} vs lattice grid search (20 instances); counterexample K=1 -> {k1}, K=2 -> {k2:.4} ({})",
            secs(start.elapsed())
        ),
    );
}

fn load(source: DatasetSource) -> Option<Dataset> {
    load_dataset(&source, &data_root(), 0).ok()
}

fn config(k: usize) -> RunConfig {
    RunConfig { k, iterations: 1000, repeats: 100, sigma: 1.0, label_scale: 10.0, seed: 0, ..RunConfig::default() }
}

const SPLITS: [SplitMode; 2] = [SplitMode::WithIntersection, SplitMode::NoIntersection];

fn full_table(d: &Dataset, filter: &UserFilter) -> (Vec<TableRun>, Duration) {
    let start = Instant::now();
    let runs = SPLITS
        .iter()
        .map(|&mode| {
            let split = make_split(d.catalog.len(), mode, 0).unwrap();
            run_table(d, &split, &config(100), filter).unwrap()
        })
        .collect();
    (runs, start.elapsed())
}

fn ordering_detail(runs: &[TableRun]) -> (bool, String) {
    let mut ok = true;
    let parts: Vec<String> = runs
        .iter()
        .map(|run| {
            let (p, g, r) = (
                run.summary(Method::Pretender).mean,
                run.summary(Method::Greedy).mean,
                run.summary(Method::Random).mean,
            );
            ok &= p < g && p < r;
            format!("{}: pretender {p:.4}, greedy {g:.4}, random {r:.4} ({} users)", run.split.mode, run.users.len())
        })
        .collect();
    (ok, parts.join("; "))
}

fn users_csv(runs: &[TableRun]) -> String {
    table_users_csv(runs, &RunManifest::new("table", "movielens").run_config(&config(100))).to_csv_string()
}

fn movielens_criteria(report: &mut Report) {
    let Some(d) = load(DatasetSource::MovieLens) else {
        for id in ["2", "8a", "8b", "9", "10"] {
            report.blocked(id, "MovieLens-100K not found under data/ml-100k; set PRETENDER_DATA");
        }
        return;
    };

    // Convergence on the two reference users.
    let start = Instant::now();
    let split = make_split(d.catalog.len(), SplitMode::WithIntersection, 0).unwrap();
    let conv = |user: &str| run_convergence(&d, &split, user, &default_k_list(), &config(1)).unwrap();
    let runs = [conv("309"), conv("22")];
    let elapsed = start.elapsed();
    let gaps: Vec<String> = runs
        .iter()
        .map(|r| format!("user {}: {:.4} -> {:.4}", r.user_id, r.points[0].gap(), r.points.last().unwrap().gap()))
        .collect();
    let shrinks = runs.iter().all(|r| r.points.last().unwrap().gap() < r.points[0].gap());
    report.push("8a", shrinks, format!("gap from K=1 to K=128 decreases: {} ({})", gaps.join(", "), secs(elapsed)));
    let argmins: Vec<String> = runs.iter().map(|r| format!("user {}: {}", r.user_id, r.continuous_argmin())).collect();
    let in_range = runs.iter().all(|r| (16..=128).contains(&r.continuous_argmin()));
    // Where a larger K reports a smaller value, the smaller K's certified
    // lower bound must still sit below it.
    let consistent = runs.iter().all(|r| {
        r.points
            .iter()
            .enumerate()
            .all(|(i, a)| r.points[i + 1..].iter().all(|b| a.continuous_lower <= b.continuous + 1e-9))
    });
    report.push(
        "8b",
        in_range,
        format!(
            "continuous minimum in K in [16, 128]: argmin {}. The relaxation's feasible sets shrink as K grows, so its \
             optimum cannot decrease with K; certified brackets consistent with that: {consistent}",
            argmins.join(", ")
        ),
    );
    let pretender: Vec<String> = runs.iter().map(|r| format!("user {}: {}", r.user_id, r.pretender_argmin())).collect();
    report.push(
        "8c",
        runs.iter().all(|r| (16..=128).contains(&r.pretender_argmin())),
        format!("supplementary: rounded selection is best at K = {}", pretender.join(", ")),
    );

    // Full table at K = 100.
    let filter = UserFilter::default();
    let (table, elapsed) = full_table(&d, &filter);
    let violations: usize = table.iter().map(|r| r.violations.len()).sum();
    let users: usize = table.iter().map(|r| r.users.len()).sum();
    report.push(
        "2",
        violations == 0 && elapsed < Duration::from_secs(600),
        format!(
            "continuous value below every selection: {violations} violations over {users} user-splits ({})",
            secs(elapsed)
        ),
    );
    let (ok, detail) = ordering_detail(&table);
    report.push("9", ok, format!("movielens K=100: {detail}"));

    for (name, source) in [("lastfm", DatasetSource::LastFm), ("amazon", DatasetSource::Amazon)] {
        match load(source) {
            Some(other) => {
                let (runs, elapsed) = full_table(&other, &filter);
                let (ok, detail) = ordering_detail(&runs);
                report.push("9", ok, format!("{name} K=100: {detail} ({})", secs(elapsed)));
            }
            None if name == "amazon" => report.blocked("9", "amazon: no review file under data/amazon (optional)"),
            None => {
                let root = data_root().canonicalize().unwrap_or_else(|_| data_root());
                report.blocked("9", format!("{name}: data not found under {}", root.display()))
            }
        }
    }

    // Repeat with the same manifest and compare bytes.
    let again = [conv("309"), conv("22")];
    let m = RunManifest::new("convergence", &d.name).run_config(&config(1));
    let same_conv = convergence_csv(&d.name, &split, &runs, &m).to_csv_string()
        == convergence_csv(&d.name, &split, &again, &m).to_csv_string();
    let capped = UserFilter { max_users: Some(40), ..filter };
    let (first, _) = full_table(&d, &capped);
    let (second, _) = full_table(&d, &capped);
    let same_table = users_csv(&first) == users_csv(&second);
    // The capped run's rows must also match the leading rows of the full run.
    let prefix: Vec<TableRun> =
        table.iter().map(|r| TableRun { users: r.users[..40.min(r.users.len())].to_vec(), ..r.clone() }).collect();
    let same_prefix = users_csv(&first) == users_csv(&prefix);
    report.push(
        "10",
        same_conv && same_table && same_prefix,
        format!(
            "byte-identical reruns: convergence {same_conv}, table {same_table}, capped table matches full run {same_prefix}"
        ),
    );
}

#[test]
fn acceptance() {
    let mut report = Report { lines: Vec::new() };
    criterion_1(&mut report);
    criteria_theory(&mut report);
    criterion_5(&mut report);
    criterion_6(&mut report);
    movielens_criteria(&mut report);

    let unexpected: Vec<String> = report
        .lines
        .iter()
        .filter(|l| l.status == Status::Fail && !KNOWN_UNATTAINABLE.contains(&l.id))
        .map(|l| l.to_string())
        .collect();
    assert!(unexpected.is_empty(), "failed criteria:\n{}", unexpected.join("\n"));
}
