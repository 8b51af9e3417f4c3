//! Reference implementations used as oracles. Everything here is written
//! from the definitions, with no shortcuts shared with the library.
#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gauss(x: &[f64], y: &[f64], sigma: f64) -> f64 {
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-d2 / (2.0 * sigma * sigma)).exp()
}

/// Squared MMD between `Σ wa_i δ(a_i)` and `Σ wb_i δ(b_i)` by triple double
/// sum.
pub fn naive_mmd_sq(a: &[Vec<f64>], wa: &[f64], b: &[Vec<f64>], wb: &[f64], sigma: f64) -> f64 {
    let mut aa = 0.0;
    for i in 0..a.len() {
        for j in 0..a.len() {
            aa += wa[i] * wa[j] * gauss(&a[i], &a[j], sigma);
        }
    }
    let mut ab = 0.0;
    for i in 0..a.len() {
        for j in 0..b.len() {
            ab += wa[i] * wb[j] * gauss(&a[i], &b[j], sigma);
        }
    }
    let mut bb = 0.0;
    for i in 0..b.len() {
        for j in 0..b.len() {
            bb += wb[i] * wb[j] * gauss(&b[i], &b[j], sigma);
        }
    }
    aa - 2.0 * ab + bb
}

/// MMD of the uniform measure on `subset` of `points` against the uniform
/// source.
pub fn naive_subset_mmd(points: &[Vec<f64>], subset: &[usize], source: &[Vec<f64>], sigma: f64) -> f64 {
    let a: Vec<Vec<f64>> = subset.iter().map(|&i| points[i].clone()).collect();
    let wa = vec![1.0 / a.len() as f64; a.len()];
    let wb = vec![1.0 / source.len() as f64; source.len()];
    naive_mmd_sq(&a, &wa, source, &wb, sigma).max(0.0).sqrt()
}

/// Every `k`-subset of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Smallest value of `f` over all `k`-subsets, optionally skipping subsets
/// that hold both labels of an item.
pub fn exhaustive_min(n: usize, k: usize, exclusive: bool, f: impl Fn(&[usize]) -> f64) -> (f64, Vec<usize>) {
    subsets(n, k)
        .into_iter()
        .filter(|s| !exclusive || s.windows(2).all(|p| p[0] / 2 != p[1] / 2))
        .map(|s| (f(&s), s))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one subset")
}

/// All permutations of `0..n` (Heap's algorithm).
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut a: Vec<usize> = (0..n).collect();
    let mut out = vec![a.clone()];
    let mut c = vec![0; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            out.push(a.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// Minimum-cost perfect matching between two equally sized point sets with
/// uniform mass, divided by the size. This is W1 between the two empirical
/// measures (Birkhoff).
pub fn assignment_w1(cost: &[Vec<f64>]) -> f64 {
    let n = cost.len();
    permutations(n).iter().map(|p| (0..n).map(|i| cost[i][p[i]]).sum::<f64>()).fold(f64::INFINITY, f64::min) / n as f64
}

/// W1 on the line between two uniform empirical measures of possibly
/// different sizes: replicate both to `lcm` atoms and pair them in sorted
/// order.
pub fn sorted_coupling_w1(a: &[f64], b: &[f64]) -> f64 {
    let l = lcm(a.len(), b.len());
    let expand = |v: &[f64]| {
        let mut out: Vec<f64> = v.iter().flat_map(|&x| std::iter::repeat(x).take(l / v.len())).collect();
        out.sort_by(f64::total_cmp);
        out
    };
    let (ea, eb) = (expand(a), expand(b));
    ea.iter().zip(&eb).map(|(x, y)| (x - y).abs()).sum::<f64>() / l as f64
}

pub fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// Exact W1 between integer-mass measures: `counts_a[i]` atoms at point `i`
/// and `counts_b[j]` at point `j`, both summing to `total`. Expands into
/// unit atoms and solves the assignment by brute force.
pub fn integer_mass_w1(counts_a: &[usize], counts_b: &[usize], cost: &[Vec<f64>]) -> f64 {
    let ea: Vec<usize> = counts_a.iter().enumerate().flat_map(|(i, &c)| std::iter::repeat(i).take(c)).collect();
    let eb: Vec<usize> = counts_b.iter().enumerate().flat_map(|(j, &c)| std::iter::repeat(j).take(c)).collect();
    assert_eq!(ea.len(), eb.len());
    let expanded: Vec<Vec<f64>> = ea.iter().map(|&i| eb.iter().map(|&j| cost[i][j]).collect()).collect();
    assignment_w1(&expanded)
}

/// Every vector of nonnegative integers of length `len` with entries at most
/// `cap` summing to `total`.
pub fn bounded_compositions(len: usize, cap: usize, total: usize) -> Vec<Vec<usize>> {
    fn go(i: usize, len: usize, cap: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == len {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        if left > cap * (len - i) {
            return;
        }
        for c in 0..=cap.min(left) {
            cur.push(c);
            go(i + 1, len, cap, left - c, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, len, cap, total, &mut Vec::new(), &mut out);
    out
}

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn random_points(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
}

/// Two-sided binomial check: `hits` is within `z` standard deviations of
/// `n p`.
pub fn within_binomial(hits: usize, n: usize, p: f64, z: f64) -> bool {
    let mean = n as f64 * p;
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    (hits as f64 - mean).abs() <= z * sd.max(1e-12)
}

/// `<workspace>/data/ml-100k`, or `$PRETENDER_DATA/ml-100k`, if it exists.
pub fn movielens_dir() -> Option<PathBuf> {
    let root = std::env::var_os("PRETENDER_DATA")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"));
    let dir = root.join("ml-100k");
    dir.join("u.data").is_file().then_some(dir)
}

pub fn data_root() -> PathBuf {
    std::env::var_os("PRETENDER_DATA")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}
