//! Reference selectors: uniformly random candidates, and the candidates
//! nearest to any source point.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{squared_distance, Matrix};
use crate::model::{check_k, CandidatePool, PreferenceSet, Selection};

/// Uniform sample of `k` candidates without replacement.
///
/// With `exclusive`, `k` distinct items are sampled and each gets a fair
/// coin for its label, which is uniform over label-exclusive K-sets.
pub fn random_select(pool_len: usize, k: usize, seed: u64, exclusive: bool) -> Result<Selection> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if exclusive {
        let items = pool_len / 2;
        check_k(k, items)?;
        let picked = sample(&mut rng, items, k).into_iter().map(|i| 2 * i + usize::from(rng.gen_bool(0.5)));
        let picked: Vec<usize> = picked.collect();
        return Selection::new(picked, k, pool_len);
    }
    check_k(k, pool_len)?;
    Selection::new(sample(&mut rng, pool_len, k).into_vec(), k, pool_len)
}

/// Distance from each candidate to its nearest source point.
pub fn nearest_source_distances(candidates: &Matrix, source: &Matrix) -> Result<Vec<f64>> {
    if candidates.cols() != source.cols() {
        return Err(Error::DimensionMismatch { expected: candidates.cols(), found: source.cols() });
    }
    Ok((0..candidates.rows())
        .map(|i| {
            (0..source.rows())
                .map(|j| squared_distance(candidates.row(i), source.row(j)))
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .collect())
}

/// The `k` candidates closest to the source set, ties by index.
pub fn greedy_nearest_points(candidates: &Matrix, source: &Matrix, k: usize, exclusive: bool) -> Result<Selection> {
    let n = candidates.rows();
    check_k(k, if exclusive { n / 2 } else { n })?;
    let dist = nearest_source_distances(candidates, source)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
    let mut taken = vec![false; n];
    let mut picked = Vec::with_capacity(k);
    for j in order {
        if picked.len() == k {
            break;
        }
        if exclusive && taken[CandidatePool::sibling(j)] {
            continue;
        }
        taken[j] = true;
        picked.push(j);
    }
    Selection::new(picked, k, n)
}

/// Greedy-nearest on label-augmented embeddings.
pub fn greedy_nearest(pool: &CandidatePool, source: &PreferenceSet, k: usize, exclusive: bool) -> Result<Selection> {
    greedy_nearest_points(pool.embeddings(), source.embeddings(), k, exclusive)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_pool_selects_everything() {
        let s = random_select(6, 6, 3, false).unwrap();
        assert_eq!(s.indices(), &[0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn random_is_seeded() {
        assert_eq!(random_select(50, 7, 11, false).unwrap(), random_select(50, 7, 11, false).unwrap());
        assert_ne!(random_select(50, 7, 11, false).unwrap(), random_select(50, 7, 12, false).unwrap());
    }

    #[test]
    fn exclusive_random_respects_items() {
        for seed in 0..100 {
            let s = random_select(20, 10, seed, true).unwrap();
            assert!(s.is_label_exclusive());
            assert_eq!(s.len(), 10);
        }
        assert!(random_select(20, 11, 0, true).is_err());
    }

    #[test]
    fn nearest_example() {
        // Distances to the single source point at 0: 2.0, 0.5, 1.0.
        let cand = Matrix::from_rows(&[[2.0], [0.5], [-1.0]]).unwrap();
        let src = Matrix::from_rows(&[[0.0]]).unwrap();
        let s = greedy_nearest_points(&cand, &src, 1, false).unwrap();
        assert_eq!(s.indices(), &[1]);
    }

    #[test]
    fn duplicate_of_source_is_picked_first() {
        let cand = Matrix::from_rows(&[[5.0, 5.0], [1.0, 2.0], [0.1, 0.1]]).unwrap();
        let src = Matrix::from_rows(&[[1.0, 2.0], [9.0, 9.0]]).unwrap();
        let s = greedy_nearest_points(&cand, &src, 1, false).unwrap();
        assert_eq!(s.indices(), &[1]);
    }

    #[test]
    fn too_large_k_rejected() {
        let cand = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        assert!(greedy_nearest_points(&cand, &cand, 3, false).is_err());
        assert!(random_select(2, 3, 0, false).is_err());
    }
}
