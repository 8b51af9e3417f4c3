//! Frank-Wolfe on the MMD quadratic program over the capped simplex.
//!
//! The vertices of `{w : Σ w = 1, 0 ≤ w ≤ 1/K}` are the uniform `1/K`
//! weights on K-subsets, so the linear minimization oracle is a partial sort
//! of the gradient. Iterates use the fixed step `2 / (t + 2)` starting from
//! `1 / (2m)`; the best iterate seen is returned because that schedule is
//! not monotone.

use std::cmp::Ordering;

use crate::error::Result;
use crate::kernels::KernelMatrices;
use crate::linalg::dot;
use crate::model::{check_k, CappedWeights, BOX_TOL, SUM_TOL};

/// Per-run record of the optimizer.
#[derive(Clone, Debug)]
pub struct FwTrace {
    /// Objective (squared MMD) at `w_0, w_1, ..., w_L`.
    pub objectives: Vec<f64>,
    pub best_objective: f64,
    pub best_iteration: usize,
    /// Frank-Wolfe gap `⟨∇f(w), w − s⟩` at the returned iterate. The true
    /// continuous optimum is at least `best_objective − duality_gap`.
    pub duality_gap: f64,
    pub iterations: usize,
}

impl FwTrace {
    /// Running minimum of the objective sequence.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.objectives
            .iter()
            .map(|&v| {
                best = best.min(v);
                best
            })
            .collect()
    }

    /// Certified lower bound on the continuous optimum of the squared MMD.
    pub fn lower_bound(&self) -> f64 {
        (self.best_objective - self.duality_gap).max(0.0)
    }
}

/// Indices of the `k` smallest entries, ties broken by lower index, sorted
/// ascending.
pub(crate) fn smallest_k(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    let cmp = |a: &usize, b: &usize| -> Ordering { values[*a].total_cmp(&values[*b]).then(a.cmp(b)) };
    if k < idx.len() {
        idx.select_nth_unstable_by(k, cmp);
        idx.truncate(k);
    }
    idx.sort_unstable();
    idx
}

/// Exact linear minimization oracle over the capped simplex: weight `1/K` on
/// the K smallest gradient entries.
pub fn lmo_capped_simplex(gradient: &[f64], k: usize) -> Result<CappedWeights> {
    check_k(k, gradient.len())?;
    let support = smallest_k(gradient, k);
    CappedWeights::vertex(gradient.len(), &support, k)
}

/// Runs `iterations` Frank-Wolfe steps and returns the best iterate.
pub fn frank_wolfe(mats: &KernelMatrices, k: usize, iterations: usize) -> Result<(CappedWeights, FwTrace)> {
    let n = mats.num_candidates();
    check_k(k, n)?;
    let inv_k = 1.0 / k as f64;
    let h = mats.source_mean();
    let ss = mats.ss_const();

    let mut w = CappedWeights::uniform(n, k)?.into_vec();
    let mut kw: Vec<f64> = mats.tt().row_sums().iter().map(|s| s / n as f64).collect();
    let objective = |w: &[f64], kw: &[f64]| dot(w, kw) - 2.0 * dot(h, w) + ss;

    let mut objectives = Vec::with_capacity(iterations + 1);
    objectives.push(objective(&w, &kw));
    let mut best_w = w.clone();
    let mut best_kw = kw.clone();
    let mut best_iteration = 0;

    // K_TT s for the current vertex, updated by the symmetric difference
    // with the previous vertex.
    let mut in_vertex = vec![false; n];
    let mut ks = vec![0.0; n];
    let mut grad = vec![0.0; n];

    for t in 0..iterations {
        for j in 0..n {
            grad[j] = 2.0 * kw[j] - 2.0 * h[j];
        }
        let vertex = smallest_k(&grad, k);
        let mut next = vec![false; n];
        for &j in &vertex {
            next[j] = true;
        }
        for j in 0..n {
            if next[j] != in_vertex[j] {
                let sign = if next[j] { inv_k } else { -inv_k };
                for (o, kv) in ks.iter_mut().zip(mats.tt().row(j).iter()) {
                    *o += sign * kv;
                }
            }
        }
        in_vertex = next;

        let gamma = 2.0 / (t as f64 + 2.0);
        for j in 0..n {
            let s_j = if in_vertex[j] { inv_k } else { 0.0 };
            w[j] = (1.0 - gamma) * w[j] + gamma * s_j;
            kw[j] = (1.0 - gamma) * kw[j] + gamma * ks[j];
        }
        assert_feasible(&w, inv_k);

        let f = objective(&w, &kw);
        objectives.push(f);
        if f < objectives[best_iteration] {
            best_iteration = t + 1;
            best_w.copy_from_slice(&w);
            best_kw.copy_from_slice(&kw);
        }
    }

    let grad: Vec<f64> = best_kw.iter().zip(h).map(|(a, b)| 2.0 * a - 2.0 * b).collect();
    let vertex = smallest_k(&grad, k);
    let duality_gap = (dot(&grad, &best_w) - inv_k * vertex.iter().map(|&j| grad[j]).sum::<f64>()).max(0.0);

    let trace =
        FwTrace { best_objective: objectives[best_iteration], best_iteration, duality_gap, iterations, objectives };
    Ok((CappedWeights::from_raw_unchecked(best_w, k), trace))
}

/// Square root of the best Frank-Wolfe objective, clamped at zero: the
/// reported continuous relaxation value for MMD runs.
pub fn continuous_opt_value(mats: &KernelMatrices, k: usize, iterations: usize) -> Result<f64> {
    let (_, trace) = frank_wolfe(mats, k, iterations)?;
    Ok(trace.best_objective.max(0.0).sqrt())
}

fn assert_feasible(w: &[f64], cap: f64) {
    let sum: f64 = w.iter().sum();
    assert!((sum - 1.0).abs() <= SUM_TOL, "Frank-Wolfe iterate left the simplex: sum {sum}");
    assert!(w.iter().all(|&v| v >= 0.0 && v <= cap + BOX_TOL), "Frank-Wolfe iterate left the box [0, {cap}]");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{mmd_gradient, mmd_squared, KernelSpec};
    use crate::linalg::Matrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lmo_picks_two_smallest() {
        let w = lmo_capped_simplex(&[3.0, 1.0, 2.0, 5.0], 2).unwrap();
        assert_eq!(w.as_slice(), &[0.0, 0.5, 0.5, 0.0]);
    }

    #[test]
    fn lmo_breaks_ties_by_index() {
        let w = lmo_capped_simplex(&[7.0; 4], 2).unwrap();
        assert_eq!(w.as_slice(), &[0.5, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn lmo_output_is_a_vertex() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = rng.gen_range(2..30);
            let k = rng.gen_range(1..=n);
            let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let w = lmo_capped_simplex(&g, k).unwrap();
            let at_cap = w.as_slice().iter().filter(|&&v| v == 1.0 / k as f64).count();
            let zero = w.as_slice().iter().filter(|&&v| v == 0.0).count();
            assert_eq!(at_cap, k);
            assert_eq!(zero, n - k);
        }
    }

    fn random_mats(seed: u64, n_cand: usize, n_src: usize) -> KernelMatrices {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cand = Matrix::from_fn(n_cand, 2, |_, _| rng.gen_range(-1.5..1.5));
        let src = Matrix::from_fn(n_src, 2, |_, _| rng.gen_range(-1.0..1.0));
        KernelMatrices::from_points(&cand, &src, &KernelSpec::gaussian(1.0).unwrap()).unwrap()
    }

    #[test]
    fn first_step_lands_on_the_lmo_vertex() {
        let mats = random_mats(1, 10, 4);
        let w0 = CappedWeights::uniform(10, 3).unwrap();
        let s = lmo_capped_simplex(&mmd_gradient(&w0, &mats), 3).unwrap();
        let (_, trace) = frank_wolfe(&mats, 3, 1).unwrap();
        assert!((trace.objectives[1] - mmd_squared(&s, &mats)).abs() < 1e-12);
    }

    #[test]
    fn best_objective_never_exceeds_start() {
        for seed in 0..20 {
            let mats = random_mats(seed, 12, 5);
            let (w, trace) = frank_wolfe(&mats, 3, 50).unwrap();
            assert!(trace.best_objective <= trace.objectives[0]);
            assert!((mmd_squared(&w, &mats) - trace.best_objective.max(0.0)).abs() < 1e-10);
            let b = trace.best_so_far();
            assert!(b.windows(2).all(|p| p[1] <= p[0]));
            assert!(trace.lower_bound() <= trace.best_objective + 1e-12);
        }
    }

    #[test]
    fn exact_representation_reaches_zero() {
        // Source is the uniform measure on 4 of 8 candidates; K = 4 admits it.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cand = Matrix::from_fn(8, 3, |_, _| rng.gen_range(-1.0..1.0));
        let src = cand.select_rows(&[1, 3, 4, 6]);
        let mats = KernelMatrices::from_points(&cand, &src, &KernelSpec::gaussian(1.0).unwrap()).unwrap();
        let v = continuous_opt_value(&mats, 4, 2000).unwrap();
        assert!(v < 1e-4, "value {v}");
    }
}
