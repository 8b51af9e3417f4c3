//! Gaussian kernel, kernel blocks between candidates and source points, and
//! the closed-form squared MMD of a weighted candidate measure.
//!
//! With candidate weights `w` and a uniform source measure over `n` points,
//!
//! ```text
//! MMD²(w) = wᵀ K_TT w − (2/n) 1ᵀ K_ST w + (1/n²) 1ᵀ K_SS 1
//! ```
//!
//! `K_SS` is never stored; only its normalized sum enters the objective.

use std::collections::HashMap;
use std::ops::Deref;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{dot, squared_distance, Matrix};
use crate::model::{CandidatePool, CappedWeights, PreferenceSet};

/// Convention string written into run manifests.
pub const KERNEL_CONVENTION: &str = "k(x,y) = exp(-||x-y||^2 / (2 sigma^2))";

/// Gaussian kernel parameters. `bound` is `sup_x k(x, x)`, which is 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec {
    pub sigma: f64,
    pub bound: f64,
}

impl KernelSpec {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Config(format!("bandwidth must be positive, got {sigma}")));
        }
        Ok(Self { sigma, bound: 1.0 })
    }

    #[inline]
    fn eval_sq(&self, sq_dist: f64) -> f64 {
        (-sq_dist / (2.0 * self.sigma * self.sigma)).exp()
    }
}

/// `exp(−‖x − x'‖² / (2σ²))`.
pub fn gauss_kernel(x: &[f64], y: &[f64], spec: &KernelSpec) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    Ok(spec.eval_sq(squared_distance(x, y)))
}

/// Gram matrix of `a` against `b`.
pub fn cross_gram(a: &Matrix, b: &Matrix, spec: &KernelSpec) -> Result<Matrix> {
    if a.cols() != b.cols() {
        return Err(Error::DimensionMismatch { expected: a.cols(), found: b.cols() });
    }
    Ok(Matrix::from_fn(a.rows(), b.rows(), |i, j| spec.eval_sq(squared_distance(a.row(i), b.row(j)))))
}

/// Symmetric Gram matrix of one point cloud.
pub fn gram(a: &Matrix, spec: &KernelSpec) -> Matrix {
    let n = a.rows();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        out.set(i, i, 1.0);
        for j in 0..i {
            let v = spec.eval_sq(squared_distance(a.row(i), a.row(j)));
            out.set(i, j, v);
            out.set(j, i, v);
        }
    }
    out
}

/// Pools up to this many candidates keep their Gram matrix in memory.
pub const DENSE_GRAM_LIMIT: usize = 6000;
/// Byte budget for cached rows of an on-demand Gram matrix.
const ROW_CACHE_BYTES: usize = 256 << 20;

/// The candidate Gram matrix `K_TT`.
///
/// Small pools store it densely. Large pools keep only the candidate points
/// and the row sums, computing rows when asked and caching a bounded number
/// of them; the optimizer and the repair step only ever touch the rows of
/// candidates they select.
#[derive(Debug)]
pub struct CandidateGram {
    storage: Storage,
    row_sums: Vec<f64>,
}

#[derive(Debug)]
enum Storage {
    Dense(Matrix),
    OnDemand { points: Matrix, spec: KernelSpec, cache: Mutex<HashMap<usize, Arc<[f64]>>> },
}

/// One row of a [`CandidateGram`].
pub enum GramRow<'a> {
    Borrowed(&'a [f64]),
    Shared(Arc<[f64]>),
}

impl Deref for GramRow<'_> {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        match self {
            GramRow::Borrowed(r) => r,
            GramRow::Shared(r) => r,
        }
    }
}

impl CandidateGram {
    /// Dense below [`DENSE_GRAM_LIMIT`] candidates, on demand above.
    pub fn new(points: &Matrix, spec: &KernelSpec) -> Self {
        if points.rows() <= DENSE_GRAM_LIMIT {
            Self::dense(points, spec)
        } else {
            Self::on_demand(points, spec)
        }
    }

    pub fn dense(points: &Matrix, spec: &KernelSpec) -> Self {
        Self::from_matrix(gram(points, spec))
    }

    /// Wraps a precomputed symmetric Gram matrix.
    pub fn from_matrix(matrix: Matrix) -> Self {
        Self { row_sums: matrix.row_sums(), storage: Storage::Dense(matrix) }
    }

    pub fn on_demand(points: &Matrix, spec: &KernelSpec) -> Self {
        let n = points.rows();
        let mut row_sums = vec![0.0; n];
        for i in 0..n {
            row_sums[i] += spec.eval_sq(0.0);
            for j in 0..i {
                let v = spec.eval_sq(squared_distance(points.row(i), points.row(j)));
                row_sums[i] += v;
                row_sums[j] += v;
            }
        }
        Self {
            row_sums,
            storage: Storage::OnDemand { points: points.clone(), spec: *spec, cache: Mutex::new(HashMap::new()) },
        }
    }

    pub fn len(&self) -> usize {
        self.row_sums.len()
    }

    pub fn is_empty(&self) -> bool {
        self.row_sums.is_empty()
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    pub fn row_sums(&self) -> &[f64] {
        &self.row_sums
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense(m) => m.get(i, j),
            Storage::OnDemand { points, spec, .. } => spec.eval_sq(squared_distance(points.row(i), points.row(j))),
        }
    }

    pub fn row(&self, j: usize) -> GramRow<'_> {
        match &self.storage {
            Storage::Dense(m) => GramRow::Borrowed(m.row(j)),
            Storage::OnDemand { points, spec, cache } => {
                let mut cache = cache.lock().unwrap_or_else(|e| e.into_inner());
                if let Some(row) = cache.get(&j) {
                    return GramRow::Shared(Arc::clone(row));
                }
                let n = points.rows();
                if (cache.len() + 1) * n * std::mem::size_of::<f64>() > ROW_CACHE_BYTES {
                    cache.clear();
                }
                let row: Arc<[f64]> =
                    (0..n).map(|i| spec.eval_sq(squared_distance(points.row(i), points.row(j)))).collect();
                cache.insert(j, Arc::clone(&row));
                GramRow::Shared(row)
            }
        }
    }
}

/// Kernel blocks for one (pool, source) pair.
///
/// `tt` is behind an `Arc` so runs over many users that share one target
/// pool can reuse it.
#[derive(Clone, Debug)]
pub struct KernelMatrices {
    tt: Arc<CandidateGram>,
    st: Matrix,
    /// `(1/n) K_ST 1`, the kernel mean embedding of the source evaluated at
    /// each candidate.
    source_mean: Vec<f64>,
    ss_const: f64,
    spec: KernelSpec,
}

impl KernelMatrices {
    pub fn from_points(candidates: &Matrix, source: &Matrix, spec: &KernelSpec) -> Result<Self> {
        let tt = Arc::new(CandidateGram::new(candidates, spec));
        Self::with_shared_tt(tt, candidates, source, spec)
    }

    /// Reuses a precomputed candidate Gram matrix.
    pub fn with_shared_tt(
        tt: Arc<CandidateGram>,
        candidates: &Matrix,
        source: &Matrix,
        spec: &KernelSpec,
    ) -> Result<Self> {
        if tt.len() != candidates.rows() {
            return Err(Error::DimensionMismatch { expected: candidates.rows(), found: tt.len() });
        }
        if source.rows() == 0 {
            return Err(Error::Empty("source points"));
        }
        let st = cross_gram(candidates, source, spec)?;
        let n = source.rows() as f64;
        let source_mean = st.row_sums().into_iter().map(|s| s / n).collect();
        let mut ss = 0.0;
        for i in 0..source.rows() {
            ss += 1.0;
            for j in 0..i {
                ss += 2.0 * spec.eval_sq(squared_distance(source.row(i), source.row(j)));
            }
        }
        Ok(Self { tt, st, source_mean, ss_const: ss / (n * n), spec: *spec })
    }

    pub fn tt(&self) -> &CandidateGram {
        &self.tt
    }

    pub fn shared_tt(&self) -> Arc<CandidateGram> {
        Arc::clone(&self.tt)
    }

    pub fn st(&self) -> &Matrix {
        &self.st
    }

    pub fn source_mean(&self) -> &[f64] {
        &self.source_mean
    }

    /// `(1/n²) 1ᵀ K_SS 1`.
    pub fn ss_const(&self) -> f64 {
        self.ss_const
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    /// Number of candidates `2m`.
    pub fn num_candidates(&self) -> usize {
        self.tt.len()
    }

    pub fn num_source(&self) -> usize {
        self.st.cols()
    }

    /// `wᵀ K_TT w − 2 hᵀ w + ss` for arbitrary nonnegative `w`, unclamped.
    pub fn objective_raw(&self, w: &[f64]) -> f64 {
        let kw = self.tt_times(w);
        dot(w, &kw) - 2.0 * dot(&self.source_mean, w) + self.ss_const
    }

    /// `K_TT w`, skipping zero entries of `w`.
    pub fn tt_times(&self, w: &[f64]) -> Vec<f64> {
        let n = self.num_candidates();
        let mut out = vec![0.0; n];
        for (j, &wj) in w.iter().enumerate() {
            if wj != 0.0 {
                for (o, k) in out.iter_mut().zip(self.tt.row(j).iter()) {
                    *o += wj * k;
                }
            }
        }
        out
    }

    /// `(a − b)ᵀ K_TT (a − b)`: squared RKHS distance between two weighted
    /// candidate embeddings.
    pub fn rkhs_distance_sq(&self, a: &[f64], b: &[f64]) -> f64 {
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        dot(&diff, &self.tt_times(&diff)).max(0.0)
    }

    /// Squared MMD of the uniform measure on `indices`.
    pub fn selection_mmd_squared(&self, indices: &[usize]) -> f64 {
        let s = indices.len() as f64;
        let mut quad = 0.0;
        let mut lin = 0.0;
        for &a in indices {
            let row = self.tt.row(a);
            quad += indices.iter().map(|&b| row[b]).sum::<f64>();
            lin += self.source_mean[a];
        }
        clamp_small_negative(quad / (s * s) - 2.0 * lin / s + self.ss_const)
    }

    /// Smallest eigenvalue of a random principal `size × size` minor of
    /// `K_TT`; a PSD spot check.
    pub fn psd_spot_check(&self, size: usize, seed: u64) -> f64 {
        let n = self.num_candidates();
        let size = size.min(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let idx = sample(&mut rng, n, size).into_vec();
        let minor = DMatrix::from_fn(size, size, |i, j| self.tt.get(idx[i], idx[j]));
        minor.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Kernel blocks for a candidate pool and a preference set, computed on the
/// label-augmented embeddings.
pub fn build_matrices(pool: &CandidatePool, source: &PreferenceSet, spec: &KernelSpec) -> Result<KernelMatrices> {
    KernelMatrices::from_points(pool.embeddings(), source.embeddings(), spec)
}

/// Full squared MMD including the source constant; values in `[−1e−10, 0)`
/// are rounding noise and clamp to zero.
pub fn mmd_squared(w: &CappedWeights, mats: &KernelMatrices) -> f64 {
    clamp_small_negative(mats.objective_raw(w.as_slice()))
}

pub fn mmd(w: &CappedWeights, mats: &KernelMatrices) -> f64 {
    mmd_squared(w, mats).max(0.0).sqrt()
}

/// Gradient of the quadratic program, `2 K_TT w − (2/n) K_ST 1`.
pub fn mmd_gradient(w: &CappedWeights, mats: &KernelMatrices) -> Vec<f64> {
    let kw = mats.tt_times(w.as_slice());
    kw.iter().zip(mats.source_mean()).map(|(a, h)| 2.0 * a - 2.0 * h).collect()
}

#[inline]
pub(crate) fn clamp_small_negative(v: f64) -> f64 {
    if (-1e-10..0.0).contains(&v) {
        0.0
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Label;
    use rand::Rng;

    fn spec() -> KernelSpec {
        KernelSpec::gaussian(1.0).unwrap()
    }

    #[test]
    fn kernel_values() {
        let s = spec();
        assert_eq!(gauss_kernel(&[0.3, 1.0], &[0.3, 1.0], &s).unwrap(), 1.0);
        let v = gauss_kernel(&[0.0], &[1.0], &s).unwrap();
        assert!((v - 0.606_530_659_712_633_4).abs() < 1e-15);
        assert!(gauss_kernel(&[0.0], &[1.0, 2.0], &s).is_err());
        assert!(KernelSpec::gaussian(0.0).is_err());
    }

    #[test]
    fn kernel_is_symmetric_and_bounded() {
        let s = KernelSpec::gaussian(0.7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let y: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let a = gauss_kernel(&x, &y, &s).unwrap();
            let b = gauss_kernel(&y, &x, &s).unwrap();
            assert_eq!(a, b);
            assert!(a > 0.0 && a <= s.bound);
        }
    }

    #[test]
    fn one_point_pool_and_source() {
        let pool = CandidatePool::build(vec![("a".into(), vec![0.2, 0.4])], 10.0).unwrap();
        let source = PreferenceSet::from_raw([("a", vec![0.2, 0.4], Label::Up)], 10.0).unwrap();
        let m = build_matrices(&pool, &source, &spec()).unwrap();
        let cross = (-50.0f64).exp();
        assert_eq!(m.tt().get(0, 0), 1.0);
        assert_eq!(m.tt().get(1, 1), 1.0);
        assert!((m.tt().get(0, 1) - cross).abs() < 1e-300);
        assert_eq!(m.ss_const(), 1.0);
    }

    #[test]
    fn identical_source_points_give_unit_constant() {
        let pool = CandidatePool::build(vec![("a".into(), vec![0.0])], 10.0).unwrap();
        let source =
            PreferenceSet::from_raw([("x", vec![1.5], Label::Down), ("y", vec![1.5], Label::Down)], 10.0).unwrap();
        let m = build_matrices(&pool, &source, &spec()).unwrap();
        assert_eq!(m.ss_const(), 1.0);
    }

    #[test]
    fn narrow_bandwidth_kills_off_diagonals() {
        let pts = Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 3.0]]).unwrap();
        let s = KernelSpec::gaussian(1e-3).unwrap();
        let g = gram(&pts, &s);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!(g.get(i, j) < 1e-300);
                }
            }
        }
    }

    #[test]
    fn dirac_measures_one_apart() {
        let cand = Matrix::from_rows(&[[0.0]]).unwrap();
        let src = Matrix::from_rows(&[[1.0]]).unwrap();
        let m = KernelMatrices::from_points(&cand, &src, &spec()).unwrap();
        let w = CappedWeights::new(vec![1.0], 1).unwrap();
        let expected = 2.0 - 2.0 * (-0.5f64).exp();
        assert!((mmd_squared(&w, &m) - expected).abs() < 1e-15);
        assert!((expected - 0.786_938_680_574_733_2).abs() < 1e-15);
    }

    #[test]
    fn identical_measures_have_zero_mmd() {
        let pts = Matrix::from_rows(&[[0.0, 1.0], [2.0, -1.0], [0.5, 0.5]]).unwrap();
        let m = KernelMatrices::from_points(&pts, &pts, &spec()).unwrap();
        let w = CappedWeights::new(vec![1.0 / 3.0; 3], 3).unwrap();
        assert!(mmd_squared(&w, &m).abs() < 1e-12);
        assert!(m.selection_mmd_squared(&[0, 1, 2]).abs() < 1e-12);
    }

    #[test]
    fn identity_gram_gradient() {
        let m = 3;
        let cand = Matrix::from_fn(2 * m, 1, |i, _| 1e6 * i as f64);
        let src = Matrix::from_rows(&[[-1e9]]).unwrap();
        let mats = KernelMatrices::from_points(&cand, &src, &spec()).unwrap();
        let w = CappedWeights::uniform(2 * m, 2).unwrap();
        let g = mmd_gradient(&w, &mats);
        for gj in g {
            assert!((gj - 1.0 / m as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn psd_minor_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts = Matrix::from_fn(40, 3, |_, _| rng.gen_range(-1.0..1.0));
        let mats = KernelMatrices::from_points(&pts, &pts, &spec()).unwrap();
        for seed in 0..5 {
            assert!(mats.psd_spot_check(8, seed) >= -1e-8);
        }
    }

    #[test]
    fn on_demand_gram_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pts = Matrix::from_fn(30, 3, |_, _| rand::Rng::gen_range(&mut rng, -1.0..1.0));
        let spec = spec();
        let dense = CandidateGram::dense(&pts, &spec);
        let lazy = CandidateGram::on_demand(&pts, &spec);
        assert!(dense.is_dense() && !lazy.is_dense());
        for i in 0..30 {
            assert!((dense.row_sums()[i] - lazy.row_sums()[i]).abs() < 1e-12);
            for _ in 0..2 {
                for (a, b) in dense.row(i).iter().zip(lazy.row(i).iter()) {
                    assert!((a - b).abs() < 1e-15);
                }
            }
            assert_eq!(dense.get(i, 29 - i), lazy.get(i, 29 - i));
        }
    }
}
