use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const DEFAULT_COMPONENTS: usize = 50;

/// Above this raw dimension the covariance is never formed; a randomized
/// subspace iteration works on the rows directly.
const DENSE_LIMIT: usize = 1024;
const OVERSAMPLE: usize = 20;
const SUBSPACE_ITERATIONS: usize = 10;

/// Raw feature rows, either dense or as sorted `(column, value)` lists.
#[derive(Clone, Debug)]
pub enum RawFeatures {
    Dense(Matrix),
    Sparse { dim: usize, rows: Vec<Vec<(usize, f64)>> },
}

impl RawFeatures {
    pub fn len(&self) -> usize {
        match self {
            RawFeatures::Dense(m) => m.rows(),
            RawFeatures::Sparse { rows, .. } => rows.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        match self {
            RawFeatures::Dense(m) => m.cols(),
            RawFeatures::Sparse { dim, .. } => *dim,
        }
    }

    fn for_each(&self, i: usize, mut f: impl FnMut(usize, f64)) {
        match self {
            RawFeatures::Dense(m) => m.row(i).iter().enumerate().for_each(|(j, &v)| f(j, v)),
            RawFeatures::Sparse { rows, .. } => rows[i].iter().for_each(|&(j, v)| f(j, v)),
        }
    }

    fn mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim()];
        for i in 0..self.len() {
            self.for_each(i, |j, v| mean[j] += v);
        }
        let n = self.len() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    /// `(X - 1 μᵀ) V` for `V` of shape `dim × m`.
    fn centered_times(&self, mean: &[f64], v: &DMatrix<f64>) -> DMatrix<f64> {
        let m = v.ncols();
        let shift = v.tr_mul(&nalgebra::DVector::from_column_slice(mean));
        let mut out = DMatrix::zeros(self.len(), m);
        for i in 0..self.len() {
            self.for_each(i, |j, x| {
                if x != 0.0 {
                    for c in 0..m {
                        out[(i, c)] += x * v[(j, c)];
                    }
                }
            });
            for c in 0..m {
                out[(i, c)] -= shift[c];
            }
        }
        out
    }

    /// `(X - 1 μᵀ)ᵀ Z` for `Z` of shape `n × m`.
    fn centered_transpose_times(&self, mean: &[f64], z: &DMatrix<f64>) -> DMatrix<f64> {
        let m = z.ncols();
        let mut out = DMatrix::zeros(self.dim(), m);
        for i in 0..self.len() {
            self.for_each(i, |j, x| {
                if x != 0.0 {
                    for c in 0..m {
                        out[(j, c)] += x * z[(i, c)];
                    }
                }
            });
        }
        for c in 0..m {
            let col_sum: f64 = z.column(c).iter().sum();
            for j in 0..self.dim() {
                out[(j, c)] -= mean[j] * col_sum;
            }
        }
        out
    }

    fn covariance(&self, mean: &[f64]) -> DMatrix<f64> {
        let d = self.dim();
        let mut cov = DMatrix::zeros(d, d);
        let mut entries = Vec::new();
        for i in 0..self.len() {
            entries.clear();
            self.for_each(i, |j, v| {
                if v != 0.0 {
                    entries.push((j, v));
                }
            });
            for &(a, va) in &entries {
                for &(b, vb) in &entries {
                    cov[(a, b)] += va * vb;
                }
            }
        }
        let n = self.len() as f64;
        for a in 0..d {
            for b in 0..d {
                cov[(a, b)] = cov[(a, b)] / n - mean[a] * mean[b];
            }
        }
        cov
    }

    fn total_variance(&self, mean: &[f64]) -> f64 {
        let mut sq = vec![0.0; self.dim()];
        for i in 0..self.len() {
            self.for_each(i, |j, v| sq[j] += v * v);
        }
        let n = self.len() as f64;
        sq.iter().zip(mean).map(|(s, m)| (s / n - m * m).max(0.0)).sum()
    }
}

/// A fitted projection onto the leading principal directions, scaled so
/// every retained coordinate has unit variance on the training rows.
#[derive(Clone, Debug)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// One orthonormal direction per row, `k × d_raw`.
    pub components: Matrix,
    /// Covariance eigenvalues (population normalization), descending.
    pub eigenvalues: Vec<f64>,
    /// `1/sqrt(λ)`, or 0 for a direction without variance.
    pub scales: Vec<f64>,
    pub total_variance: f64,
}

impl PcaModel {
    pub fn num_components(&self) -> usize {
        self.components.rows()
    }

    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| if self.total_variance > 0.0 { l / self.total_variance } else { 0.0 }).collect()
    }
}

/// Fits `k` principal components. Variance uses the `1/n` normalization.
pub fn fit_pca(features: &RawFeatures, k: usize) -> Result<PcaModel> {
    if features.is_empty() {
        return Err(Error::Empty("PCA training rows"));
    }
    let d = features.dim();
    if k == 0 || k > d {
        return Err(Error::Config(format!("cannot keep {k} principal components of {d}-dimensional data")));
    }
    let mean = features.mean();
    let (eigenvalues, vectors) = if d <= DENSE_LIMIT {
        leading_eigenpairs(features.covariance(&mean), k)
    } else {
        randomized(features, &mean, k)
    };

    let largest = eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let floor = largest * 1e-12;
    let mut scales = Vec::with_capacity(k);
    let mut eig = Vec::with_capacity(k);
    for (c, &l) in eigenvalues.iter().enumerate() {
        if l <= floor || l <= 0.0 {
            log::warn!("principal component {c} has no variance; its coordinate is fixed at 0");
            scales.push(0.0);
            eig.push(l.max(0.0));
        } else {
            scales.push(1.0 / l.sqrt());
            eig.push(l);
        }
    }
    let components = Matrix::from_fn(k, d, |c, j| vectors[(j, c)]);
    Ok(PcaModel { total_variance: features.total_variance(&mean), mean, components, eigenvalues: eig, scales })
}

fn leading_eigenpairs(cov: DMatrix<f64>, k: usize) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let d = eig.eigenvectors.nrows();
    let mut vectors = DMatrix::zeros(d, k);
    let mut values = Vec::with_capacity(k);
    for (c, &src) in order.iter().take(k).enumerate() {
        let mut col = eig.eigenvectors.column(src).clone_owned();
        // Fix the sign so the largest-magnitude entry is positive.
        let pivot = col.iter().copied().fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        if pivot < 0.0 {
            col.neg_mut();
        }
        vectors.set_column(c, &col);
        values.push(eig.eigenvalues[src]);
    }
    (values, vectors)
}

fn orthonormal_columns(y: DMatrix<f64>) -> DMatrix<f64> {
    y.qr().q()
}

fn randomized(features: &RawFeatures, mean: &[f64], k: usize) -> (Vec<f64>, DMatrix<f64>) {
    let d = features.dim();
    let n = features.len() as f64;
    let m = (k + OVERSAMPLE).min(d);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5_eed0_f9ca);
    let start = DMatrix::from_fn(d, m, |_, _| StandardNormal.sample(&mut rng));
    let mut q = orthonormal_columns(start);
    for _ in 0..SUBSPACE_ITERATIONS {
        let z = features.centered_times(mean, &q);
        let y = features.centered_transpose_times(mean, &z) / n;
        q = orthonormal_columns(y);
    }
    let z = features.centered_times(mean, &q);
    let small = z.tr_mul(&z) / n;
    let (values, rot) = leading_eigenpairs(small, k);
    (values, q * rot)
}

/// Projects rows onto the model's components and rescales them.
pub fn apply_pca(model: &PcaModel, features: &RawFeatures) -> Result<Matrix> {
    if features.dim() != model.mean.len() {
        return Err(Error::DimensionMismatch { expected: model.mean.len(), found: features.dim() });
    }
    let k = model.num_components();
    let shift: Vec<f64> =
        (0..k).map(|c| model.components.row(c).iter().zip(&model.mean).map(|(a, b)| a * b).sum()).collect();
    let mut out = Matrix::zeros(features.len(), k);
    for i in 0..features.len() {
        let row = out.row_mut(i);
        features.for_each(i, |j, x| {
            if x != 0.0 {
                for (c, slot) in row.iter_mut().enumerate() {
                    *slot += x * model.components.get(c, j);
                }
            }
        });
        for c in 0..k {
            row[c] = (row[c] - shift[c]) * model.scales[c];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn variance(col: impl Iterator<Item = f64> + Clone) -> f64 {
        let n = col.clone().count() as f64;
        let mean = col.clone().sum::<f64>() / n;
        col.map(|v| (v - mean).powi(2)).sum::<f64>() / n
    }

    #[test]
    fn points_on_diagonal() {
        let data = Matrix::from_fn(20, 2, |i, _| i as f64 * 0.3 - 1.0);
        let model = fit_pca(&RawFeatures::Dense(data), 2).unwrap();
        let ratio = model.explained_variance_ratio();
        assert!((ratio[0] - 1.0).abs() < 1e-12);
        assert!(model.eigenvalues[1].abs() < 1e-12);
        assert_eq!(model.scales[1], 0.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((model.components.get(0, 0) - s).abs() < 1e-12);
        assert!((model.components.get(0, 1) - s).abs() < 1e-12);
    }

    #[test]
    fn rejects_too_many_components() {
        let data = Matrix::zeros(5, 3);
        assert!(fit_pca(&RawFeatures::Dense(data), 4).is_err());
    }

    #[test]
    fn sparse_and_dense_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dense = Matrix::from_fn(40, 6, |_, _| if rng.gen_bool(0.4) { rng.gen_range(0..4) as f64 } else { 0.0 });
        let rows = (0..40)
            .map(|i| (0..6).filter(|&j| dense.get(i, j) != 0.0).map(|j| (j, dense.get(i, j))).collect())
            .collect();
        let sparse = RawFeatures::Sparse { dim: 6, rows };
        let dense = RawFeatures::Dense(dense);
        let a = fit_pca(&dense, 3).unwrap();
        let b = fit_pca(&sparse, 3).unwrap();
        for c in 0..3 {
            assert!((a.eigenvalues[c] - b.eigenvalues[c]).abs() < 1e-10);
        }
        let pa = apply_pca(&a, &dense).unwrap();
        let pb = apply_pca(&b, &sparse).unwrap();
        for (x, y) in pa.as_slice().iter().zip(pb.as_slice()) {
            assert!((x - y).abs() < 1e-8);
        }
        for c in 0..3 {
            assert!((variance((0..40).map(|i| pa.get(i, c))) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn randomized_path_matches_exact_spectrum() {
        // Wide sparse data with a few strong directions.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let dim = DENSE_LIMIT + 200;
        let rows: Vec<Vec<(usize, f64)>> = (0..300)
            .map(|_| {
                let mut r: Vec<(usize, f64)> = Vec::new();
                for (j, w) in [(3usize, 3.0), (700, 2.0), (1100, 1.5)] {
                    r.push((j, w * rng.gen::<f64>()));
                }
                for _ in 0..5 {
                    r.push((rng.gen_range(0..dim), 0.1 * rng.gen::<f64>()));
                }
                r.sort_by_key(|e| e.0);
                r.dedup_by_key(|e| e.0);
                r
            })
            .collect();
        let sparse = RawFeatures::Sparse { dim, rows };
        let model = fit_pca(&sparse, 3).unwrap();
        let mean = sparse.mean();
        let exact = leading_eigenpairs(sparse.covariance(&mean), 3).0;
        for c in 0..3 {
            assert!((model.eigenvalues[c] - exact[c]).abs() < 1e-6 * exact[0], "{c}");
        }
        let p = apply_pca(&model, &sparse).unwrap();
        for c in 0..3 {
            assert!((variance((0..300).map(|i| p.get(i, c))) - 1.0).abs() < 1e-6);
        }
    }
}
