//! Domain types shared by every stage: labeled points, the user's source
//! preferences, the doubled target candidate pool, capped-simplex weights and
//! the final exactly-K selection.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Default scale `C` of the label coordinate appended to every embedding.
pub const DEFAULT_LABEL_SCALE: f64 = 10.0;

/// Tolerance on `Σ w = 1`.
pub const SUM_TOL: f64 = 1e-9;
/// Tolerance on `w_j ≤ 1/K`.
pub const BOX_TOL: f64 = 1e-12;

/// Thumbs up (`1`) or thumbs down (`0`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Down = 0,
    Up = 1,
}

impl Label {
    pub fn from_bool(up: bool) -> Self {
        if up {
            Label::Up
        } else {
            Label::Down
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Label::Up => 1.0,
            Label::Down => 0.0,
        }
    }

    pub fn is_up(self) -> bool {
        self == Label::Up
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", *self as u8)
    }
}

/// An item with a label and its label-augmented embedding
/// `[features..., C * label]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledPoint {
    pub item_id: String,
    pub features: Vec<f64>,
    pub label: Label,
    pub embedding: Vec<f64>,
}

impl LabeledPoint {
    pub fn new(item_id: impl Into<String>, features: Vec<f64>, label: Label, label_scale: f64) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::Empty("feature vector"));
        }
        let mut embedding = features.clone();
        embedding.push(label_scale * label.as_f64());
        Ok(Self { item_id: item_id.into(), features, label, embedding })
    }

    pub fn dim(&self) -> usize {
        self.embedding.len()
    }
}

/// The user's labeled history on the source service.
#[derive(Clone, Debug)]
pub struct PreferenceSet {
    points: Vec<LabeledPoint>,
    embeddings: Matrix,
}

impl PreferenceSet {
    pub fn new(points: Vec<LabeledPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("preference set"));
        }
        let rows: Vec<&[f64]> = points.iter().map(|p| p.embedding.as_slice()).collect();
        let embeddings = Matrix::from_rows(&rows)?;
        Ok(Self { points, embeddings })
    }

    /// Builds a preference set from raw `(item_id, features, label)` triples.
    pub fn from_raw<I, S>(items: I, label_scale: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>, Label)>,
        S: Into<String>,
    {
        let points =
            items.into_iter().map(|(id, f, l)| LabeledPoint::new(id, f, l, label_scale)).collect::<Result<Vec<_>>>()?;
        Self::new(points)
    }

    pub fn points(&self) -> &[LabeledPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.embeddings.cols()
    }

    pub fn embeddings(&self) -> &Matrix {
        &self.embeddings
    }

    pub fn count_label(&self, label: Label) -> usize {
        self.points.iter().filter(|p| p.label == label).count()
    }
}

/// Target items doubled into `2m` labeled candidates. Candidate `2j` is item
/// `j` with a thumbs up, candidate `2j + 1` the same item with a thumbs down.
#[derive(Clone, Debug)]
pub struct CandidatePool {
    items: Vec<(String, Vec<f64>)>,
    candidates: Vec<LabeledPoint>,
    embeddings: Matrix,
}

impl CandidatePool {
    pub fn build(items: Vec<(String, Vec<f64>)>, label_scale: f64) -> Result<Self> {
        let Some(first) = items.first() else {
            return Err(Error::Empty("candidate items"));
        };
        let dim = first.1.len();
        let mut candidates = Vec::with_capacity(2 * items.len());
        for (id, features) in &items {
            if features.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: features.len() });
            }
            candidates.push(LabeledPoint::new(id.clone(), features.clone(), Label::Up, label_scale)?);
            candidates.push(LabeledPoint::new(id.clone(), features.clone(), Label::Down, label_scale)?);
        }
        let rows: Vec<&[f64]> = candidates.iter().map(|p| p.embedding.as_slice()).collect();
        let embeddings = Matrix::from_rows(&rows)?;
        Ok(Self { items, candidates, embeddings })
    }

    pub fn items(&self) -> &[(String, Vec<f64>)] {
        &self.items
    }

    pub fn candidates(&self) -> &[LabeledPoint] {
        &self.candidates
    }

    pub fn candidate(&self, j: usize) -> &LabeledPoint {
        &self.candidates[j]
    }

    /// Number of candidates, `2m`.
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn dim(&self) -> usize {
        self.embeddings.cols()
    }

    pub fn embeddings(&self) -> &Matrix {
        &self.embeddings
    }

    /// The same item with the opposite label.
    #[inline]
    pub fn sibling(j: usize) -> usize {
        j ^ 1
    }

    #[inline]
    pub fn item_index(j: usize) -> usize {
        j / 2
    }
}

/// Weights on the capped simplex `{w : Σ w = 1, 0 ≤ w_j ≤ 1/K}`.
#[derive(Clone, Debug, PartialEq)]
pub struct CappedWeights {
    w: Vec<f64>,
    cap_k: usize,
}

impl CappedWeights {
    /// Validates simplex and box constraints.
    pub fn new(w: Vec<f64>, cap_k: usize) -> Result<Self> {
        check_k(cap_k, w.len())?;
        let cap = 1.0 / cap_k as f64;
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::InfeasibleWeights(format!("sum {sum} != 1")));
        }
        if let Some((j, v)) = w.iter().enumerate().find(|(_, &v)| !(v >= 0.0 && v <= cap + BOX_TOL)) {
            return Err(Error::InfeasibleWeights(format!("w[{j}] = {v} outside [0, 1/{cap_k}]")));
        }
        Ok(Self { w, cap_k })
    }

    /// `1/len` everywhere; feasible whenever `K ≤ len`.
    pub fn uniform(len: usize, cap_k: usize) -> Result<Self> {
        check_k(cap_k, len)?;
        Ok(Self { w: vec![1.0 / len as f64; len], cap_k })
    }

    /// Uniform `1/K` on `indices`, a vertex of the capped simplex.
    pub fn vertex(len: usize, indices: &[usize], cap_k: usize) -> Result<Self> {
        if indices.len() != cap_k {
            return Err(Error::InfeasibleWeights(format!("vertex needs {cap_k} indices, got {}", indices.len())));
        }
        let mut w = vec![0.0; len];
        for &j in indices {
            w[j] = 1.0 / cap_k as f64;
        }
        Self::new(w, cap_k)
    }

    pub(crate) fn from_raw_unchecked(w: Vec<f64>, cap_k: usize) -> Self {
        debug_assert!(Self::new(w.clone(), cap_k).is_ok());
        Self { w, cap_k }
    }

    #[cfg(test)]
    pub(crate) fn from_raw_unchecked_for_tests(w: Vec<f64>, cap_k: usize) -> Self {
        Self { w, cap_k }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn cap_k(&self) -> usize {
        self.cap_k
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.w
    }
}

/// `uniform_capped_weights`: the Frank-Wolfe starting point `1/(2m)`.
pub fn uniform_capped_weights(pool: &CandidatePool, k: usize) -> Result<CappedWeights> {
    CappedWeights::uniform(pool.len(), k)
}

pub(crate) fn check_k(k: usize, candidates: usize) -> Result<()> {
    if k == 0 || k > candidates {
        return Err(Error::InvalidK { k, candidates });
    }
    Ok(())
}

/// Exactly `K` distinct candidate indices, kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    indices: Vec<usize>,
}

impl Selection {
    pub fn new(indices: impl IntoIterator<Item = usize>, k: usize, pool_len: usize) -> Result<Self> {
        let set: BTreeSet<usize> = indices.into_iter().collect();
        if set.len() != k {
            return Err(Error::InfeasibleWeights(format!(
                "selection has {} distinct indices, expected {k}",
                set.len()
            )));
        }
        if let Some(&j) = set.iter().next_back() {
            if j >= pool_len {
                return Err(Error::InfeasibleWeights(format!("index {j} outside pool of {pool_len}")));
            }
        }
        Ok(Self { indices: set.into_iter().collect() })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.indices.binary_search(&j).is_ok()
    }

    /// True when no item is selected with both labels.
    pub fn is_label_exclusive(&self) -> bool {
        self.indices.windows(2).all(|w| CandidatePool::item_index(w[0]) != CandidatePool::item_index(w[1]))
    }
}

/// Distance between the selected measure and the source measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Mmd,
    W1,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Mmd => f.write_str("mmd"),
            Metric::W1 => f.write_str("w1"),
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mmd" => Ok(Metric::Mmd),
            "w1" | "wasserstein" => Ok(Metric::W1),
            other => Err(Error::Config(format!("unknown metric {other:?}"))),
        }
    }
}

/// Parameters of one selection run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub k: usize,
    /// Frank-Wolfe iterations `L`.
    pub iterations: usize,
    /// Rounding repeats `R`.
    pub repeats: usize,
    pub seed: u64,
    pub metric: Metric,
    /// Gaussian bandwidth.
    pub sigma: f64,
    /// Label coordinate scale `C`.
    pub label_scale: f64,
    /// Forbid selecting both labels of one item.
    pub exclusive_labels: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            k: 20,
            iterations: 1000,
            repeats: 100,
            seed: 0,
            metric: Metric::Mmd,
            sigma: 1.0,
            label_scale: DEFAULT_LABEL_SCALE,
            exclusive_labels: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self, pool_len: usize) -> Result<()> {
        let limit = if self.exclusive_labels { pool_len / 2 } else { pool_len };
        check_k(self.k, limit)?;
        if self.iterations == 0 {
            return Err(Error::Config("L must be at least 1".into()));
        }
        if self.repeats == 0 {
            return Err(Error::Config("R must be at least 1".into()));
        }
        if self.sigma.is_nan() || self.sigma <= 0.0 {
            return Err(Error::Config(format!("sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }
}
