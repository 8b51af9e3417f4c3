//! Exact 1-Wasserstein distances and the joint weight/coupling linear
//! program, both solved as min-cost flows.
//!
//! The joint program
//!
//! ```text
//! min Σ γ_jj' ‖z_j − z'_j'‖   s.t.  γ 1 = w,  γᵀ 1 = 1/n,  Σ w = 1,  0 ≤ w ≤ 1/K,  γ ≥ 0
//! ```
//!
//! is a transportation problem with a capacitated super source: arc
//! `S* → j` carries `w_j` with capacity `1/K`. Scaling every amount by
//! `F = lcm(K, n)` makes all capacities integers, so optimal flows are
//! integral and the recovered `w = flow / F` is exactly feasible.

mod flow;

use rand::Rng;

pub use flow::{FlowResult, MinCostFlow};

use crate::error::{Error, Result};
use crate::linalg::{dot, euclidean, Matrix};
use crate::model::{check_k, CandidatePool, CappedWeights, PreferenceSet};

/// Largest integer scale for which every flow amount stays exact in `f64`.
pub const MAX_FLOW_SCALE: u64 = 1 << 53;

/// Euclidean ground costs, candidates by source points.
#[derive(Clone, Debug)]
pub struct CostMatrix {
    costs: Matrix,
}

impl CostMatrix {
    pub fn euclidean(candidates: &Matrix, source: &Matrix) -> Result<Self> {
        if candidates.cols() != source.cols() {
            return Err(Error::DimensionMismatch { expected: candidates.cols(), found: source.cols() });
        }
        let costs =
            Matrix::from_fn(candidates.rows(), source.rows(), |i, j| euclidean(candidates.row(i), source.row(j)));
        Ok(Self { costs })
    }

    pub fn from_pool(pool: &CandidatePool, source: &PreferenceSet) -> Result<Self> {
        Self::euclidean(pool.embeddings(), source.embeddings())
    }

    pub fn from_matrix(costs: Matrix) -> Result<Self> {
        if costs.as_slice().iter().any(|c| c.is_nan() || *c < 0.0) {
            return Err(Error::Config("ground costs must be nonnegative".into()));
        }
        Ok(Self { costs })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.costs
    }

    pub fn rows(&self) -> usize {
        self.costs.rows()
    }

    pub fn cols(&self) -> usize {
        self.costs.cols()
    }
}

/// An optimal coupling as sparse `(row, col, mass)` entries.
#[derive(Clone, Debug)]
pub struct TransportPlan {
    pub value: f64,
    pub entries: Vec<(usize, usize, f64)>,
}

impl TransportPlan {
    pub fn row_marginal(&self, rows: usize) -> Vec<f64> {
        let mut out = vec![0.0; rows];
        for &(i, _, m) in &self.entries {
            out[i] += m;
        }
        out
    }

    pub fn col_marginal(&self, cols: usize) -> Vec<f64> {
        let mut out = vec![0.0; cols];
        for &(_, j, m) in &self.entries {
            out[j] += m;
        }
        out
    }
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Common denominator for marginals `1/k` and `1/n`.
pub fn flow_scale(k: usize, n: usize) -> Result<u64> {
    let (k64, n64) = (k as u64, n as u64);
    let lcm = (k64 / gcd(k64, n64)).checked_mul(n64);
    match lcm {
        Some(f) if f <= MAX_FLOW_SCALE => Ok(f),
        _ => Err(Error::ScaleOverflow { k, n }),
    }
}

/// Solves a transportation problem on a bipartite graph. `supply` and
/// `demand` are already scaled by `scale`; the returned plan and value are
/// divided back.
fn solve_transport(supply: &[f64], demand: &[f64], costs: &Matrix, scale: f64, eps: f64) -> Result<TransportPlan> {
    let total_s: f64 = supply.iter().sum();
    let total_d: f64 = demand.iter().sum();
    if (total_s - total_d).abs() > 1e-9 * scale.max(1.0) {
        return Err(Error::Unbalanced(total_s / scale, total_d / scale));
    }
    let rows: Vec<usize> = (0..supply.len()).filter(|&i| supply[i] > eps).collect();
    let cols: Vec<usize> = (0..demand.len()).filter(|&j| demand[j] > eps).collect();
    let source = 0;
    let sink = 1 + rows.len() + cols.len();
    let mut g = MinCostFlow::new(sink + 1);
    let big = total_s.max(total_d);
    for (a, &i) in rows.iter().enumerate() {
        g.add_edge(source, 1 + a, supply[i], 0.0);
    }
    let mut arcs = Vec::with_capacity(rows.len() * cols.len());
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            let id = g.add_edge(1 + a, 1 + rows.len() + b, big, costs.get(i, j));
            arcs.push((id, i, j));
        }
    }
    for (b, &j) in cols.iter().enumerate() {
        g.add_edge(1 + rows.len() + b, sink, demand[j], 0.0);
    }
    let result = g.run(source, sink, total_s.min(total_d), eps);
    if (result.flow - total_s.min(total_d)).abs() > eps.max(1e-9 * scale) {
        return Err(Error::Unbalanced(result.flow / scale, total_d / scale));
    }
    let entries = arcs
        .into_iter()
        .filter_map(|(id, i, j)| {
            let f = g.flow_on(id);
            (f > eps).then_some((i, j, f / scale))
        })
        .collect();
    Ok(TransportPlan { value: result.cost / scale, entries })
}

/// Exact optimal transport between two arbitrary discrete measures with
/// the given ground costs (`supply` indexes rows, `demand` columns).
pub fn transport(supply: &[f64], demand: &[f64], costs: &Matrix) -> Result<TransportPlan> {
    if supply.len() != costs.rows() || demand.len() != costs.cols() {
        return Err(Error::DimensionMismatch { expected: costs.rows(), found: supply.len() });
    }
    solve_transport(supply, demand, costs, 1.0, 1e-14)
}

/// W1 between candidate weights `w` and the uniform source measure, for
/// fixed real-valued `w`.
pub fn w1_fixed(w: &[f64], costs: &CostMatrix) -> Result<f64> {
    let n = costs.cols();
    let demand = vec![1.0 / n as f64; n];
    Ok(transport(w, &demand, costs.matrix())?.value)
}

/// W1 between the uniform measure on `indices` and the uniform source
/// measure, solved on integer-scaled marginals.
pub fn w1_selection(indices: &[usize], costs: &CostMatrix) -> Result<TransportPlan> {
    if indices.is_empty() {
        return Err(Error::Empty("selection"));
    }
    let n = costs.cols();
    let scale = flow_scale(indices.len(), n)?;
    let per_row = (scale / indices.len() as u64) as f64;
    let per_col = (scale / n as u64) as f64;
    let mut supply = vec![0.0; costs.rows()];
    for &i in indices {
        supply[i] += per_row;
    }
    let demand = vec![per_col; n];
    solve_transport(&supply, &demand, costs.matrix(), scale as f64, 0.5)
}

/// Optimal weights of the joint program together with its value.
#[derive(Clone, Debug)]
pub struct JointSolution {
    pub weights: CappedWeights,
    pub value: f64,
    pub plan: TransportPlan,
    pub scale: u64,
}

/// Solves the joint (w, γ) linear program over the capped simplex.
pub fn solve_joint_lp_costs(costs: &CostMatrix, k: usize) -> Result<JointSolution> {
    let rows = costs.rows();
    let n = costs.cols();
    check_k(k, rows)?;
    let scale = flow_scale(k, n)?;
    let cap = (scale / k as u64) as f64;
    let per_col = (scale / n as u64) as f64;

    let source = 0;
    let sink = 1 + rows + n;
    let mut g = MinCostFlow::new(sink + 1);
    let supply_arcs: Vec<usize> = (0..rows).map(|j| g.add_edge(source, 1 + j, cap, 0.0)).collect();
    let mut arcs = Vec::with_capacity(rows * n);
    for j in 0..rows {
        for jp in 0..n {
            let id = g.add_edge(1 + j, 1 + rows + jp, scale as f64, costs.matrix().get(j, jp));
            arcs.push((id, j, jp));
        }
    }
    for jp in 0..n {
        g.add_edge(1 + rows + jp, sink, per_col, 0.0);
    }
    let result = g.run(source, sink, scale as f64, 0.5);
    debug_assert_eq!(result.flow, scale as f64);

    let f = scale as f64;
    let w: Vec<f64> = supply_arcs.iter().map(|&id| g.flow_on(id) / f).collect();
    let entries = arcs
        .into_iter()
        .filter_map(|(id, j, jp)| {
            let fl = g.flow_on(id);
            (fl > 0.5).then_some((j, jp, fl / f))
        })
        .collect();
    Ok(JointSolution {
        weights: CappedWeights::new(w, k)?,
        value: result.cost / f,
        plan: TransportPlan { value: result.cost / f, entries },
        scale,
    })
}

/// `solve_joint_lp` on label-augmented embeddings.
pub fn solve_joint_lp(pool: &CandidatePool, source: &PreferenceSet, k: usize) -> Result<JointSolution> {
    solve_joint_lp_costs(&CostMatrix::from_pool(pool, source)?, k)
}

/// Exact W1 between two weighted point sets on the real line:
/// `∫ |F_a(t) − F_b(t)| dt`.
pub fn w1_line(a: &[f64], wa: &[f64], b: &[f64], wb: &[f64]) -> f64 {
    let mut events: Vec<(f64, f64)> =
        a.iter().zip(wa).map(|(&x, &w)| (x, w)).chain(b.iter().zip(wb).map(|(&x, &w)| (x, -w))).collect();
    events.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut cdf_diff = 0.0;
    let mut total = 0.0;
    for pair in events.windows(2) {
        cdf_diff += pair[0].1;
        total += cdf_diff.abs() * (pair[1].0 - pair[0].0);
    }
    total
}

/// A 1-Lipschitz trial function `x ↦ max_i (a_i · x + b_i) − shift` with
/// `‖a_i‖ ≤ 1`, optionally negated.
#[derive(Clone, Debug)]
pub struct LipschitzFn {
    slopes: Vec<Vec<f64>>,
    offsets: Vec<f64>,
    shift: f64,
    negate: bool,
}

impl LipschitzFn {
    pub fn affine(slope: Vec<f64>, offset: f64) -> Self {
        assert!(dot(&slope, &slope) <= 1.0 + 1e-12, "slope norm above 1");
        Self { slopes: vec![slope], offsets: vec![offset], shift: 0.0, negate: false }
    }

    /// Random max of `pieces` affine functions with slopes drawn uniformly
    /// in the unit ball, negated with probability one half.
    pub fn random<R: Rng>(dim: usize, pieces: usize, rng: &mut R) -> Self {
        let mut slopes = Vec::with_capacity(pieces);
        let mut offsets = Vec::with_capacity(pieces);
        for _ in 0..pieces.max(1) {
            let dir: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
            let norm = dot(&dir, &dir).sqrt().max(1e-300);
            let radius: f64 = rng.gen::<f64>().powf(1.0 / dim as f64);
            slopes.push(dir.iter().map(|v| v / norm * radius).collect());
            offsets.push(rng.gen_range(-1.0..1.0));
        }
        Self { slopes, offsets, shift: 0.0, negate: rng.gen_bool(0.5) }
    }

    /// Shifts the function so that it vanishes at `center`; on the unit
    /// cube with `center = 1/2` it is then bounded by `√d / 2`.
    pub fn centered_at(mut self, center: &[f64]) -> Self {
        self.shift = 0.0;
        let raw = self.eval(center);
        self.shift = if self.negate { -raw } else { raw };
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let v = self.slopes.iter().zip(&self.offsets).map(|(a, b)| dot(a, x) + b).fold(f64::NEG_INFINITY, f64::max)
            - self.shift;
        if self.negate {
            -v
        } else {
            v
        }
    }
}

/// Best dual objective `Σ w_j f(x_j) − (1/n) Σ f(x'_j)` over the trial
/// functions; a lower bound on W1 by weak duality.
pub fn w1_dual_check(w: &[f64], candidates: &Matrix, source: &Matrix, trials: &[LipschitzFn]) -> f64 {
    let n = source.rows() as f64;
    trials
        .iter()
        .map(|f| {
            let lhs: f64 =
                w.iter().enumerate().filter(|(_, &wj)| wj != 0.0).map(|(j, wj)| wj * f.eval(candidates.row(j))).sum();
            let rhs: f64 = (0..source.rows()).map(|j| f.eval(source.row(j))).sum::<f64>() / n;
            lhs - rhs
        })
        .fold(f64::NEG_INFINITY, f64::max)
}
