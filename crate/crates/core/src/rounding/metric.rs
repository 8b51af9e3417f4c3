use crate::kernels::{clamp_small_negative, KernelMatrices};
use crate::transport::{w1_line, w1_selection, CostMatrix};

/// Distance from the uniform measure on a candidate subset to the source
/// measure, with hooks for evaluating one-element changes.
///
/// `State` caches whatever makes those evaluations cheap; the repair loop
/// keeps it in sync through `insert` and `remove`.
pub trait SelectionMetric {
    type State;

    fn num_candidates(&self) -> usize;

    /// Distance of the uniform measure on `selected` (nonempty).
    fn distance(&self, selected: &[usize]) -> f64;

    fn prepare(&self, selected: &[usize]) -> Self::State;

    /// Distance after adding `candidate` to `selected`.
    fn distance_inserted(&self, state: &Self::State, selected: &[usize], candidate: usize) -> f64;

    /// Distance after dropping `member` from `selected`.
    fn distance_removed(&self, state: &Self::State, selected: &[usize], member: usize) -> f64;

    fn insert(&self, state: &mut Self::State, candidate: usize);

    fn remove(&self, state: &mut Self::State, member: usize);
}

/// MMD with rank-one updates of the quadratic form.
#[derive(Clone, Copy, Debug)]
pub struct MmdSelection<'a> {
    mats: &'a KernelMatrices,
}

impl<'a> MmdSelection<'a> {
    pub fn new(mats: &'a KernelMatrices) -> Self {
        Self { mats }
    }

    fn value(&self, quad: f64, lin: f64, size: usize) -> f64 {
        let s = size as f64;
        clamp_small_negative(quad / (s * s) - 2.0 * lin / s + self.mats.ss_const()).max(0.0).sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct MmdState {
    /// `q_a = Σ_{b ∈ S} K_ab` for every candidate `a`.
    q: Vec<f64>,
    /// `Σ_{a,b ∈ S} K_ab`.
    quad: f64,
    /// `Σ_{a ∈ S} h_a`.
    lin: f64,
    size: usize,
}

impl SelectionMetric for MmdSelection<'_> {
    type State = MmdState;

    fn num_candidates(&self) -> usize {
        self.mats.num_candidates()
    }

    fn distance(&self, selected: &[usize]) -> f64 {
        self.mats.selection_mmd_squared(selected).max(0.0).sqrt()
    }

    fn prepare(&self, selected: &[usize]) -> MmdState {
        let mut state = MmdState { q: vec![0.0; self.num_candidates()], quad: 0.0, lin: 0.0, size: 0 };
        for &j in selected {
            self.insert(&mut state, j);
        }
        state
    }

    fn distance_inserted(&self, state: &MmdState, _selected: &[usize], c: usize) -> f64 {
        let quad = state.quad + 2.0 * state.q[c] + self.mats.tt().get(c, c);
        self.value(quad, state.lin + self.mats.source_mean()[c], state.size + 1)
    }

    fn distance_removed(&self, state: &MmdState, _selected: &[usize], c: usize) -> f64 {
        let quad = state.quad - 2.0 * state.q[c] + self.mats.tt().get(c, c);
        self.value(quad, state.lin - self.mats.source_mean()[c], state.size - 1)
    }

    fn insert(&self, state: &mut MmdState, c: usize) {
        state.quad += 2.0 * state.q[c] + self.mats.tt().get(c, c);
        state.lin += self.mats.source_mean()[c];
        state.size += 1;
        for (q, k) in state.q.iter_mut().zip(self.mats.tt().row(c).iter()) {
            *q += k;
        }
    }

    fn remove(&self, state: &mut MmdState, c: usize) {
        for (q, k) in state.q.iter_mut().zip(self.mats.tt().row(c).iter()) {
            *q -= k;
        }
        state.quad -= 2.0 * state.q[c] + self.mats.tt().get(c, c);
        state.lin -= self.mats.source_mean()[c];
        state.size -= 1;
    }
}

/// Exact W1 per evaluation. One-dimensional embeddings use the CDF formula,
/// everything else the integer-scaled flow solver.
#[derive(Clone, Debug)]
pub struct W1Selection<'a> {
    costs: &'a CostMatrix,
    line: Option<(Vec<f64>, Vec<f64>)>,
}

impl<'a> W1Selection<'a> {
    pub fn new(costs: &'a CostMatrix) -> Self {
        Self { costs, line: None }
    }

    /// Enables the closed form for points on a line.
    pub fn on_line(costs: &'a CostMatrix, candidates: Vec<f64>, source: Vec<f64>) -> Self {
        assert_eq!(candidates.len(), costs.rows());
        assert_eq!(source.len(), costs.cols());
        Self { costs, line: Some((candidates, source)) }
    }

    fn eval(&self, selected: &[usize]) -> f64 {
        match &self.line {
            Some((cand, src)) => {
                let xs: Vec<f64> = selected.iter().map(|&j| cand[j]).collect();
                let wa = vec![1.0 / xs.len() as f64; xs.len()];
                let wb = vec![1.0 / src.len() as f64; src.len()];
                w1_line(&xs, &wa, src, &wb)
            }
            None => w1_selection(selected, self.costs).expect("selection marginals are balanced by construction").value,
        }
    }
}

impl SelectionMetric for W1Selection<'_> {
    type State = ();

    fn num_candidates(&self) -> usize {
        self.costs.rows()
    }

    fn distance(&self, selected: &[usize]) -> f64 {
        self.eval(selected)
    }

    fn prepare(&self, _selected: &[usize]) {}

    fn distance_inserted(&self, _state: &(), selected: &[usize], c: usize) -> f64 {
        let mut s = selected.to_vec();
        s.push(c);
        self.eval(&s)
    }

    fn distance_removed(&self, _state: &(), selected: &[usize], c: usize) -> f64 {
        let s: Vec<usize> = selected.iter().copied().filter(|&j| j != c).collect();
        self.eval(&s)
    }

    fn insert(&self, _state: &mut (), _c: usize) {}

    fn remove(&self, _state: &mut (), _c: usize) {}
}
