//! Randomized rounding of capped-simplex weights to an exactly-K selection.
//!
//! Each candidate is kept independently with probability `K w_j`, so the
//! expected count is `K` with variance at most `K`. The set is then repaired
//! to size `K` by greedily inserting or removing the single candidate that
//! yields the smallest distance, and the best of `R` independent trials is
//! kept.

mod metric;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use metric::{MmdSelection, MmdState, SelectionMetric, W1Selection};

use crate::error::{Error, Result};
use crate::model::{check_k, CandidatePool, CappedWeights, Selection};

/// Result of one rounding trial.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundingOutcome {
    pub selection: Selection,
    /// Size of the Bernoulli draw before repair.
    pub pre_repair_count: usize,
    /// Distance of the repaired selection, recomputed from scratch.
    pub distance: f64,
    pub seed: u64,
}

/// Draws `I_j ~ Bernoulli(K w_j)` independently and returns `{j : I_j = 1}`
/// in ascending order.
///
/// With `exclusive`, the two labels of each item (candidates `2i`, `2i + 1`)
/// are drawn jointly so that at most one is kept. When `K(w_2i + w_2i+1) ≤ 1`
/// both marginals are preserved; otherwise exactly one label is kept with
/// probabilities proportional to the weights.
pub fn bernoulli_round(w: &CappedWeights, seed: u64, exclusive: bool) -> Result<Vec<usize>> {
    let k = w.cap_k() as f64;
    let probs: Vec<f64> = w.as_slice().iter().map(|&v| k * v).collect();
    if let Some(j) = probs.iter().position(|&p| p > 1.0 + 1e-9) {
        return Err(Error::InfeasibleWeights(format!("K w[{j}] = {} exceeds 1", probs[j])));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    if !exclusive {
        for (j, &p) in probs.iter().enumerate() {
            if rng.gen::<f64>() < p {
                out.push(j);
            }
        }
        return Ok(out);
    }
    for pair in (0..probs.len()).step_by(2) {
        let up = probs[pair];
        let down = probs.get(pair + 1).copied().unwrap_or(0.0);
        let total = up + down;
        let u: f64 = rng.gen();
        let (p_up, p_any) = if total <= 1.0 { (up, total) } else { (up / total, 1.0) };
        if u < p_up {
            out.push(pair);
        } else if u < p_any && pair + 1 < probs.len() {
            out.push(pair + 1);
        }
    }
    Ok(out)
}

/// Greedily grows or shrinks `set` to exactly `k` members. Each step takes
/// the legal insertion (or removal) with the smallest resulting distance,
/// ties going to the lowest index. With `exclusive`, a candidate whose
/// sibling label is selected cannot be inserted.
pub fn greedy_repair<M: SelectionMetric>(set: &[usize], k: usize, metric: &M, exclusive: bool) -> Result<Selection> {
    let n = metric.num_candidates();
    let limit = if exclusive { n / 2 } else { n };
    check_k(k, limit)?;
    let mut members: Vec<usize> = set.to_vec();
    members.sort_unstable();
    members.dedup();
    let mut in_set = vec![false; n];
    for &j in &members {
        in_set[j] = true;
    }
    let mut state = metric.prepare(&members);

    while members.len() < k {
        let mut best: Option<(usize, f64)> = None;
        for c in 0..n {
            if in_set[c] || (exclusive && in_set.get(CandidatePool::sibling(c)).copied().unwrap_or(false)) {
                continue;
            }
            let d = metric.distance_inserted(&state, &members, c);
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((c, d));
            }
        }
        let (c, _) = best.ok_or(Error::InvalidK { k, candidates: limit })?;
        metric.insert(&mut state, c);
        in_set[c] = true;
        let pos = members.partition_point(|&j| j < c);
        members.insert(pos, c);
    }
    while members.len() > k {
        let mut best: Option<(usize, f64)> = None;
        for &c in &members {
            let d = metric.distance_removed(&state, &members, c);
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((c, d));
            }
        }
        let (c, _) = best.expect("members is nonempty while above k");
        metric.remove(&mut state, c);
        in_set[c] = false;
        members.retain(|&j| j != c);
    }
    Selection::new(members, k, n)
}

/// One Bernoulli draw followed by repair.
pub fn round_once<M: SelectionMetric>(
    w: &CappedWeights,
    metric: &M,
    seed: u64,
    exclusive: bool,
) -> Result<RoundingOutcome> {
    let drawn = bernoulli_round(w, seed, exclusive)?;
    let selection = greedy_repair(&drawn, w.cap_k(), metric, exclusive)?;
    let distance = metric.distance(selection.indices());
    Ok(RoundingOutcome { selection, pre_repair_count: drawn.len(), distance, seed })
}

/// All `R` trials with seeds `seed + 1, ..., seed + R`.
pub fn round_trials<M: SelectionMetric>(
    w: &CappedWeights,
    repeats: usize,
    metric: &M,
    seed: u64,
    exclusive: bool,
) -> Result<Vec<RoundingOutcome>> {
    (1..=repeats as u64).map(|r| round_once(w, metric, seed.wrapping_add(r), exclusive)).collect()
}

/// Best of `R` rounding trials; the earliest trial wins ties.
pub fn round_repeat_best<M: SelectionMetric>(
    w: &CappedWeights,
    repeats: usize,
    metric: &M,
    seed: u64,
    exclusive: bool,
) -> Result<RoundingOutcome> {
    if repeats == 0 {
        return Err(Error::Config("R must be at least 1".into()));
    }
    let mut best: Option<RoundingOutcome> = None;
    for r in 1..=repeats as u64 {
        let outcome = round_once(w, metric, seed.wrapping_add(r), exclusive)?;
        if best.as_ref().map_or(true, |b| outcome.distance < b.distance) {
            best = Some(outcome);
        }
    }
    Ok(best.expect("at least one trial"))
}
