//! Monte-Carlo checks of the rounding guarantees and empirical rates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::frank_wolfe::frank_wolfe;
use crate::kernels::{KernelMatrices, KernelSpec};
use crate::linalg::Matrix;
use crate::model::CappedWeights;
use crate::pipeline::{run_mmd, run_w1};
use crate::rounding::{bernoulli_round, greedy_repair, MmdSelection, W1Selection};
use crate::synthetic::{gaussian_mixture, line_instance, MixtureSpec};
use crate::transport::{solve_joint_lp_costs, w1_dual_check, w1_fixed, CostMatrix, LipschitzFn};

use super::manifest::derive_seed;

/// One line of the report.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckLine {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

impl std::fmt::Display for CheckLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status}  {}  {}", self.name, self.detail)
    }
}

/// Empirical `q`-quantile (order statistic `ceil(q n)`).
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.max(1e-300).ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Mean and (population) variance of the Bernoulli selection size.
pub fn count_moments(w: &CappedWeights, trials: usize, seed: u64) -> Result<(f64, f64)> {
    let mut counts = Vec::with_capacity(trials);
    for t in 0..trials as u64 {
        counts.push(bernoulli_round(w, seed.wrapping_add(t), false)?.len() as f64);
    }
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<f64>() / n;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / n;
    Ok((mean, var))
}

/// RKHS norms of the two rounding perturbations, one entry per trial.
#[derive(Clone, Debug, Default)]
pub struct Perturbations {
    /// `‖Σ (I_j/K − ŵ_j) φ(z_j)‖`.
    pub sampling: Vec<f64>,
    /// `‖Σ (w'_j − I_j/K) φ(z_j)‖` with `w'` the repaired selection.
    pub repair: Vec<f64>,
}

fn block_sum(mats: &KernelMatrices, a: &[usize], b: &[usize]) -> f64 {
    a.iter().map(|&i| b.iter().map(|&j| mats.tt().get(i, j)).sum::<f64>()).sum()
}

/// Computes both perturbation norms exactly through kernel sums for
/// `trials` independent roundings of `w`.
pub fn rkhs_perturbations(mats: &KernelMatrices, w: &CappedWeights, trials: usize, seed: u64) -> Result<Perturbations> {
    let k = w.cap_k();
    let inv_k = 1.0 / k as f64;
    let kw = mats.tt_times(w.as_slice());
    let wkw: f64 = w.as_slice().iter().zip(&kw).map(|(a, b)| a * b).sum();
    let metric = MmdSelection::new(mats);
    let mut out = Perturbations::default();
    for t in 0..trials as u64 {
        let drawn = bernoulli_round(w, seed.wrapping_add(t), false)?;
        let dd = block_sum(mats, &drawn, &drawn) * inv_k * inv_k;
        let dw: f64 = drawn.iter().map(|&j| kw[j]).sum::<f64>() * inv_k;
        out.sampling.push((dd - 2.0 * dw + wkw).max(0.0).sqrt());

        let repaired = greedy_repair(&drawn, k, &metric, false)?;
        let r = repaired.indices();
        let rr = block_sum(mats, r, r) * inv_k * inv_k;
        let rd = block_sum(mats, r, &drawn) * inv_k * inv_k;
        out.repair.push((rr - 2.0 * rd + dd).max(0.0).sqrt());
    }
    Ok(out)
}

/// `sqrt(B / (δ K))`.
pub fn rkhs_bound(bound: f64, delta: f64, k: usize) -> f64 {
    (bound / (delta * k as f64)).sqrt()
}

/// `sqrt(d/(2K) ln(1/δ)) + √d/(3K) ln(1/δ)`.
pub fn w1_perturbation_bound(dim: usize, k: usize, delta: f64) -> f64 {
    let d = dim as f64;
    let k = k as f64;
    let l = (1.0 / delta).ln();
    (d / (2.0 * k) * l).sqrt() + d.sqrt() / (3.0 * k) * l
}

/// Values of `Σ f(x_j)(I_j/K − ŵ_j)` and `Σ f(x_j)(w'_j − I_j/K)` for each
/// trial function over `trials` roundings on the line.
pub struct LinePerturbations {
    pub sampling: Vec<Vec<f64>>,
    pub repair: Vec<Vec<f64>>,
}

pub fn w1_line_perturbations(
    candidates: &[f64],
    source: &[f64],
    w: &CappedWeights,
    functions: &[LipschitzFn],
    trials: usize,
    seed: u64,
) -> Result<LinePerturbations> {
    let k = w.cap_k();
    let inv_k = 1.0 / k as f64;
    let costs = line_costs(candidates, source);
    let metric = W1Selection::on_line(&costs, candidates.to_vec(), source.to_vec());
    let fvals: Vec<Vec<f64>> = functions.iter().map(|f| candidates.iter().map(|&x| f.eval(&[x])).collect()).collect();
    let base: Vec<f64> = fvals.iter().map(|fv| fv.iter().zip(w.as_slice()).map(|(f, w)| f * w).sum()).collect();
    let mut out = LinePerturbations {
        sampling: vec![Vec::with_capacity(trials); functions.len()],
        repair: vec![Vec::with_capacity(trials); functions.len()],
    };
    for t in 0..trials as u64 {
        let drawn = bernoulli_round(w, seed.wrapping_add(t), false)?;
        let repaired = greedy_repair(&drawn, k, &metric, false)?;
        for (i, fv) in fvals.iter().enumerate() {
            let d: f64 = drawn.iter().map(|&j| fv[j]).sum::<f64>() * inv_k;
            let r: f64 = repaired.indices().iter().map(|&j| fv[j]).sum::<f64>() * inv_k;
            out.sampling[i].push(d - base[i]);
            out.repair[i].push(r - d);
        }
    }
    Ok(out)
}

fn line_costs(candidates: &[f64], source: &[f64]) -> CostMatrix {
    let c = Matrix::from_fn(candidates.len(), 1, |i, _| candidates[i]);
    let s = Matrix::from_fn(source.len(), 1, |i, _| source[i]);
    CostMatrix::euclidean(&c, &s).expect("same dimension")
}

/// Mean regret against `K` and the fitted log-log slope.
#[derive(Clone, Debug)]
pub struct RateFit {
    pub ks: Vec<usize>,
    pub regrets: Vec<f64>,
    pub slope: f64,
}

/// Pipeline MMD minus the continuous value on Gaussian-mixture instances,
/// averaged over `instances` seeds.
pub fn mmd_rate(
    spec: &MixtureSpec,
    ks: &[usize],
    instances: usize,
    iterations: usize,
    repeats: usize,
    seed: u64,
) -> Result<RateFit> {
    let mut sums = vec![0.0; ks.len()];
    for i in 0..instances {
        let inst_seed = derive_seed(seed, &["mmd-rate", &i.to_string()]);
        let (pool, source) = gaussian_mixture(spec, inst_seed)?;
        let mats = KernelMatrices::from_points(pool.embeddings(), source.embeddings(), &KernelSpec::gaussian(1.0)?)?;
        for (slot, &k) in sums.iter_mut().zip(ks) {
            let r = run_mmd(&mats, k, iterations, repeats, inst_seed.wrapping_add(k as u64 * 7919), false)?;
            *slot += r.outcome.distance - r.continuous;
        }
    }
    let regrets: Vec<f64> = sums.iter().map(|s| s / instances as f64).collect();
    let xs: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    Ok(RateFit { slope: loglog_slope(&xs, &regrets), ks: ks.to_vec(), regrets })
}

/// Pipeline W1 minus the LP optimum on one-dimensional instances.
pub fn w1_line_rate(
    candidates: usize,
    sources: usize,
    ks: &[usize],
    instances: usize,
    repeats: usize,
    seed: u64,
) -> Result<RateFit> {
    let mut sums = vec![0.0; ks.len()];
    for i in 0..instances {
        let inst_seed = derive_seed(seed, &["w1-rate", &i.to_string()]);
        let (cand, src) = line_instance(candidates, sources, inst_seed);
        let costs = line_costs(&cand, &src);
        for (slot, &k) in sums.iter_mut().zip(ks) {
            let r = run_w1(
                &costs,
                k,
                repeats,
                inst_seed.wrapping_add(k as u64 * 7919),
                false,
                Some((cand.clone(), src.clone())),
            )?;
            *slot += r.outcome.distance - r.continuous;
        }
    }
    let regrets: Vec<f64> = sums.iter().map(|s| s / instances as f64).collect();
    let xs: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    Ok(RateFit { slope: loglog_slope(&xs, &regrets), ks: ks.to_vec(), regrets })
}

/// Sizes of the full suite and of a quick smoke run.
#[derive(Clone, Copy, Debug)]
pub struct TheoryOptions {
    pub seed: u64,
    pub trials: usize,
    pub rate_instances: usize,
    pub quick: bool,
}

impl TheoryOptions {
    pub fn full(seed: u64) -> Self {
        Self { seed, trials: 10_000, rate_instances: 5, quick: false }
    }

    pub fn quick(seed: u64) -> Self {
        Self { seed, trials: 500, rate_instances: 1, quick: true }
    }
}

pub const DELTAS: [f64; 3] = [0.5, 0.25, 0.1];

/// A mixture instance with `items` target items (`2 items` candidates) and
/// its Frank-Wolfe weights at cap `k`.
pub fn concentration_instance(items: usize, k: usize, seed: u64) -> Result<(KernelMatrices, CappedWeights)> {
    let spec = MixtureSpec { target_items: items, source_points: 150, ..MixtureSpec::default() };
    let (pool, source) = gaussian_mixture(&spec, seed)?;
    let mats = KernelMatrices::from_points(pool.embeddings(), source.embeddings(), &KernelSpec::gaussian(1.0)?)?;
    let (w, _) = frank_wolfe(&mats, k, 300)?;
    Ok((mats, w))
}

/// The spread of candidates used by the rate and concentration checks on
/// the line.
pub const LINE_CANDIDATES: usize = 400;
pub const LINE_SOURCES: usize = 80;

pub fn run_theory_checks(opts: &TheoryOptions) -> Result<Vec<CheckLine>> {
    let mut lines = Vec::new();
    let seed = opts.seed;

    // Selected-count moments on a fixed feasible weight vector.
    let (_, w) = concentration_instance(100, 20, derive_seed(seed, &["moments"]))?;
    let (mean, var) = count_moments(&w, opts.trials, seed)?;
    let k: f64 = 20.0;
    let mean_tol = if opts.quick { 3.0 * k.sqrt() / (opts.trials as f64).sqrt() } else { 0.15 };
    lines.push(CheckLine::new(
        "count mean",
        (mean - k).abs() <= mean_tol,
        format!("mean {mean:.4} vs K = 20 (tolerance {mean_tol:.4}, {} trials)", opts.trials),
    ));
    lines.push(CheckLine::new(
        "count variance",
        var <= 1.1 * k,
        format!("variance {var:.4} <= 1.1 K = {:.1}", 1.1 * k),
    ));

    // RKHS perturbation quantiles.
    let ks: &[usize] = if opts.quick { &[10, 50] } else { &[10, 50, 200] };
    for &k in ks {
        let (mats, w) = concentration_instance(600, k, derive_seed(seed, &["concentration", &k.to_string()]))?;
        let p = rkhs_perturbations(&mats, &w, opts.trials, seed)?;
        for delta in DELTAS {
            let bound = rkhs_bound(mats.spec().bound, delta, k);
            let qs = quantile(&p.sampling, 1.0 - delta);
            let qr = quantile(&p.repair, 1.0 - delta);
            lines.push(CheckLine::new(
                format!("rkhs sampling K={k} delta={delta}"),
                qs <= bound,
                format!("quantile {qs:.5} <= {bound:.5}"),
            ));
            lines.push(CheckLine::new(
                format!("rkhs repair K={k} delta={delta}"),
                qr <= bound,
                format!("quantile {qr:.5} <= {bound:.5}"),
            ));
        }
    }

    // W1 perturbations against bounded Lipschitz trial functions on [0, 1].
    let (cand, src) = line_instance(LINE_CANDIDATES, LINE_SOURCES, derive_seed(seed, &["w1-line"]));
    let costs = line_costs(&cand, &src);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &["lipschitz"]));
    let functions: Vec<LipschitzFn> = (0..8).map(|_| LipschitzFn::random(1, 3, &mut rng).centered_at(&[0.5])).collect();
    for k in [10usize, 40] {
        let joint = solve_joint_lp_costs(&costs, k)?;
        let trials = opts.trials.min(2000);
        let p = w1_line_perturbations(&cand, &src, &joint.weights, &functions, trials, seed)?;
        for delta in DELTAS {
            let bound = w1_perturbation_bound(1, k, delta);
            let worst_s = p.sampling.iter().map(|v| quantile(v, 1.0 - delta)).fold(f64::NEG_INFINITY, f64::max);
            let worst_r = p.repair.iter().map(|v| quantile(v, 1.0 - delta)).fold(f64::NEG_INFINITY, f64::max);
            lines.push(CheckLine::new(
                format!("w1 sampling K={k} delta={delta}"),
                worst_s <= bound,
                format!("worst quantile {worst_s:.5} <= {bound:.5}"),
            ));
            lines.push(CheckLine::new(
                format!("w1 repair K={k} delta={delta}"),
                worst_r <= bound,
                format!("worst quantile {worst_r:.5} <= {bound:.5}"),
            ));
        }
        let primal = w1_fixed(joint.weights.as_slice(), &costs)?;
        let c = Matrix::from_fn(cand.len(), 1, |i, _| cand[i]);
        let s = Matrix::from_fn(src.len(), 1, |i, _| src[i]);
        let dual = w1_dual_check(joint.weights.as_slice(), &c, &s, &functions);
        lines.push(CheckLine::new(
            format!("w1 weak duality K={k}"),
            dual <= primal + 1e-9,
            format!("best trial dual {dual:.6} <= primal {primal:.6}"),
        ));
    }

    // Rates.
    let mmd_ks: Vec<usize> = if opts.quick { vec![4, 16, 64] } else { vec![4, 8, 16, 32, 64, 128] };
    let mmd_spec = MixtureSpec { target_items: 1000, source_points: 200, ..MixtureSpec::default() };
    let (iters, reps) = if opts.quick { (200, 10) } else { (1000, 100) };
    let fit = mmd_rate(&mmd_spec, &mmd_ks, opts.rate_instances, iters, reps, seed)?;
    lines.push(CheckLine::new(
        "mmd regret slope",
        fit.slope <= -0.35,
        format!("slope {:.3} <= -0.35 over K = {:?}", fit.slope, fit.ks),
    ));
    let w1_ks: Vec<usize> = if opts.quick { vec![4, 16, 64] } else { vec![4, 8, 16, 32, 64, 128] };
    let fit = w1_line_rate(LINE_CANDIDATES, LINE_SOURCES, &w1_ks, opts.rate_instances, reps.min(50), seed)?;
    lines.push(CheckLine::new(
        "w1 regret slope (d = 1)",
        fit.slope <= -0.25,
        format!("slope {:.3} <= -0.25 over K = {:?}", fit.slope, fit.ks),
    ));
    Ok(lines)
}
