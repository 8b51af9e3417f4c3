//! Seeded synthetic instances for the theory checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::linalg::Matrix;
use crate::model::{CandidatePool, Label, PreferenceSet};

/// Shape of a Gaussian-mixture preference-transfer instance.
#[derive(Clone, Copy, Debug)]
pub struct MixtureSpec {
    pub components: usize,
    pub dim: usize,
    pub target_items: usize,
    pub source_points: usize,
    pub spread: f64,
    pub label_scale: f64,
}

impl Default for MixtureSpec {
    fn default() -> Self {
        Self { components: 4, dim: 2, target_items: 300, source_points: 60, spread: 0.6, label_scale: 2.0 }
    }
}

/// Target items come from all mixture components with equal weight; the
/// source only from a skewed reweighting, so the source/target density
/// ratio is bounded. Each component has its own thumbs-up rate.
pub fn gaussian_mixture(spec: &MixtureSpec, seed: u64) -> Result<(CandidatePool, PreferenceSet)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means: Vec<Vec<f64>> =
        (0..spec.components).map(|_| (0..spec.dim).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
    let up_rate: Vec<f64> = (0..spec.components).map(|_| rng.gen_range(0.1..0.9)).collect();
    let noise = Normal::new(0.0, spec.spread).expect("positive spread");
    let draw =
        |c: usize, rng: &mut ChaCha8Rng| -> Vec<f64> { means[c].iter().map(|m| m + noise.sample(rng)).collect() };

    let items: Vec<(String, Vec<f64>)> = (0..spec.target_items)
        .map(|i| {
            let c = rng.gen_range(0..spec.components);
            (format!("t{i}"), draw(c, &mut rng))
        })
        .collect();

    // Source weights: component c has weight proportional to c + 1.
    let total: usize = (1..=spec.components).sum();
    let source = (0..spec.source_points)
        .map(|i| {
            let mut r = rng.gen_range(0..total);
            let mut c = 0;
            while r > c {
                r -= c + 1;
                c += 1;
            }
            let c = c.min(spec.components - 1);
            let label = Label::from_bool(rng.gen_bool(up_rate[c]));
            (format!("s{i}"), draw(c, &mut rng), label)
        })
        .collect::<Vec<_>>();

    Ok((CandidatePool::build(items, spec.label_scale)?, PreferenceSet::from_raw(source, spec.label_scale)?))
}

/// Points uniform in the unit cube `[0, 1]^d`.
pub fn unit_cube(n: usize, d: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_fn(n, d, |_, _| rng.gen::<f64>())
}

/// A one-dimensional instance on `[0, 1]`: candidates uniform, source from
/// a Beta(2, 5)-like skewed law (minimum of uniforms), so that the density
/// ratio is bounded.
pub fn line_instance(candidates: usize, source: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cand: Vec<f64> = (0..candidates).map(|_| rng.gen::<f64>()).collect();
    let src: Vec<f64> = (0..source).map(|_| rng.gen::<f64>().min(rng.gen::<f64>())).collect();
    (cand, src)
}
