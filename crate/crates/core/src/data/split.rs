use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// How the catalog is divided between the two services.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SplitMode {
    /// Each item joins the source with probability 1/2 and, independently,
    /// the target with probability 1/2.
    WithIntersection,
    /// Each item goes to exactly one service with a fair coin.
    NoIntersection,
}

impl fmt::Display for SplitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitMode::WithIntersection => "intersect",
            SplitMode::NoIntersection => "disjoint",
        })
    }
}

impl FromStr for SplitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "intersect" | "with_intersection" | "with-intersection" => Ok(SplitMode::WithIntersection),
            "disjoint" | "no_intersection" | "no-intersection" => Ok(SplitMode::NoIntersection),
            other => Err(Error::Config(format!("unknown split mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ServiceSplit {
    pub in_source: Vec<bool>,
    pub in_target: Vec<bool>,
    pub mode: SplitMode,
    /// Seed that was asked for.
    pub requested_seed: u64,
    /// Seed that produced this split; larger than `requested_seed` when
    /// earlier draws left a service empty.
    pub seed: u64,
}

impl ServiceSplit {
    pub fn source_items(&self) -> Vec<usize> {
        indices(&self.in_source)
    }

    pub fn target_items(&self) -> Vec<usize> {
        indices(&self.in_target)
    }

    pub fn shared_items(&self) -> Vec<usize> {
        (0..self.in_source.len()).filter(|&i| self.in_source[i] && self.in_target[i]).collect()
    }

    pub fn resampled(&self) -> bool {
        self.seed != self.requested_seed
    }
}

fn indices(mask: &[bool]) -> Vec<usize> {
    mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
}

fn draw(num_items: usize, mode: SplitMode, seed: u64) -> (Vec<bool>, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match mode {
        SplitMode::WithIntersection => {
            let s: Vec<bool> = (0..num_items).map(|_| rng.gen_bool(0.5)).collect();
            let t: Vec<bool> = (0..num_items).map(|_| rng.gen_bool(0.5)).collect();
            (s, t)
        }
        SplitMode::NoIntersection => {
            let s: Vec<bool> = (0..num_items).map(|_| rng.gen_bool(0.5)).collect();
            let t = s.iter().map(|b| !b).collect();
            (s, t)
        }
    }
}

/// Splits `num_items` catalog items between a source and a target service.
/// A draw that leaves either service empty is redrawn with the next seed.
pub fn make_split(num_items: usize, mode: SplitMode, seed: u64) -> Result<ServiceSplit> {
    if num_items < 2 {
        return Err(Error::Empty("a catalog with at least two items"));
    }
    let mut current = seed;
    loop {
        let (in_source, in_target) = draw(num_items, mode, current);
        if in_source.iter().any(|&b| b) && in_target.iter().any(|&b| b) {
            if current != seed {
                log::warn!("split seed {seed} left a service empty; used seed {current}");
            }
            return Ok(ServiceSplit { in_source, in_target, mode, requested_seed: seed, seed: current });
        }
        current = current.wrapping_add(1);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disjoint_partitions_catalog() {
        let s = make_split(500, SplitMode::NoIntersection, 9).unwrap();
        for i in 0..500 {
            assert!(s.in_source[i] ^ s.in_target[i]);
        }
        assert!(s.shared_items().is_empty());
    }

    #[test]
    fn seeded() {
        assert_eq!(
            make_split(100, SplitMode::WithIntersection, 5).unwrap(),
            make_split(100, SplitMode::WithIntersection, 5).unwrap()
        );
    }

    #[test]
    fn empty_side_is_resampled() {
        // Two items: a fair-coin disjoint split leaves one side empty half the time.
        let mut resampled = 0;
        for seed in 0..200 {
            let s = make_split(2, SplitMode::NoIntersection, seed).unwrap();
            assert!(!s.source_items().is_empty() && !s.target_items().is_empty());
            resampled += usize::from(s.resampled());
        }
        assert!(resampled > 0);
    }

    #[test]
    fn parses_modes() {
        assert_eq!("intersect".parse::<SplitMode>().unwrap(), SplitMode::WithIntersection);
        assert_eq!("disjoint".parse::<SplitMode>().unwrap(), SplitMode::NoIntersection);
        assert!("both".parse::<SplitMode>().is_err());
    }
}
