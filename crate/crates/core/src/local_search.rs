//! Randomized successive local search used to warm-start branch and bound.

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::inner::xi;
use crate::model::Selection;
use crate::scenario::Scenario;
use crate::tour::TourCache;

pub const DEFAULT_RADIUS: usize = 3;

/// Draws a neighbor within Hamming distance `radius`: a distance `d` uniform
/// in `1..=min(radius, M-1)`, then `d` distinct non-depot coordinates to flip.
pub fn sample_neighbor<R: Rng + ?Sized>(
    selection: &Selection,
    radius: usize,
    rng: &mut R,
) -> Result<Selection> {
    let m = selection.len();
    if m < 2 {
        return Err(Error::NoNeighbor);
    }
    if radius == 0 {
        return Err(Error::InvalidParams("neighborhood radius must be at least 1".into()));
    }
    let d = rng.gen_range(1..=radius.min(m - 1));
    let mut out = *selection;
    for i in sample(rng, m - 1, d).iter() {
        out = out.flipped(i + 1);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSearchResult {
    pub value: f64,
    pub selection: Selection,
    /// Incumbent value after each candidate evaluation.
    pub history: Vec<f64>,
}

/// Runs exactly `max_iters` candidate evaluations from the no-movement plan,
/// moving to a candidate whenever it is no worse.
pub fn search<R: Rng + ?Sized>(
    scenario: &Scenario,
    max_iters: usize,
    radius: usize,
    rng: &mut R,
) -> Result<LocalSearchResult> {
    if max_iters == 0 {
        return Err(Error::InvalidParams("max_iters must be at least 1".into()));
    }
    let m = scenario.num_vertices();
    let mut tours = TourCache::new(scenario);
    let mut current = Selection::depot_only(m);
    let mut value = xi(&current, scenario, &mut tours)?.value();
    let mut history = Vec::with_capacity(max_iters);
    if m < 2 {
        history.resize(max_iters, value);
        return Ok(LocalSearchResult {
            value,
            selection: current,
            history,
        });
    }
    for _ in 0..max_iters {
        let candidate = sample_neighbor(&current, radius, rng)?;
        let v = xi(&candidate, scenario, &mut tours)?.value();
        if v <= value {
            value = v;
            current = candidate;
        }
        history.push(value);
    }
    Ok(LocalSearchResult {
        value,
        selection: current,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    #[test]
    fn two_vertices_have_one_neighbor() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let e1 = Selection::depot_only(2);
        for _ in 0..20 {
            assert_eq!(sample_neighbor(&e1, 1, &mut rng).unwrap(), Selection::full(2));
        }
        assert!(matches!(
            sample_neighbor(&Selection::depot_only(1), 3, &mut rng),
            Err(Error::NoNeighbor)
        ));
    }

    #[test]
    fn neighbor_support_is_complete() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let start = Selection::from_bits(&[true, false, true, false, true]).unwrap();
        let mut seen = HashSet::new();
        for _ in 0..100_000 {
            let n = sample_neighbor(&start, 3, &mut rng).unwrap();
            assert!(n.contains(0));
            let d = n.distance(&start);
            assert!((1..=3).contains(&d));
            seen.insert(n.mask());
        }
        // C(4,1) + C(4,2) + C(4,3)
        assert_eq!(seen.len(), 14);
    }
}
