//! Exact shortest closed tour over a vertex selection (Held-Karp).

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::Selection;
use crate::plan::TourSolution;
use crate::scenario::Scenario;

/// Most non-depot vertices a tour may contain; the DP table has `n * 2^n` cells.
pub const MAX_TOUR_STOPS: usize = 20;

/// Minimum-length directed cycle from the depot through every selected vertex.
///
/// Returns `Ok(None)` when every such cycle uses a missing (infinite) edge.
pub fn shortest_tour(selection: &Selection, scenario: &Scenario) -> Result<Option<TourSolution>> {
    if selection.len() != scenario.num_vertices() {
        return Err(Error::ShapeMismatch {
            what: "selection",
            expected: scenario.num_vertices().to_string(),
            got: selection.len().to_string(),
        });
    }
    let t = scenario.time_budget();
    let stops: Vec<usize> = selection.vertices().skip(1).collect();
    let n = stops.len();
    if n == 0 {
        return Ok(Some(TourSolution::stationary(t)));
    }
    if n > MAX_TOUR_STOPS {
        return Err(Error::SizeGuard {
            what: "tour stops",
            limit: MAX_TOUR_STOPS,
            got: n,
        });
    }
    let d = |i: usize, j: usize| scenario.distance(i, j);

    let full = (1usize << n) - 1;
    let mut cost = vec![f64::INFINITY; (full + 1) * n];
    let mut parent = vec![u8::MAX; (full + 1) * n];
    for (j, &v) in stops.iter().enumerate() {
        cost[(1 << j) * n + j] = d(0, v);
    }
    for mask in 1..=full {
        for j in 0..n {
            if mask >> j & 1 == 0 {
                continue;
            }
            let here = cost[mask * n + j];
            if here == f64::INFINITY {
                continue;
            }
            for k in 0..n {
                if mask >> k & 1 == 1 {
                    continue;
                }
                let next = mask | 1 << k;
                let c = here + d(stops[j], stops[k]);
                if c < cost[next * n + k] {
                    cost[next * n + k] = c;
                    parent[next * n + k] = j as u8;
                }
            }
        }
    }

    let mut best = (f64::INFINITY, usize::MAX);
    for j in 0..n {
        let c = cost[full * n + j] + d(stops[j], 0);
        if c < best.0 {
            best = (c, j);
        }
    }
    if best.0 == f64::INFINITY {
        return Ok(None);
    }

    let mut rev = Vec::with_capacity(n);
    let (mut mask, mut j) = (full, best.1);
    loop {
        rev.push(stops[j]);
        let p = parent[mask * n + j];
        mask &= !(1 << j);
        if mask == 0 {
            break;
        }
        j = p as usize;
    }
    let mut order = Vec::with_capacity(n + 2);
    order.push(0);
    order.extend(rev.into_iter().rev());
    order.push(0);
    let length = path_length(&order, scenario);
    Ok(Some(TourSolution {
        order,
        length,
        upsilon: t - length / scenario.velocity(),
    }))
}

/// Sum of edge lengths along `order`, left to right.
pub fn path_length(order: &[usize], scenario: &Scenario) -> f64 {
    order
        .windows(2)
        .fold(0.0, |acc, w| acc + scenario.distance(w[0], w[1]))
}

/// Communication time left after the shortest tour; `-inf` when no tour exists.
pub fn upsilon(selection: &Selection, scenario: &Scenario) -> Result<f64> {
    Ok(shortest_tour(selection, scenario)?.map_or(f64::NEG_INFINITY, |t| t.upsilon))
}

/// Per-run memo of tours keyed by selection bitmask.
#[derive(Debug)]
pub struct TourCache<'a> {
    scenario: &'a Scenario,
    tours: HashMap<u64, Option<TourSolution>>,
}

impl<'a> TourCache<'a> {
    pub fn new(scenario: &'a Scenario) -> Self {
        TourCache {
            scenario,
            tours: HashMap::new(),
        }
    }

    pub fn get(&mut self, selection: &Selection) -> Result<Option<TourSolution>> {
        if let Some(hit) = self.tours.get(&selection.mask()) {
            return Ok(hit.clone());
        }
        let tour = shortest_tour(selection, self.scenario)?;
        self.tours.insert(selection.mask(), tour.clone());
        Ok(tour)
    }

    pub fn len(&self) -> usize {
        self.tours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tours.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ScenarioData;

    fn line_scenario(d: Vec<Vec<f64>>) -> Scenario {
        let m = d.len();
        Scenario::new(ScenarioData {
            m,
            k: 1,
            d,
            a_gain: vec![vec![1.0; m]],
            gamma: vec![1.0],
            t: 500.0,
            velocity: 1.0,
            alpha1: 0.29,
            alpha2: 7.4,
            mu: 1.0,
            n0_dbm: -95.0,
            beta: 0.5,
            eta: 0.78,
            positions: None,
        })
        .unwrap()
    }

    #[test]
    fn depot_only_is_stationary() {
        let sc = line_scenario(vec![vec![0.0, 3.0], vec![4.0, 0.0]]);
        let tour = shortest_tour(&Selection::depot_only(2), &sc).unwrap().unwrap();
        assert_eq!(tour.order, vec![0]);
        assert_eq!(tour.length, 0.0);
        assert_eq!(tour.upsilon, 500.0);
    }

    #[test]
    fn pair_is_out_and_back() {
        let sc = line_scenario(vec![vec![0.0, 3.0], vec![7.0, 0.0]]);
        let tour = shortest_tour(&Selection::full(2), &sc).unwrap().unwrap();
        assert_eq!(tour.order, vec![0, 1, 0]);
        assert_eq!(tour.length, 10.0);
        assert_eq!(upsilon(&Selection::full(2), &sc).unwrap(), 490.0);
    }

    #[test]
    fn asymmetric_direction_matters() {
        // 0->1->2->0 costs 3, the reverse costs 300
        let inf = f64::INFINITY;
        let sc = line_scenario(vec![
            vec![0.0, 1.0, 100.0],
            vec![100.0, 0.0, 1.0],
            vec![1.0, 100.0, 0.0],
        ]);
        let tour = shortest_tour(&Selection::full(3), &sc).unwrap().unwrap();
        assert_eq!(tour.order, vec![0, 1, 2, 0]);
        assert_eq!(tour.length, 3.0);

        let broken = line_scenario(vec![vec![0.0, inf], vec![1.0, 0.0]]);
        assert!(shortest_tour(&Selection::full(2), &broken).unwrap().is_none());
        assert_eq!(upsilon(&Selection::full(2), &broken).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn cache_reuses_results() {
        let sc = line_scenario(vec![vec![0.0, 2.0], vec![2.0, 0.0]]);
        let mut cache = TourCache::new(&sc);
        let a = cache.get(&Selection::full(2)).unwrap();
        let b = cache.get(&Selection::full(2)).unwrap();
        assert_eq!(a, b);
        assert_eq!(cache.len(), 1);
    }
}
