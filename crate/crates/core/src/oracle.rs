//! Brute-force references for small instances.
//!
//! Each routine here avoids the module it is used to check: tours by
//! permutation, matchings by enumeration, and the allocation by a grid over
//! raw time splits with water-filled powers.

use std::f64::consts::LN_2;

use itertools::Itertools;
use serde::Serialize;

use crate::assignment::Prefix;
use crate::error::{Error, Result};
use crate::inner::xi_value;
use crate::model::Selection;
use crate::scenario::Scenario;

pub const EXHAUSTIVE_MAX_M: usize = 16;
pub const BRUTE_TOUR_MAX_SELECTED: usize = 9;
pub const BRUTE_PHI_MAX_M: usize = 7;
pub const GRID_MAX_K: usize = 3;
pub const GRID_MAX_M: usize = 4;

fn guard(what: &'static str, limit: usize, got: usize) -> Result<()> {
    if got > limit {
        return Err(Error::SizeGuard { what, limit, got });
    }
    Ok(())
}

/// Minimum of the leaf objective over all `2^(M-1)` selections; the lowest
/// mask wins ties.
pub fn exhaustive(scenario: &Scenario) -> Result<(f64, Selection)> {
    let m = scenario.num_vertices();
    guard("exhaustive vertex count", EXHAUSTIVE_MAX_M, m)?;
    let mut best = (f64::INFINITY, Selection::depot_only(m));
    for free in 0..1u64 << (m - 1) {
        let sel = Selection::from_mask(1 | free << 1, m)?;
        let v = xi_value(&sel, scenario)?;
        if v < best.0 {
            best = (v, sel);
        }
    }
    Ok(best)
}

/// Shortest closed tour length by trying every visiting order; `+inf` if
/// every order uses a missing edge.
pub fn brute_tour(selection: &Selection, scenario: &Scenario) -> Result<f64> {
    guard("brute-force tour size", BRUTE_TOUR_MAX_SELECTED, selection.count())?;
    let stops: Vec<usize> = selection.vertices().skip(1).collect();
    if stops.is_empty() {
        return Ok(0.0);
    }
    let n = stops.len();
    let mut best = f64::INFINITY;
    for perm in stops.into_iter().permutations(n) {
        let mut len = 0.0;
        let mut prev = 0;
        for v in perm {
            len += scenario.distance(prev, v);
            prev = v;
        }
        len += scenario.distance(prev, 0);
        if len < best {
            best = len;
        }
    }
    Ok(best)
}

/// Cheapest edge set in which every fixed-selected vertex has exactly one
/// out-edge and one in-edge, free vertices at most one of each, and
/// fixed-unselected vertices none. Enumerates successors of fixed-selected
/// vertices, then free predecessors for those still lacking an in-edge.
pub fn brute_phi(prefix: &Prefix, scenario: &Scenario) -> Result<f64> {
    let m = scenario.num_vertices();
    guard("brute-force relaxation size", BRUTE_PHI_MAX_M, m)?;
    let t = scenario.time_budget();
    let fixed: Vec<usize> = (0..m).filter(|&v| prefix.is_fixed_selected(v)).collect();
    if fixed.len() < 2 {
        return Ok(t);
    }
    let free: Vec<usize> = (prefix.depth()..m).collect();
    let usable = |v: usize| !prefix.is_fixed_unselected(v);
    let d = |i: usize, j: usize| scenario.distance(i, j);

    let choices: Vec<Vec<usize>> = fixed
        .iter()
        .map(|&i| (0..m).filter(|&j| j != i && usable(j) && d(i, j).is_finite()).collect())
        .collect();
    let mut best = f64::INFINITY;
    for succ in choices.iter().multi_cartesian_product() {
        if !succ.iter().all_unique() {
            continue;
        }
        let out_cost: f64 = fixed.iter().zip(&succ).map(|(&i, &&j)| d(i, j)).sum();
        let lacking: Vec<usize> = fixed
            .iter()
            .copied()
            .filter(|v| !succ.iter().any(|&&j| j == *v))
            .collect();
        if lacking.is_empty() {
            best = best.min(out_cost);
            continue;
        }
        for preds in free.iter().permutations(lacking.len()) {
            let in_cost: f64 = preds.iter().zip(&lacking).map(|(&&f, &v)| d(f, v)).sum();
            best = best.min(out_cost + in_cost);
        }
    }
    Ok(if best.is_finite() {
        t - best / scenario.velocity()
    } else {
        f64::NEG_INFINITY
    })
}

/// Best plan found by a grid over per-user per-vertex time splits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResult {
    pub value: f64,
    pub selection: Selection,
    /// `times[k][m]`, seconds.
    pub times: Vec<Vec<f64>>,
}

/// Minimum energy for one user to deliver `target` bits/Hz given time shares
/// `t[m]` at gains `a[m]`: powers `p_m = max(0, w - 1/a_m)` with the water
/// level `w` set by bisection.
fn water_fill(t: &[f64], a: &[f64], target: f64) -> f64 {
    let delivered = |w: f64| -> f64 {
        t.iter()
            .zip(a)
            .filter(|(&ti, _)| ti > 0.0)
            .map(|(&ti, &ai)| ti * (ai * w).max(1.0).log2())
            .sum()
    };
    let floor = t
        .iter()
        .zip(a)
        .filter(|(&ti, _)| ti > 0.0)
        .map(|(_, &ai)| 1.0 / ai)
        .fold(f64::INFINITY, f64::min);
    if !floor.is_finite() {
        return f64::INFINITY;
    }
    let (mut lo, mut hi) = (floor, 2.0 * floor);
    while delivered(hi) < target {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if delivered(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    t.iter()
        .zip(a)
        .map(|(&ti, &ai)| if ti > 0.0 { ti * (hi - 1.0 / ai).max(0.0) } else { 0.0 })
        .sum()
}

/// All vectors of `parts` nonnegative integers summing to `total`.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Grid search of the original problem without the single-vertex
/// restriction. Each user gets `n_k >= 1` of `user_steps` equal shares of the
/// communication time and splits it over the selected vertices in
/// `split_steps` equal shares; powers are optimal for each split.
pub fn direct_p1_grid(
    scenario: &Scenario,
    user_steps: usize,
    split_steps: usize,
) -> Result<GridResult> {
    let m = scenario.num_vertices();
    let k = scenario.num_users();
    guard("grid oracle users", GRID_MAX_K, k)?;
    guard("grid oracle vertices", GRID_MAX_M, m)?;
    if user_steps < k || split_steps == 0 {
        return Err(Error::InvalidParams(format!(
            "grid needs at least {k} user steps and one split step"
        )));
    }
    let mu = scenario.mu();
    let motion_rate = mu * (scenario.alpha1() + scenario.alpha2() * scenario.velocity());
    let t_budget = scenario.time_budget();

    let mut best: Option<GridResult> = None;
    for free in 0..1u64 << (m - 1) {
        let sel = Selection::from_mask(1 | free << 1, m)?;
        let length = brute_tour(&sel, scenario)?;
        let upsilon = t_budget - length / scenario.velocity();
        if !(upsilon > 0.0) {
            continue;
        }
        let verts: Vec<usize> = sel.vertices().collect();
        let splits = compositions(split_steps, verts.len());
        let h = upsilon / user_steps as f64;

        // best[user][n] = (energy, split index) with n shares of time
        let mut table = vec![vec![(f64::INFINITY, 0usize); user_steps + 1]; k];
        for (user, row) in table.iter_mut().enumerate() {
            let gains: Vec<f64> = verts.iter().map(|&v| scenario.gain(user, v)).collect();
            let target = scenario.gamma()[user];
            for (n, cell) in row.iter_mut().enumerate().take(user_steps - k + 2).skip(1) {
                let tau = n as f64 * h;
                for (si, split) in splits.iter().enumerate() {
                    let times: Vec<f64> = split
                        .iter()
                        .map(|&c| tau * c as f64 / split_steps as f64)
                        .collect();
                    let e = water_fill(&times, &gains, target);
                    if e < cell.0 {
                        *cell = (e, si);
                    }
                }
            }
        }

        let motion = motion_rate * (t_budget - upsilon);
        for shares in compositions(user_steps - k, k) {
            let shares: Vec<usize> = shares.iter().map(|s| s + 1).collect();
            let comm: f64 = (0..k).map(|u| table[u][shares[u]].0).sum();
            let value = motion + (2.0 - mu) * comm;
            if best.as_ref().is_none_or(|b| value < b.value) {
                let times = (0..k)
                    .map(|u| {
                        let mut row = vec![0.0; m];
                        let split = &splits[table[u][shares[u]].1];
                        for (idx, &v) in verts.iter().enumerate() {
                            row[v] = shares[u] as f64 * h * split[idx] as f64 / split_steps as f64;
                        }
                        row
                    })
                    .collect();
                best = Some(GridResult {
                    value,
                    selection: sel,
                    times,
                });
            }
        }
    }
    best.ok_or_else(|| Error::InvalidScenario("no selection leaves communication time".into()))
}

/// How far the grid optimum can sit above the true optimum when the optimal
/// plan gives user `k` total time `tau[k]` at gain `b[k]`, with grid spacing
/// `h` on the total times. Uses the slope of `t (2^{g/t} - 1) / b` at
/// `tau - h`, which bounds the cost of rounding any `tau` down by at most `h`.
pub fn grid_resolution_bound(tau: &[f64], b: &[f64], gamma: &[f64], h: f64, mu: f64) -> f64 {
    let slope = |t: f64, g: f64, bk: f64| {
        let e = (g / t * LN_2).exp();
        (e - 1.0 - e * g * LN_2 / t) / bk
    };
    (2.0 - mu)
        * tau
            .iter()
            .zip(b)
            .zip(gamma)
            .map(|((&t, &bk), &g)| {
                if t - h > 0.0 {
                    slope(t - h, g, bk).abs() * h
                } else {
                    f64::INFINITY
                }
            })
            .sum::<f64>()
}

/// Outcome of one family of oracle comparisons.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    /// Largest relative discrepancy (or bound violation) seen.
    pub worst: f64,
}

impl Check {
    fn new(name: &str) -> Self {
        Check {
            name: name.into(),
            cases: 0,
            failures: 0,
            worst: 0.0,
        }
    }

    fn record(&mut self, excess: f64, ok: bool) {
        self.cases += 1;
        self.worst = self.worst.max(excess);
        if !ok {
            self.failures += 1;
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

fn rel_gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
    }
}

/// Cross-checks the solvers against the references above on `cases` random
/// scenarios with up to `max_m` vertices.
pub fn certify(max_m: usize, cases: usize, seed: u64) -> Result<Vec<Check>> {
    use crate::assignment::{phi, psi};
    use crate::bnb::solve;
    use crate::experiments::{generate_with_rng, run_rng, GenParams};
    use crate::tour::shortest_tour;
    use rand::Rng;

    if !(2..=EXHAUSTIVE_MAX_M).contains(&max_m) {
        return Err(Error::InvalidParams(format!(
            "max_m must lie in 2..={EXHAUSTIVE_MAX_M}"
        )));
    }
    let mut optimum = Check::new("branch-and-bound vs exhaustive");
    let mut tours = Check::new("held-karp vs permutations");
    let mut relax = Check::new("matching relaxation vs enumeration");
    let mut bound = Check::new("bound below every completion");
    for case in 0..cases {
        let mut rng = run_rng(seed, case as u64);
        let params = GenParams {
            m: rng.gen_range(2..=max_m),
            k: rng.gen_range(3..=8),
            ..GenParams::default()
        };
        let sc = generate_with_rng(&params, &mut rng)?;
        let m = sc.num_vertices();

        let (best, _) = exhaustive(&sc)?;
        let got = solve(&sc, None)?.objective;
        let gap = rel_gap(got, best);
        optimum.record(gap, gap <= 1e-9);

        let sel = Selection::from_mask(1 | rng.gen_range(0..1u64 << (m - 1)) << 1, m)?;
        if sel.count() <= BRUTE_TOUR_MAX_SELECTED {
            let hk = shortest_tour(&sel, &sc)?.map_or(f64::INFINITY, |t| t.length);
            let bf = brute_tour(&sel, &sc)?;
            tours.record(rel_gap(hk, bf), hk == bf);
        }

        let depth = rng.gen_range(1..=m);
        let mut bits = vec![true];
        bits.extend((1..depth).map(|_| rng.gen_bool(0.5)));
        let prefix = Prefix::from_bits(&bits, m)?;
        if m <= BRUTE_PHI_MAX_M {
            let a = phi(&prefix, &sc);
            let b = brute_phi(&prefix, &sc)?;
            let gap = rel_gap(a, b);
            relax.record(gap, gap <= 1e-12);
        }
        let lower = psi(&prefix, &sc);
        for completion in prefix.completions() {
            let v = xi_value(&completion, &sc)?;
            let excess = (lower - v) / v.abs().max(1e-300);
            bound.record(excess.max(0.0), lower <= v + 1e-9 * v.abs());
        }
    }
    Ok(vec![optimum, tours, relax, bound])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ScenarioData;

    fn tiny(m: usize, gains: Vec<Vec<f64>>, d: Vec<Vec<f64>>) -> Scenario {
        let k = gains.len();
        Scenario::new(ScenarioData {
            m,
            k,
            d,
            a_gain: gains,
            gamma: vec![1.0; k],
            t: 100.0,
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
    fn water_fill_single_vertex_is_qos_tight() {
        // t log2(1 + a p) = g  =>  p = (2^{g/t} - 1) / a
        let e = water_fill(&[2.0], &[4.0], 3.0);
        let p = (2f64.powf(1.5) - 1.0) / 4.0;
        assert!((e - 2.0 * p).abs() < 1e-12);
        // zero-time vertex is ignored
        let e2 = water_fill(&[2.0, 0.0], &[4.0, 100.0], 3.0);
        assert!((e2 - e).abs() < 1e-12);
    }

    #[test]
    fn compositions_count() {
        assert_eq!(compositions(4, 1), vec![vec![4]]);
        assert_eq!(compositions(3, 2).len(), 4);
        assert_eq!(compositions(5, 3).len(), 21);
    }

    #[test]
    fn tour_oracle_small_cases() {
        let d = vec![
            vec![0.0, 2.0, 3.0],
            vec![2.0, 0.0, 4.0],
            vec![3.0, 4.0, 0.0],
        ];
        let sc = tiny(3, vec![vec![1.0; 3]], d);
        let two = Selection::from_bits(&[true, true, false]).unwrap();
        assert_eq!(brute_tour(&two, &sc).unwrap(), 4.0);
        assert_eq!(brute_tour(&Selection::full(3), &sc).unwrap(), 9.0);
        assert_eq!(brute_tour(&Selection::depot_only(3), &sc).unwrap(), 0.0);
    }

    #[test]
    fn guards_are_errors() {
        let m = 17;
        let d = (0..m).map(|i| (0..m).map(|j| (i as f64 - j as f64).abs()).collect()).collect();
        let sc = tiny(m, vec![vec![1.0; m]], d);
        assert!(matches!(exhaustive(&sc), Err(Error::SizeGuard { .. })));
        assert!(matches!(
            brute_tour(&Selection::full(m), &sc),
            Err(Error::SizeGuard { .. })
        ));
        assert!(matches!(
            brute_phi(&Prefix::root(m), &sc),
            Err(Error::SizeGuard { .. })
        ));
        assert!(matches!(direct_p1_grid(&sc, 10, 4), Err(Error::SizeGuard { .. })));
    }

    #[test]
    fn grid_concentrates_on_better_vertex() {
        let d = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let sc = tiny(2, vec![vec![1e-4, 6.0]], d);
        let g = direct_p1_grid(&sc, 20, 10).unwrap();
        assert_eq!(g.selection, Selection::full(2));
        assert_eq!(g.times[0][0], 0.0);
        assert!(g.times[0][1] > 0.0);
    }

    #[test]
    fn equal_gains_split_ties_concentration() {
        let d = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let sc = tiny(2, vec![vec![2.0, 2.0]], d);
        let g = direct_p1_grid(&sc, 20, 10).unwrap();
        // with equal gains any split costs the same, so the stationary plan wins
        assert!(g.selection.is_depot_only());
        let single = water_fill(&[30.0], &[2.0], 1.0);
        let split = water_fill(&[10.0, 20.0], &[2.0, 2.0], 1.0);
        assert!((single - split).abs() <= 1e-12 * single);
    }
}
