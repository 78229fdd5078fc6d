//! Minimum-cost assignment and the matching relaxation of the tour subproblem.

use crate::error::{Error, Result};
use crate::inner::{comm_cost, EffectiveGains};
use crate::model::{Selection, MAX_VERTICES};
use crate::scenario::Scenario;

/// Partial selection: the first `depth` coordinates are fixed, the rest free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Prefix {
    mask: u64,
    depth: usize,
    m: usize,
}

impl Prefix {
    /// The root prefix `(1)` over `m` vertices.
    pub fn root(m: usize) -> Self {
        assert!((1..=MAX_VERTICES).contains(&m));
        Prefix { mask: 1, depth: 1, m }
    }

    pub fn from_bits(bits: &[bool], m: usize) -> Result<Self> {
        if bits.is_empty() || bits.len() > m || m > MAX_VERTICES {
            return Err(Error::InvalidParams(format!(
                "prefix of length {} over {m} vertices",
                bits.len()
            )));
        }
        if !bits[0] {
            return Err(Error::InvalidParams("the depot must be selected".into()));
        }
        let mask = bits
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| if b { acc | 1 << i } else { acc });
        Ok(Prefix {
            mask,
            depth: bits.len(),
            m,
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn num_vertices(&self) -> usize {
        self.m
    }

    pub fn is_full(&self) -> bool {
        self.depth == self.m
    }

    pub fn is_fixed_selected(&self, v: usize) -> bool {
        v < self.depth && self.mask >> v & 1 == 1
    }

    pub fn is_fixed_unselected(&self, v: usize) -> bool {
        v < self.depth && self.mask >> v & 1 == 0
    }

    pub fn fixed_selected_count(&self) -> usize {
        self.mask.count_ones() as usize
    }

    /// Fixes the next coordinate.
    pub fn extend(&self, bit: bool) -> Result<Self> {
        if self.is_full() {
            return Err(Error::BranchAtLeaf(self.depth));
        }
        Ok(Prefix {
            mask: if bit { self.mask | 1 << self.depth } else { self.mask },
            depth: self.depth + 1,
            m: self.m,
        })
    }

    /// The completion with every free coordinate set to 1.
    pub fn upper_completion(&self) -> Selection {
        let free = Selection::full(self.m).mask() & !((1u64 << self.depth) - 1);
        Selection::from_mask(self.mask | free, self.m).expect("valid prefix")
    }

    /// The unique selection of a full prefix.
    pub fn to_selection(&self) -> Option<Selection> {
        self.is_full()
            .then(|| Selection::from_mask(self.mask, self.m).expect("valid prefix"))
    }

    /// Number of full selections consistent with this prefix.
    pub fn completion_count(&self) -> u64 {
        1u64 << (self.m - self.depth)
    }

    /// Every full selection consistent with this prefix.
    pub fn completions(&self) -> impl Iterator<Item = Selection> + '_ {
        let free = self.m - self.depth;
        (0..1u64 << free).map(move |c| {
            Selection::from_mask(self.mask | c << self.depth, self.m).expect("valid prefix")
        })
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..self.depth).map(|v| self.mask >> v & 1 == 1).collect()
    }
}

impl std::fmt::Display for Prefix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for b in self.bits() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Optimal assignment: `matching[row] = column` and the total cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub matching: Vec<usize>,
    pub cost: f64,
}

struct Solved {
    matching: Vec<usize>,
    cost: f64,
    // Reduced cost of (i, j) is c[i][j] - u[i] - v[j] >= 0, zero on the matching.
    u: Vec<f64>,
    v: Vec<f64>,
    cost_scale: f64,
}

fn check_square(cost: &[Vec<f64>]) -> Result<usize> {
    let n = cost.len();
    if n == 0 || cost.iter().any(|r| r.len() != n) {
        return Err(Error::ShapeMismatch {
            what: "cost matrix",
            expected: "square, n >= 1".into(),
            got: format!("{}x{}", n, cost.first().map_or(0, Vec::len)),
        });
    }
    if cost.iter().flatten().any(|c| c.is_nan() || *c == f64::NEG_INFINITY) {
        return Err(Error::InvalidParams("cost entries must be finite or +inf".into()));
    }
    Ok(n)
}

/// Shortest augmenting path with potentials, O(n^3). `+inf` entries are
/// replaced by a penalty larger than any finite matching can cost.
fn solve(cost: &[Vec<f64>]) -> Result<Solved> {
    let n = check_square(cost)?;
    let max_abs = cost
        .iter()
        .flatten()
        .filter(|c| c.is_finite())
        .fold(0.0f64, |m, c| m.max(c.abs()));
    let big = (2 * n + 1) as f64 * (max_abs + 1.0);
    let a = |i: usize, j: usize| {
        let c = cost[i - 1][j - 1];
        if c.is_finite() {
            c
        } else {
            big
        }
    };

    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = a(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut matching = vec![0; n];
    for j in 1..=n {
        matching[p[j] - 1] = j - 1;
    }
    let mut total = 0.0;
    for (i, &j) in matching.iter().enumerate() {
        let c = cost[i][j];
        if !c.is_finite() {
            return Err(Error::NoPerfectMatching);
        }
        total += c;
    }
    Ok(Solved {
        matching,
        cost: total,
        u: u[1..].to_vec(),
        v: v[1..].to_vec(),
        cost_scale: max_abs + 1.0,
    })
}

/// Kuhn's augmenting-path test: can the free rows be perfectly matched to the
/// free columns using only allowed edges?
fn has_perfect_matching(allowed: &[Vec<bool>], rows: &[usize], cols_free: &[bool]) -> bool {
    let n = allowed.len();
    let mut col_owner = vec![usize::MAX; n];
    fn augment(
        r: usize,
        allowed: &[Vec<bool>],
        cols_free: &[bool],
        seen: &mut [bool],
        owner: &mut [usize],
    ) -> bool {
        for c in 0..allowed.len() {
            if allowed[r][c] && cols_free[c] && !seen[c] {
                seen[c] = true;
                if owner[c] == usize::MAX || augment(owner[c], allowed, cols_free, seen, owner) {
                    owner[c] = r;
                    return true;
                }
            }
        }
        false
    }
    rows.iter().all(|&r| {
        let mut seen = vec![false; n];
        augment(r, allowed, cols_free, &mut seen, &mut col_owner)
    })
}

/// Minimum-cost perfect matching of a square matrix whose entries may be `+inf`
/// (forbidden).
///
/// Among optimal matchings the lexicographically smallest column sequence is
/// returned.
pub fn hungarian(cost: &[Vec<f64>]) -> Result<Assignment> {
    let solved = solve(cost)?;
    let n = cost.len();
    // Optimal matchings are exactly the perfect matchings on tight edges.
    let tol = 1e-9 * solved.cost_scale;
    let tight: Vec<Vec<bool>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| cost[i][j].is_finite() && cost[i][j] - solved.u[i] - solved.v[j] <= tol)
                .collect()
        })
        .collect();
    let mut cols_free = vec![true; n];
    let mut matching = Vec::with_capacity(n);
    for i in 0..n {
        let rest: Vec<usize> = (i + 1..n).collect();
        let pick = (0..n).find(|&j| {
            if !tight[i][j] || !cols_free[j] {
                return false;
            }
            cols_free[j] = false;
            let ok = has_perfect_matching(&tight, &rest, &cols_free);
            cols_free[j] = true;
            ok
        });
        match pick {
            Some(j) => {
                cols_free[j] = false;
                matching.push(j);
            }
            // Tolerance trouble: fall back to the solver's own optimum.
            None => {
                return Ok(Assignment {
                    matching: solved.matching,
                    cost: solved.cost,
                })
            }
        }
    }
    let cost_total = matching.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    Ok(Assignment {
        matching,
        cost: cost_total,
    })
}

/// Optimistic communication time over every completion of `prefix`.
///
/// Each fixed-selected vertex needs one real out-edge and one real in-edge;
/// free vertices may relay at most one edge each way; fixed-unselected vertices
/// are excluded. Solved as a 2M x 2M assignment (out-slots and suppliers
/// against in-slots and absorbers). With fewer than two fixed-selected
/// vertices the value is `T`. Returns `-inf` when no admissible edge set exists.
pub fn phi(prefix: &Prefix, scenario: &Scenario) -> f64 {
    let m = scenario.num_vertices();
    assert_eq!(prefix.num_vertices(), m, "prefix and scenario disagree on M");
    let t = scenario.time_budget();
    if prefix.fixed_selected_count() < 2 {
        return t;
    }
    let inf = f64::INFINITY;
    let mut cost = vec![vec![inf; 2 * m]; 2 * m];
    for i in 0..m {
        if prefix.is_fixed_unselected(i) {
            // Unused out-slot and in-slot pair off through the dummies.
            cost[i][m + i] = 0.0;
            cost[m + i][i] = 0.0;
        } else {
            for (j, c) in cost[i][..m].iter_mut().enumerate() {
                if i != j && !prefix.is_fixed_unselected(j) {
                    *c = scenario.distance(i, j);
                }
            }
            if !prefix.is_fixed_selected(i) {
                cost[i][m + i] = 0.0;
                cost[m + i][i] = 0.0;
            }
        }
        cost[m + i][m..].fill(0.0);
    }
    match solve(&cost) {
        Ok(s) => t - s.cost / scenario.velocity(),
        Err(Error::NoPerfectMatching) => f64::NEG_INFINITY,
        Err(e) => panic!("assignment on a well-formed matrix failed: {e}"),
    }
}

/// Lower bound on the objective over every completion of `prefix`; `+inf`
/// when no completion can leave positive communication time.
pub fn psi(prefix: &Prefix, scenario: &Scenario) -> f64 {
    let budget = phi(prefix, scenario);
    if !(budget > 0.0) {
        return f64::INFINITY;
    }
    let gains = EffectiveGains::of(scenario, &prefix.upper_completion());
    let comm = comm_cost(&gains, scenario.gamma(), budget, scenario.mu());
    scenario.travel_cost_rate() * (scenario.time_budget() - budget) + comm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_optimal_for_zero_diagonal() {
        let c: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..4).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
            .collect();
        let a = hungarian(&c).unwrap();
        assert_eq!(a.matching, vec![0, 1, 2, 3]);
        assert_eq!(a.cost, 0.0);
    }

    #[test]
    fn ties_resolve_lexicographically() {
        let c = vec![vec![1.0; 3]; 3];
        let a = hungarian(&c).unwrap();
        assert_eq!(a.cost, 3.0);
        assert_eq!(a.matching, vec![0, 1, 2]);

        // Both [0,1] and [1,0] cost 2.
        let c = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert_eq!(hungarian(&c).unwrap().matching, vec![0, 1]);
    }

    #[test]
    fn forbidden_entries() {
        let inf = f64::INFINITY;
        let c = vec![vec![inf, 2.0], vec![5.0, inf]];
        let a = hungarian(&c).unwrap();
        assert_eq!(a.matching, vec![1, 0]);
        assert_eq!(a.cost, 7.0);
        let c = vec![vec![inf, 1.0], vec![inf, 1.0]];
        assert!(matches!(hungarian(&c), Err(Error::NoPerfectMatching)));
        assert!(hungarian(&[]).is_err());
        assert!(hungarian(&[vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn negative_costs() {
        let c = vec![vec![-5.0, 0.0], vec![0.0, -5.0]];
        let a = hungarian(&c).unwrap();
        assert_eq!(a.cost, -10.0);
    }

    #[test]
    fn prefix_navigation() {
        let root = Prefix::root(4);
        assert_eq!(root.to_string(), "1");
        let child = root.extend(false).unwrap().extend(true).unwrap();
        assert_eq!(child.to_string(), "101");
        assert!(child.is_fixed_unselected(1));
        assert!(child.is_fixed_selected(2));
        assert!(!child.is_fixed_selected(3) && !child.is_fixed_unselected(3));
        assert_eq!(child.upper_completion().to_string(), "1011");
        assert_eq!(child.completion_count(), 2);
        let all: Vec<String> = child.completions().map(|s| s.to_string()).collect();
        assert_eq!(all, vec!["1010", "1011"]);
        let leaf = child.extend(true).unwrap();
        assert!(leaf.is_full());
        assert!(matches!(leaf.extend(false), Err(Error::BranchAtLeaf(4))));
        assert!(Prefix::from_bits(&[false], 3).is_err());
    }
}
