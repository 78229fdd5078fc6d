//! Best-first branch and bound over vertex selections.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use crate::assignment::{psi, Prefix};
use crate::error::{Error, Result};
use crate::inner::{xi, Xi};
use crate::model::{motion_energy, Selection};
use crate::plan::{SolveReport, SolveStats, TraceRecord};
use crate::scenario::Scenario;
use crate::tour::TourCache;

/// Relative slack on the pruning test `bound > incumbent`.
pub const PRUNE_SLACK: f64 = 1e-12;

/// A living-pool entry: a prefix set and its lower bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub prefix: Prefix,
    pub bound: f64,
}

impl Node {
    pub fn depth(&self) -> usize {
        self.prefix.depth()
    }
}

struct Entry {
    node: Node,
    seq: u64,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // Max-heap: the smallest bound, then the oldest entry, pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .node
            .bound
            .total_cmp(&self.node.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Splits a prefix on its next coordinate: `(.., 0)` then `(.., 1)`.
pub fn branch(prefix: &Prefix) -> Result<(Prefix, Prefix)> {
    Ok((prefix.extend(false)?, prefix.extend(true)?))
}

fn exceeds(bound: f64, incumbent: f64) -> bool {
    bound > incumbent + PRUNE_SLACK * incumbent.abs().max(1.0)
}

struct Search<'a> {
    scenario: &'a Scenario,
    tours: TourCache<'a>,
    pool: BinaryHeap<Entry>,
    seq: u64,
    incumbent: f64,
    best: Selection,
    stats: SolveStats,
}

impl Search<'_> {
    fn offer(&mut self, child: Prefix) -> Result<()> {
        if let Some(selection) = child.to_selection() {
            self.stats.leaf_evals += 1;
            let value = xi(&selection, self.scenario, &mut self.tours)?.value();
            if value <= self.incumbent {
                self.incumbent = value;
                self.best = selection;
            }
        } else {
            self.stats.bound_evals += 1;
            let bound = psi(&child, self.scenario);
            if !exceeds(bound, self.incumbent) {
                self.seq += 1;
                self.pool.push(Entry {
                    node: Node {
                        prefix: child,
                        bound,
                    },
                    seq: self.seq,
                });
            }
        }
        Ok(())
    }

    fn record(&mut self, iteration: usize) {
        let candidates = self.pool.iter().map(|e| e.node.prefix.completion_count()).sum();
        self.stats.trace.push(TraceRecord {
            iteration,
            pool_nodes: self.pool.len(),
            candidates,
            incumbent: self.incumbent,
        });
    }
}

/// Globally optimal selection, tour and allocation.
///
/// Without `initial` the search starts from the no-movement plan.
pub fn solve(scenario: &Scenario, initial: Option<(f64, Selection)>) -> Result<SolveReport> {
    let started = Instant::now();
    let m = scenario.num_vertices();
    let mut tours = TourCache::new(scenario);
    let (incumbent, best) = match initial {
        Some((value, selection)) => {
            if selection.len() != m {
                return Err(Error::ShapeMismatch {
                    what: "initial selection",
                    expected: m.to_string(),
                    got: selection.len().to_string(),
                });
            }
            (value, selection)
        }
        None => {
            let e1 = Selection::depot_only(m);
            (xi(&e1, scenario, &mut tours)?.value(), e1)
        }
    };
    let mut search = Search {
        scenario,
        tours,
        pool: BinaryHeap::new(),
        seq: 0,
        incumbent,
        best,
        stats: SolveStats::default(),
    };

    let root = Prefix::root(m);
    if !root.is_full() {
        let (zero, one) = branch(&root)?;
        search.offer(zero)?;
        search.offer(one)?;
    }
    let mut iteration = 0;
    search.record(iteration);
    while let Some(Entry { node, .. }) = search.pool.pop() {
        iteration += 1;
        if !exceeds(node.bound, search.incumbent) {
            let (zero, one) = branch(&node.prefix)?;
            search.offer(zero)?;
            search.offer(one)?;
        }
        search.record(iteration);
    }

    let Search {
        mut tours,
        best,
        mut stats,
        ..
    } = search;
    let Xi::Feasible {
        objective,
        tour,
        alloc,
    } = xi(&best, scenario, &mut tours)?
    else {
        return Err(Error::InvalidScenario(format!(
            "selection {best} has no feasible plan"
        )));
    };
    let motion = motion_energy(
        tour.length,
        scenario.alpha1(),
        scenario.alpha2(),
        scenario.velocity(),
    );
    let comm = alloc.energy();
    stats.wall_time = started.elapsed();
    Ok(SolveReport {
        objective,
        motion_energy: motion,
        comm_energy: comm,
        selection: best,
        tour,
        alloc,
        stats,
    })
}

/// Full plan for a fixed selection, in the same report format as [`solve`].
pub fn evaluate(scenario: &Scenario, selection: &Selection) -> Result<Option<SolveReport>> {
    let started = Instant::now();
    let mut tours = TourCache::new(scenario);
    let Xi::Feasible {
        objective,
        tour,
        alloc,
    } = xi(selection, scenario, &mut tours)?
    else {
        return Ok(None);
    };
    let motion = motion_energy(
        tour.length,
        scenario.alpha1(),
        scenario.alpha2(),
        scenario.velocity(),
    );
    let comm = alloc.energy();
    Ok(Some(SolveReport {
        objective,
        motion_energy: motion,
        comm_energy: comm,
        selection: *selection,
        tour,
        alloc,
        stats: SolveStats {
            leaf_evals: 1,
            wall_time: started.elapsed(),
            ..SolveStats::default()
        },
    }))
}
