//! Independent checker for the original mixed-integer constraints.
//!
//! Connectivity is verified structurally by walking the successor chain from
//! the depot rather than through slack-variable inequalities.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{rate, Selection};
use crate::plan::EdgeMatrix;
use crate::scenario::Scenario;

/// Relative slack on the QoS and time-budget inequalities.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    Qos { user: usize, delivered: f64, target: f64 },
    TimeBudget { used: f64, budget: f64 },
    Degree { vertex: usize, out: usize, inn: usize, expected: usize },
    SelfLoop { vertex: usize },
    MissingEdge { from: usize, to: usize },
    Subtour { reached: usize, selected: usize },
    TimeAtUnvisited { user: usize, vertex: usize },
    Negative { user: usize, vertex: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

fn check_matrix(what: &'static str, rows: &[Vec<f64>], k: usize, m: usize) -> Result<()> {
    if rows.len() != k || rows.iter().any(|r| r.len() != m) {
        return Err(Error::ShapeMismatch {
            what,
            expected: format!("{k}x{m}"),
            got: format!("{}x{}", rows.len(), rows.first().map_or(0, Vec::len)),
        });
    }
    Ok(())
}

/// Checks a full plan `(v, W, t, p)` against every constraint of the
/// original problem and lists what is violated.
pub fn check_p1_feasible(
    scenario: &Scenario,
    selection: &Selection,
    w: &EdgeMatrix,
    t: &[Vec<f64>],
    p: &[Vec<f64>],
) -> Result<FeasibilityReport> {
    let m = scenario.num_vertices();
    let k = scenario.num_users();
    if selection.len() != m || w.size() != m {
        return Err(Error::ShapeMismatch {
            what: "selection/W",
            expected: m.to_string(),
            got: format!("{}/{}", selection.len(), w.size()),
        });
    }
    check_matrix("t", t, k, m)?;
    check_matrix("p", p, k, m)?;

    let mut violations = Vec::new();

    for user in 0..k {
        for vertex in 0..m {
            let (tv, pv) = (t[user][vertex], p[user][vertex]);
            if !(tv >= 0.0 && pv >= 0.0) {
                violations.push(Violation::Negative { user, vertex });
            }
            if !selection.contains(vertex) && tv != 0.0 {
                violations.push(Violation::TimeAtUnvisited { user, vertex });
            }
        }
        let delivered: f64 = (0..m)
            .map(|v| {
                rate(
                    t[user][v].max(0.0),
                    selection.contains(v),
                    scenario.gain(user, v),
                    p[user][v].max(0.0),
                )
            })
            .sum();
        let target = scenario.gamma()[user];
        if !(delivered >= target * (1.0 - FEASIBILITY_TOL)) {
            violations.push(Violation::Qos {
                user,
                delivered,
                target,
            });
        }
    }

    for v in 0..m {
        if w.get(v, v) {
            violations.push(Violation::SelfLoop { vertex: v });
        }
        for j in 0..m {
            if w.get(v, j) && scenario.distance(v, j) == f64::INFINITY {
                violations.push(Violation::MissingEdge { from: v, to: j });
            }
        }
    }

    // A lone depot is served without moving: W must be empty.
    let single = selection.count() == 1;
    for v in 0..m {
        let expected = if single { 0 } else { usize::from(selection.contains(v)) };
        let (out, inn) = (w.out_degree(v), w.in_degree(v));
        if out != expected || inn != expected {
            violations.push(Violation::Degree {
                vertex: v,
                out,
                inn,
                expected,
            });
        }
    }

    let degrees_ok = !violations
        .iter()
        .any(|x| matches!(x, Violation::Degree { .. } | Violation::SelfLoop { .. }));
    if degrees_ok && !single {
        let mut reached = 1;
        let mut cur = 0;
        loop {
            let next = (0..m).find(|&j| w.get(cur, j)).expect("out-degree checked");
            if next == 0 || reached > m {
                break;
            }
            reached += 1;
            cur = next;
        }
        if reached != selection.count() {
            violations.push(Violation::Subtour {
                reached,
                selected: selection.count(),
            });
        }
    }

    let travel = w.trace_length(scenario) / scenario.velocity();
    let used = travel + t.iter().flatten().sum::<f64>();
    let budget = scenario.time_budget();
    if !(used <= budget * (1.0 + FEASIBILITY_TOL)) {
        violations.push(Violation::TimeBudget { used, budget });
    }

    Ok(FeasibilityReport { violations })
}
