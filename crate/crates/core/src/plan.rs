//! Solution artifacts: tours, per-user allocations and solver reports.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::model::Selection;
use crate::scenario::Scenario;

/// Dense binary edge matrix `W`, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMatrix {
    n: usize,
    bits: Vec<bool>,
}

impl EdgeMatrix {
    pub fn zeros(n: usize) -> Self {
        EdgeMatrix {
            n,
            bits: vec![false; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Self {
        let n = rows.len();
        let mut w = EdgeMatrix::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "edge matrix must be square");
            for (j, &b) in row.iter().enumerate() {
                w.set(i, j, b != 0);
            }
        }
        w
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, on: bool) {
        self.bits[i * self.n + j] = on;
    }

    pub fn out_degree(&self, i: usize) -> usize {
        (0..self.n).filter(|&j| self.get(i, j)).count()
    }

    pub fn in_degree(&self, j: usize) -> usize {
        (0..self.n).filter(|&i| self.get(i, j)).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// `Tr(D^T W)`: the total length of the encoded edges.
    pub fn trace_length(&self, scenario: &Scenario) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if self.get(i, j) {
                    total += scenario.distance(i, j);
                }
            }
        }
        total
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| u8::from(self.get(i, j))).collect())
            .collect()
    }
}

/// Shortest closed tour over a selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TourSolution {
    /// Visiting order starting and ending at the depot; `[0]` when nothing
    /// else is selected.
    pub order: Vec<usize>,
    /// Meters.
    pub length: f64,
    /// Seconds left for communication, `T - length / a`.
    pub upsilon: f64,
}

impl TourSolution {
    pub fn stationary(time_budget: f64) -> Self {
        TourSolution {
            order: vec![0],
            length: 0.0,
            upsilon: time_budget,
        }
    }

    pub fn edge_matrix(&self, m: usize) -> EdgeMatrix {
        let mut w = EdgeMatrix::zeros(m);
        for pair in self.order.windows(2) {
            w.set(pair[0], pair[1], true);
        }
        w
    }
}

/// Optimal per-user time and power at the user's serving vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    /// Serving vertex per user.
    pub serve: Vec<usize>,
    /// Transmit time per user, seconds.
    pub s: Vec<f64>,
    /// RF source power per user, watts.
    pub q: Vec<f64>,
    /// Multiplier of the time-budget constraint.
    pub rho: f64,
}

impl Allocation {
    /// Communication energy `sum_k s_k q_k`, joules.
    pub fn energy(&self) -> f64 {
        self.s.iter().zip(&self.q).map(|(s, q)| s * q).sum()
    }

    /// Expands `s` into the K x M matrix `t[k][m]`.
    pub fn time_matrix(&self, m: usize) -> Vec<Vec<f64>> {
        self.expand(&self.s, m)
    }

    /// Expands `q` into the K x M matrix `p[k][m]`.
    pub fn power_matrix(&self, m: usize) -> Vec<Vec<f64>> {
        self.expand(&self.q, m)
    }

    fn expand(&self, values: &[f64], m: usize) -> Vec<Vec<f64>> {
        self.serve
            .iter()
            .zip(values)
            .map(|(&v, &x)| {
                let mut row = vec![0.0; m];
                row[v] = x;
                row
            })
            .collect()
    }

    pub fn max_power(&self) -> f64 {
        self.q.iter().copied().fold(0.0, f64::max)
    }
}

/// One step of the branch-and-bound loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Number of prefix sets in the living pool.
    pub pool_nodes: usize,
    /// Number of full selections covered by those sets.
    pub candidates: u64,
    pub incumbent: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    /// Bound evaluations.
    pub bound_evals: u64,
    /// Exact leaf evaluations.
    pub leaf_evals: u64,
    pub trace: Vec<TraceRecord>,
    #[serde(with = "secs")]
    pub wall_time: Duration,
}

mod secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_secs_f64(f64::deserialize(d)?))
    }
}

/// Complete plan and its energy accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Weighted energy `mu * motion + (2 - mu) * comm`, joules.
    pub objective: f64,
    pub motion_energy: f64,
    pub comm_energy: f64,
    pub selection: Selection,
    pub tour: TourSolution,
    pub alloc: Allocation,
    pub stats: SolveStats,
}

impl SolveReport {
    /// Recomputes the weighted objective from the energy split.
    pub fn weighted_energy(&self, scenario: &Scenario) -> f64 {
        scenario.mu() * self.motion_energy + scenario.comm_weight() * self.comm_energy
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_matrix_from_order() {
        let tour = TourSolution {
            order: vec![0, 2, 1, 0],
            length: 0.0,
            upsilon: 0.0,
        };
        let w = tour.edge_matrix(3);
        assert!(w.get(0, 2) && w.get(2, 1) && w.get(1, 0));
        assert_eq!(w.out_degree(0), 1);
        assert_eq!(w.in_degree(0), 1);
        assert!(TourSolution::stationary(10.0).edge_matrix(3).is_empty());
        assert_eq!(EdgeMatrix::from_rows(&w.to_rows()), w);
    }

    #[test]
    fn allocation_expansion() {
        let alloc = Allocation {
            serve: vec![1, 0],
            s: vec![2.0, 3.0],
            q: vec![0.5, 1.0],
            rho: 0.1,
        };
        assert_eq!(alloc.energy(), 4.0);
        assert_eq!(alloc.time_matrix(2), vec![vec![0.0, 2.0], vec![3.0, 0.0]]);
        assert_eq!(alloc.power_matrix(3)[0], vec![0.0, 0.5, 0.0]);
        assert_eq!(alloc.max_power(), 1.0);
    }
}
