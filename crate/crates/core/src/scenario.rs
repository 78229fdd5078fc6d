//! Immutable problem instances and their JSON representation.
//!
//! Vertex 0 is the depot where every tour starts and ends. Distances are
//! meters, with `f64::INFINITY` marking a missing directed edge (written as
//! the string `"inf"` in JSON). Gains are the per-user, per-vertex SNR-per-watt
//! values `A[k][m]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{dbm_to_watts, MAX_VERTICES};

/// Planar coordinates kept alongside generated scenarios for provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Positions {
    pub vertices: Vec<[f64; 2]>,
    pub users: Vec<[f64; 2]>,
}

/// Wire format of a scenario document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioData {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "D", with = "inf_matrix")]
    pub d: Vec<Vec<f64>>,
    #[serde(rename = "A")]
    pub a_gain: Vec<Vec<f64>>,
    pub gamma: Vec<f64>,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "a")]
    pub velocity: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub mu: f64,
    #[serde(rename = "N0_dbm")]
    pub n0_dbm: f64,
    pub beta: f64,
    pub eta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Positions>,
}

mod inf_matrix {
    use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Entry {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(rows: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<Entry>> = rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&x| {
                        if x == f64::INFINITY {
                            Entry::Text("inf".into())
                        } else {
                            Entry::Num(x)
                        }
                    })
                    .collect()
            })
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
        let rows: Vec<Vec<Entry>> = Vec::deserialize(d)?;
        rows.into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|e| match e {
                        Entry::Num(x) => Ok(x),
                        Entry::Text(t) if t == "inf" => Ok(f64::INFINITY),
                        Entry::Text(t) => Err(de::Error::custom(format!(
                            "distance entry {t:?} is neither a number nor \"inf\""
                        ))),
                    })
                    .collect()
            })
            .collect()
    }
}

/// A validated problem instance. All solver inputs derive from this value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioData", into = "ScenarioData")]
pub struct Scenario {
    m: usize,
    k: usize,
    distances: Vec<f64>,
    gains: Vec<f64>,
    gamma: Vec<f64>,
    time_budget: f64,
    velocity: f64,
    alpha1: f64,
    alpha2: f64,
    mu: f64,
    n0_dbm: f64,
    beta: f64,
    eta: f64,
    positions: Option<Positions>,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidScenario(msg.into())
}

fn check_shape(what: &'static str, rows: &[Vec<f64>], n_rows: usize, n_cols: usize) -> Result<()> {
    let bad = rows.len() != n_rows || rows.iter().any(|r| r.len() != n_cols);
    if bad {
        let got = format!(
            "{}x[{}]",
            rows.len(),
            rows.iter().map(|r| r.len().to_string()).collect::<Vec<_>>().join(",")
        );
        return Err(Error::ShapeMismatch {
            what,
            expected: format!("{n_rows}x{n_cols}"),
            got,
        });
    }
    Ok(())
}

impl TryFrom<ScenarioData> for Scenario {
    type Error = Error;

    fn try_from(data: ScenarioData) -> Result<Self> {
        let ScenarioData {
            m,
            k,
            d,
            a_gain,
            gamma,
            t,
            velocity,
            alpha1,
            alpha2,
            mu,
            n0_dbm,
            beta,
            eta,
            positions,
        } = data;

        if m == 0 || m > MAX_VERTICES {
            return Err(Error::SizeGuard {
                what: "vertex count",
                limit: MAX_VERTICES,
                got: m,
            });
        }
        if k == 0 {
            return Err(invalid("at least one user is required"));
        }
        check_shape("D", &d, m, m)?;
        check_shape("A", &a_gain, k, m)?;
        if gamma.len() != k {
            return Err(Error::ShapeMismatch {
                what: "gamma",
                expected: k.to_string(),
                got: gamma.len().to_string(),
            });
        }
        for (i, row) in d.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                if i == j && x != 0.0 {
                    return Err(invalid(format!("D[{i}][{i}] must be 0, got {x}")));
                }
                if x.is_nan() || x < 0.0 {
                    return Err(invalid(format!("D[{i}][{j}] = {x} is not a distance")));
                }
            }
        }
        for (u, row) in a_gain.iter().enumerate() {
            if let Some(x) = row.iter().find(|x| !x.is_finite() || **x < 0.0) {
                return Err(invalid(format!("gain row {u} contains {x}")));
            }
            if !(row[0] > 0.0) {
                return Err(invalid(format!("user {u} has zero gain at the depot")));
            }
        }
        if let Some(g) = gamma.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(invalid(format!("QoS target {g} must be positive")));
        }
        for (what, value) in [("T", t), ("a", velocity)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::NonPositive { what, value });
            }
        }
        if !(alpha1.is_finite() && alpha1 >= 0.0 && alpha2.is_finite() && alpha2 >= 0.0) {
            return Err(invalid("motion coefficients must be nonnegative"));
        }
        if !(0.0..=1.0).contains(&mu) {
            return Err(invalid(format!("mu = {mu} is outside [0, 1]")));
        }
        if !(beta > 0.0 && beta <= 1.0 && eta > 0.0 && eta <= 1.0) {
            return Err(invalid("beta and eta must lie in (0, 1]"));
        }
        if !n0_dbm.is_finite() {
            return Err(invalid("noise power must be finite"));
        }
        if let Some(p) = &positions {
            if p.vertices.len() != m || p.users.len() != k {
                return Err(invalid("positions do not match M and K"));
            }
        }

        Ok(Scenario {
            m,
            k,
            distances: d.into_iter().flatten().collect(),
            gains: a_gain.into_iter().flatten().collect(),
            gamma,
            time_budget: t,
            velocity,
            alpha1,
            alpha2,
            mu,
            n0_dbm,
            beta,
            eta,
            positions,
        })
    }
}

impl From<Scenario> for ScenarioData {
    fn from(s: Scenario) -> Self {
        ScenarioData {
            m: s.m,
            k: s.k,
            d: s.distances.chunks(s.m).map(<[f64]>::to_vec).collect(),
            a_gain: s.gains.chunks(s.m).map(<[f64]>::to_vec).collect(),
            gamma: s.gamma,
            t: s.time_budget,
            velocity: s.velocity,
            alpha1: s.alpha1,
            alpha2: s.alpha2,
            mu: s.mu,
            n0_dbm: s.n0_dbm,
            beta: s.beta,
            eta: s.eta,
            positions: s.positions,
        }
    }
}

impl Scenario {
    pub fn new(data: ScenarioData) -> Result<Self> {
        Scenario::try_from(data)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_data(&self) -> ScenarioData {
        self.clone().into()
    }

    pub fn num_vertices(&self) -> usize {
        self.m
    }

    pub fn num_users(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn distance(&self, from: usize, to: usize) -> f64 {
        self.distances[from * self.m + to]
    }

    #[inline]
    pub fn gain(&self, user: usize, vertex: usize) -> f64 {
        self.gains[user * self.m + vertex]
    }

    pub fn gain_row(&self, user: usize) -> &[f64] {
        &self.gains[user * self.m..(user + 1) * self.m]
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn time_budget(&self) -> f64 {
        self.time_budget
    }

    pub fn velocity(&self) -> f64 {
        self.velocity
    }

    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }

    pub fn alpha2(&self) -> f64 {
        self.alpha2
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn n0_dbm(&self) -> f64 {
        self.n0_dbm
    }

    pub fn n0_watts(&self) -> f64 {
        dbm_to_watts(self.n0_dbm)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn positions(&self) -> Option<&Positions> {
        self.positions.as_ref()
    }

    /// Weight on motion energy per second of travel: `mu * (alpha1 + alpha2 * a)`.
    pub fn travel_cost_rate(&self) -> f64 {
        self.mu * (self.alpha1 + self.alpha2 * self.velocity)
    }

    /// Weight on communication energy, `2 - mu`.
    pub fn comm_weight(&self) -> f64 {
        2.0 - self.mu
    }

    pub fn with_mu(&self, mu: f64) -> Result<Scenario> {
        let mut data = self.to_data();
        data.mu = mu;
        Scenario::new(data)
    }

    pub fn with_gamma(&self, gamma: Vec<f64>) -> Result<Scenario> {
        let mut data = self.to_data();
        data.gamma = gamma;
        Scenario::new(data)
    }

    /// Keeps the first `m` vertices (the depot included), dropping the rest.
    pub fn restrict_vertices(&self, m: usize) -> Result<Scenario> {
        if m == 0 || m > self.m {
            return Err(invalid(format!("cannot restrict {} vertices to {m}", self.m)));
        }
        let mut data = self.to_data();
        data.m = m;
        data.d = data.d.into_iter().take(m).map(|r| r[..m].to_vec()).collect();
        data.a_gain = data.a_gain.into_iter().map(|r| r[..m].to_vec()).collect();
        if let Some(p) = data.positions.as_mut() {
            p.vertices.truncate(m);
        }
        Scenario::new(data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn small_data() -> ScenarioData {
        ScenarioData {
            m: 3,
            k: 2,
            d: vec![
                vec![0.0, 3.0, f64::INFINITY],
                vec![3.0, 0.0, 4.0],
                vec![5.0, 4.0, 0.0],
            ],
            a_gain: vec![vec![1.0, 2.0, 0.5], vec![0.3, 0.1, 4.0]],
            gamma: vec![1.0, 1.5],
            t: 500.0,
            velocity: 1.0,
            alpha1: 0.29,
            alpha2: 7.4,
            mu: 1.0,
            n0_dbm: -95.0,
            beta: 0.5,
            eta: 0.78,
            positions: None,
        }
    }

    #[test]
    fn json_round_trip_with_missing_edge() {
        let s = Scenario::new(small_data()).unwrap();
        let text = s.to_json().unwrap();
        assert!(text.contains("\"inf\""));
        assert!(text.contains("\"N0_dbm\""));
        let back = Scenario::from_json(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.distance(0, 2), f64::INFINITY);
    }

    #[test]
    fn rejects_invalid_inputs() {
        let mut d = small_data();
        d.d[1][1] = 1.0;
        assert!(Scenario::new(d).is_err());

        let mut d = small_data();
        d.a_gain[1][0] = 0.0;
        assert!(Scenario::new(d).is_err());

        let mut d = small_data();
        d.gamma = vec![1.0];
        assert!(matches!(Scenario::new(d), Err(Error::ShapeMismatch { .. })));

        let mut d = small_data();
        d.mu = 1.5;
        assert!(Scenario::new(d).is_err());

        let mut d = small_data();
        d.velocity = 0.0;
        assert!(Scenario::new(d).is_err());

        let mut d = small_data();
        d.d[0][1] = -1.0;
        assert!(Scenario::new(d).is_err());

        let text = Scenario::new(small_data()).unwrap().to_json().unwrap();
        assert!(Scenario::from_json(&text.replace("\"inf\"", "\"none\"")).is_err());
    }

    #[test]
    fn mu_zero_is_accepted() {
        let mut d = small_data();
        d.mu = 0.0;
        let s = Scenario::new(d).unwrap();
        assert_eq!(s.comm_weight(), 2.0);
        assert_eq!(s.travel_cost_rate(), 0.0);
    }

    #[test]
    fn restriction_keeps_prefix() {
        let s = Scenario::new(small_data()).unwrap();
        let r = s.restrict_vertices(2).unwrap();
        assert_eq!(r.num_vertices(), 2);
        assert_eq!(r.distance(1, 0), 3.0);
        assert_eq!(r.gain_row(1), &[0.3, 0.1]);
        assert!(s.restrict_vertices(0).is_err());
    }
}
