//! Physical primitives and the vertex-selection type shared by every solver.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported vertex count; selections are stored as a `u64` bitmask.
pub const MAX_VERTICES: usize = 64;

/// Converts a power level in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Effective SNR-per-watt of a backscatter link: `beta * eta * |g|^2 * |h|^2 / n0`.
pub fn gain(g: Complex64, h: Complex64, beta: f64, eta: f64, n0: f64) -> Result<f64> {
    if !(n0 > 0.0) {
        return Err(Error::NonPositive {
            what: "noise power",
            value: n0,
        });
    }
    Ok(beta * eta * g.norm_sqr() * h.norm_sqr() / n0)
}

/// Bits per hertz delivered in `t` seconds at power `p` through a link of gain `a`.
///
/// `visited` plays the role of the selection bit of the serving vertex; an
/// unvisited vertex contributes nothing.
pub fn rate(t: f64, visited: bool, a: f64, p: f64) -> f64 {
    if t == 0.0 || !visited {
        return 0.0;
    }
    t * (a * p).ln_1p() / std::f64::consts::LN_2
}

/// Motion energy in joules for a closed path of `tour_length` meters.
pub fn motion_energy(tour_length: f64, alpha1: f64, alpha2: f64, velocity: f64) -> f64 {
    if tour_length == 0.0 {
        return 0.0;
    }
    (alpha1 / velocity + alpha2) * tour_length
}

/// Binary vertex selection with the depot (vertex 0) always selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct Selection {
    mask: u64,
    len: usize,
}

impl Selection {
    fn check_len(len: usize) -> Result<()> {
        if len == 0 || len > MAX_VERTICES {
            return Err(Error::SizeGuard {
                what: "vertex count",
                limit: MAX_VERTICES,
                got: len,
            });
        }
        Ok(())
    }

    /// The no-movement selection `e_1`.
    pub fn depot_only(len: usize) -> Self {
        assert!((1..=MAX_VERTICES).contains(&len));
        Selection { mask: 1, len }
    }

    /// Every vertex selected.
    pub fn full(len: usize) -> Self {
        assert!((1..=MAX_VERTICES).contains(&len));
        let mask = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
        Selection { mask, len }
    }

    pub fn from_mask(mask: u64, len: usize) -> Result<Self> {
        Self::check_len(len)?;
        if mask & 1 == 0 {
            return Err(Error::InvalidScenario("the depot must be selected".into()));
        }
        if len < 64 && mask >> len != 0 {
            return Err(Error::InvalidScenario(format!(
                "mask {mask:#x} selects vertices beyond {len}"
            )));
        }
        Ok(Selection { mask, len })
    }

    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        Self::check_len(bits.len())?;
        let mask = bits
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| if b { acc | (1 << i) } else { acc });
        Self::from_mask(mask, bits.len())
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn contains(&self, vertex: usize) -> bool {
        vertex < self.len && self.mask >> vertex & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_depot_only(&self) -> bool {
        self.mask == 1
    }

    /// Selected vertices in ascending order.
    pub fn vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&v| self.contains(v))
    }

    /// Returns a copy with `vertex` toggled. The depot cannot be toggled.
    pub fn flipped(&self, vertex: usize) -> Self {
        assert!(vertex >= 1 && vertex < self.len, "vertex {vertex} cannot be flipped");
        Selection {
            mask: self.mask ^ (1 << vertex),
            len: self.len,
        }
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..self.len).map(|v| self.contains(v)).collect()
    }

    /// Hamming distance to another selection of the same length.
    pub fn distance(&self, other: &Selection) -> usize {
        (self.mask ^ other.mask).count_ones() as usize
    }

    /// True when every vertex of `self` is also selected in `other`.
    pub fn is_subset_of(&self, other: &Selection) -> bool {
        self.mask & !other.mask == 0
    }
}

impl TryFrom<Vec<u8>> for Selection {
    type Error = Error;

    fn try_from(bits: Vec<u8>) -> Result<Self> {
        if let Some(bad) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidScenario(format!("selection bit {bad} is not binary")));
        }
        let bits: Vec<bool> = bits.into_iter().map(|b| b == 1).collect();
        Selection::from_bits(&bits)
    }
}

impl From<Selection> for Vec<u8> {
    fn from(s: Selection) -> Vec<u8> {
        s.bits().into_iter().map(u8::from).collect()
    }
}

impl std::fmt::Display for Selection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for v in 0..self.len {
            f.write_str(if self.contains(v) { "1" } else { "0" })?;
        }
        Ok(())
    }
}
