//! Probability measures on the tree, as conditional up-probabilities.
//!
//! A measure carries one coordinate `q_n(y)` per interior node, laid out in
//! the same heap order as [`MarketTree`](crate::tree::MarketTree) so the two
//! can be zipped node-wise. Boundary values 0 and 1 are allowed; whether the
//! measure is equivalent to `P` is a separate question.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::tree::{check_horizon, level_offset, node_count, split_levels};

#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    horizon: usize,
    q: Vec<f64>,
}

impl Measure {
    pub fn from_flat(horizon: usize, q: Vec<f64>) -> Result<Self> {
        check_horizon(horizon)?;
        if q.len() != node_count(horizon) {
            return Err(Error::Shape {
                level: 0,
                expected: node_count(horizon),
                found: q.len(),
            });
        }
        if let Some(i) = q.iter().position(|x| !(0.0..=1.0).contains(x)) {
            let (level, node) = locate(i);
            return Err(Error::Domain(format!(
                "probability q at level {level}, node {node} is {} (outside [0, 1])",
                q[i]
            )));
        }
        Ok(Self { horizon, q })
    }

    pub fn from_levels(levels: Vec<Vec<f64>>) -> Result<Self> {
        let horizon = levels.len();
        check_horizon(horizon)?;
        let mut q = Vec::with_capacity(node_count(horizon));
        for (i, row) in levels.into_iter().enumerate() {
            if row.len() != 1 << i {
                return Err(Error::Shape {
                    level: i + 1,
                    expected: 1 << i,
                    found: row.len(),
                });
            }
            q.extend(row);
        }
        Self::from_flat(horizon, q)
    }

    pub fn uniform(horizon: usize, value: f64) -> Result<Self> {
        check_horizon(horizon)?;
        Self::from_flat(horizon, vec![value; node_count(horizon)])
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `q_n(y)` for step `n` (1-based) at node `y` of depth `n - 1`.
    pub fn get(&self, n: usize, node: usize) -> f64 {
        self.q[level_offset(n - 1) + node]
    }

    pub fn level(&self, n: usize) -> &[f64] {
        &self.q[level_offset(n - 1)..level_offset(n)]
    }

    pub fn coords(&self) -> &[f64] {
        &self.q
    }

    pub fn levels(&self) -> Vec<Vec<f64>> {
        split_levels(self.horizon, &self.q)
    }

    /// Every coordinate strictly inside (0, 1).
    pub fn equivalent_to_p(&self) -> bool {
        self.q.iter().all(|&x| x > 0.0 && x < 1.0)
    }

    /// First coordinate on the boundary, as `(level, node, value)`.
    pub fn first_boundary(&self) -> Option<(usize, usize, f64)> {
        self.q
            .iter()
            .position(|&x| !(x > 0.0 && x < 1.0))
            .map(|i| {
                let (level, node) = locate(i);
                (level, node, self.q[i])
            })
    }

    /// Pulls boundary coordinates to `eps` / `1 - eps`.
    pub fn interiorized(&self, eps: f64) -> Self {
        let q = self.q.iter().map(|&x| x.clamp(eps, 1.0 - eps)).collect();
        Self {
            horizon: self.horizon,
            q,
        }
    }

    /// Sup-norm distance over all coordinates.
    pub fn d_infinity(&self, other: &Measure) -> Result<f64> {
        if self.horizon != other.horizon {
            return Err(Error::Domain(format!(
                "measures have different horizons ({} vs {})",
                self.horizon, other.horizon
            )));
        }
        Ok(self
            .q
            .iter()
            .zip(&other.q)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// `(level n, node index)` of a flat coordinate.
pub(crate) fn locate(flat: usize) -> (usize, usize) {
    let depth = (usize::BITS - 1 - (flat + 1).leading_zeros()) as usize;
    (depth + 1, flat - level_offset(depth))
}

impl Serialize for Measure {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.levels().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Measure {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let levels = Vec::<Vec<f64>>::deserialize(deserializer)?;
        Measure::from_levels(levels).map_err(serde::de::Error::custom)
    }
}

/// Default ceiling on the number of measures a grid may enumerate.
pub const DEFAULT_GRID_CAP: u64 = 10_000_000;

/// Every measure with coordinates on `{0, 1/m, ..., 1}`, in lexicographic
/// order of the flat coordinate vector (first coordinate slowest).
#[derive(Debug, Clone)]
pub struct GridMeasures {
    horizon: usize,
    m: u32,
    digits: Vec<u32>,
    remaining: u64,
}

impl GridMeasures {
    pub fn new(horizon: usize, m: u32, cap: u64) -> Result<Self> {
        check_horizon(horizon)?;
        if m == 0 {
            return Err(Error::Domain("grid resolution m must be at least 1".into()));
        }
        let dim = node_count(horizon);
        let count = (m as f64 + 1.0).powi(dim as i32);
        if count > cap as f64 {
            return Err(Error::GridCap { count, cap });
        }
        Ok(Self {
            horizon,
            m,
            digits: vec![0; dim],
            remaining: count as u64,
        })
    }

    pub fn count(horizon: usize, m: u32) -> f64 {
        (m as f64 + 1.0).powi(node_count(horizon) as i32)
    }

    /// The `index`-th grid measure, for splitting the enumeration.
    pub fn nth_measure(horizon: usize, m: u32, mut index: u64) -> Measure {
        let dim = node_count(horizon);
        let base = m as u64 + 1;
        let mut q = vec![0.0; dim];
        for slot in q.iter_mut().rev() {
            *slot = (index % base) as f64 / m as f64;
            index /= base;
        }
        Measure {
            horizon,
            q,
        }
    }

    /// Visits the coordinate vectors without allocating a measure per point.
    pub(crate) fn for_each_point(horizon: usize, m: u32, cap: u64, mut f: impl FnMut(&[f64])) -> Result<()> {
        let mut grid = Self::new(horizon, m, cap)?;
        let mut point = vec![0.0; grid.digits.len()];
        while grid.remaining > 0 {
            for (p, &d) in point.iter_mut().zip(&grid.digits) {
                *p = d as f64 / m as f64;
            }
            f(&point);
            grid.advance();
        }
        Ok(())
    }

    fn advance(&mut self) {
        self.remaining -= 1;
        for d in self.digits.iter_mut().rev() {
            if *d < self.m {
                *d += 1;
                return;
            }
            *d = 0;
        }
    }
}

impl Iterator for GridMeasures {
    type Item = Measure;

    fn next(&mut self) -> Option<Measure> {
        if self.remaining == 0 {
            return None;
        }
        let q = self.digits.iter().map(|&d| d as f64 / self.m as f64).collect();
        self.advance();
        Some(Measure {
            horizon: self.horizon,
            q,
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let r = self.remaining as usize;
        (r, Some(r))
    }
}

pub fn grid_measures(horizon: usize, m: u32, cap: u64) -> Result<GridMeasures> {
    GridMeasures::new(horizon, m, cap)
}
