//! Continuous n-dimensional space with bounded, wrapped, or unbounded
//! boundary handling.
//!
//! Positions live in the population's `pos_0..pos_{d-1}` Float64 columns.
//! Bounded and wrapped domains are half-open `[low, high)` per dimension:
//! bounded moves clip to `[low, prev(high)]` where `prev` is the largest
//! float strictly below `high`, wrapped moves reduce modulo the extent.
//! Wrapped-mode distances use the minimum-image convention.

use crate::error::{Result, SimError};
use crate::population::Population;
use crate::value::{AgentId, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Bounded,
    Wrapped,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct SpaceEnv {
    bounds: Vec<(f64, f64)>,
    boundary: Boundary,
}

/// Clip `x` into `[lo, prev(hi)]`, the closed cover of the half-open
/// interval `[lo, hi)`.
pub fn clip_component(x: f64, lo: f64, hi: f64) -> f64 {
    x.clamp(lo, hi.next_down())
}

/// Reduce `x` into `[lo, hi)` modulo the extent. Guards against the
/// rounding case where the remainder lands exactly on the upper bound.
pub fn wrap_component(x: f64, lo: f64, hi: f64) -> f64 {
    let width = hi - lo;
    let mut r = (x - lo).rem_euclid(width);
    if r >= width {
        r = 0.0;
    }
    let out = lo + r;
    if out >= hi {
        lo
    } else {
        out
    }
}

impl SpaceEnv {
    pub fn new(bounds: &[(f64, f64)], boundary: Boundary) -> Result<Self> {
        if bounds.is_empty() {
            return Err(SimError::InvalidArgument("space needs at least 1 dimension".into()));
        }
        for &(lo, hi) in bounds {
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(SimError::NonFinite("space bounds"));
            }
            if lo >= hi {
                return Err(SimError::InvalidArgument(format!(
                    "bound [{lo}, {hi}) is empty"
                )));
            }
        }
        Ok(SpaceEnv {
            bounds: bounds.to_vec(),
            boundary,
        })
    }

    pub fn dims(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Apply boundary handling to a target point.
    pub fn resolve(&self, target: &[f64]) -> Result<Vec<f64>> {
        if target.len() != self.bounds.len() {
            return Err(SimError::DimensionMismatch {
                expected: self.bounds.len(),
                got: target.len(),
            });
        }
        if target.iter().any(|c| !c.is_finite()) {
            return Err(SimError::NonFinite("target position"));
        }
        Ok(match self.boundary {
            Boundary::Bounded => target
                .iter()
                .zip(&self.bounds)
                .map(|(&x, &(lo, hi))| clip_component(x, lo, hi))
                .collect(),
            Boundary::Wrapped => target
                .iter()
                .zip(&self.bounds)
                .map(|(&x, &(lo, hi))| wrap_component(x, lo, hi))
                .collect(),
            Boundary::Unbounded => target.to_vec(),
        })
    }

    fn position_attrs(&self) -> Vec<String> {
        (0..self.bounds.len()).map(|i| format!("pos_{i}")).collect()
    }

    /// Move a live agent toward `target`, storing the boundary-resolved
    /// coordinates in the position columns. Returns what was stored.
    pub fn move_to(&self, pop: &mut Population, id: AgentId, target: &[f64]) -> Result<Vec<f64>> {
        pop.ensure_no_batch("space movement")?;
        pop.row_index(id)?;
        let stored = self.resolve(target)?;
        for (attr, &coord) in self.position_attrs().iter().zip(&stored) {
            pop.set_value(id, attr, Value::Float(coord))?;
        }
        Ok(stored)
    }

    /// Current position of a live agent.
    pub fn position(&self, pop: &Population, id: AgentId) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.bounds.len());
        for attr in self.position_attrs() {
            match pop.get_value(id, &attr)? {
                Value::Float(c) => out.push(c),
                other => {
                    return Err(SimError::TypeMismatch {
                        attr,
                        expected: "Float64".into(),
                        got: other.to_string(),
                    })
                }
            }
        }
        Ok(out)
    }

    /// Squared distance under the environment metric (minimum-image in
    /// wrapped mode, plain Euclidean otherwise).
    pub fn distance_sq(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (i, (&x, &y)) in a.iter().zip(b).enumerate() {
            let mut d = (x - y).abs();
            if self.boundary == Boundary::Wrapped {
                let (lo, hi) = self.bounds[i];
                let width = hi - lo;
                let folded = width - d;
                if folded < d {
                    d = folded;
                }
            }
            acc += d * d;
        }
        acc
    }

    /// Live agents within Euclidean distance `r` of `center`, boundary
    /// inclusive, minus `exclude`. Ascending by ID. This is a direct metric
    /// scan over the position columns; use [`crate::index::SpatialIndex`]
    /// for repeated queries against a static snapshot.
    pub fn neighbors_within(
        &self,
        pop: &Population,
        center: &[f64],
        r: f64,
        exclude: Option<AgentId>,
    ) -> Result<Vec<AgentId>> {
        if r < 0.0 || !r.is_finite() {
            return Err(SimError::InvalidArgument("radius must be finite and >= 0".into()));
        }
        if center.len() != self.bounds.len() {
            return Err(SimError::DimensionMismatch {
                expected: self.bounds.len(),
                got: center.len(),
            });
        }
        let attrs = self.position_attrs();
        let cols: Vec<&[f64]> = attrs
            .iter()
            .map(|a| pop.f64s(a))
            .collect::<Result<Vec<_>>>()?;
        let alive = pop.alive_mask();
        let r_sq = r * r;
        let mut point = vec![0.0; self.bounds.len()];
        let mut out = Vec::new();
        for id in pop.live_ids() {
            if Some(id) == exclude {
                continue;
            }
            let row = pop.row_index(id)?;
            debug_assert!(alive[row]);
            for (k, col) in cols.iter().enumerate() {
                point[k] = col[row];
            }
            if self.distance_sq(center, &point) <= r_sq {
                out.push(id);
            }
        }
        Ok(out)
    }
}
