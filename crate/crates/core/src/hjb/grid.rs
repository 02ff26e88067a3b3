use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::scenario::num_nodes;
use crate::scalar::Real;

/// Uniform grid on `[left, right]` with both endpoints as nodes.
///
/// The step is the largest value not exceeding the requested one that divides
/// the interval evenly (up to representation noise).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    pub left: T,
    pub right: T,
    pub step: T,
    intervals: usize,
}

impl<T: Real> Grid<T> {
    pub fn new(left: T, right: T, step: T) -> Result<Self> {
        if !(left < right) || !left.is_finite() || !right.is_finite() {
            return Err(Error::InvalidArgument(format!("grid needs left < right, got [{left}, {right}]")));
        }
        if !(step > T::zero()) {
            return Err(Error::InvalidArgument("grid step must be positive".into()));
        }
        let intervals = num_nodes(right - left, step);
        Ok(Self { left, right, step: (right - left) / T::from_usize_lossy(intervals), intervals })
    }

    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn node(&self, k: usize) -> T {
        if k >= self.intervals {
            self.right
        } else {
            self.left + self.step * T::from_usize_lossy(k)
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.len()).map(|k| self.node(k))
    }

    /// Index of the node nearest to `s`, clamped to the grid.
    pub fn nearest(&self, s: T) -> usize {
        let r = ((s - self.left) / self.step).round().to_f64_lossy();
        if r <= 0.0 {
            0
        } else {
            (r as usize).min(self.intervals)
        }
    }

    /// Piecewise-linear interpolation of nodal `values`, constant outside the grid.
    pub fn interpolate(&self, values: &[T], s: T) -> T {
        debug_assert_eq!(values.len(), self.len());
        if s <= self.left {
            return values[0];
        }
        if s >= self.right {
            return values[self.intervals];
        }
        let r = (s - self.left) / self.step;
        let k = r.floor().to_usize().unwrap_or(0).min(self.intervals - 1);
        let t = r - T::from_usize_lossy(k);
        values[k] + t * (values[k + 1] - values[k])
    }
}
