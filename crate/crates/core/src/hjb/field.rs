use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::grid::Grid;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Nodal values of one branch (or one relay mode) in branch-local coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchField<T> {
    pub id: i32,
    /// `-1` when the native coordinate is `-s`, `+1` otherwise.
    pub orientation: i8,
    pub grid: Grid<T>,
    pub values: Vec<T>,
}

impl<T: Real> BranchField<T> {
    /// Value at branch-local coordinate `s` by linear interpolation.
    pub fn at(&self, s: T) -> T {
        self.grid.interpolate(&self.values, s)
    }

    pub fn native(&self, s: T) -> T {
        if self.orientation < 0 {
            -s
        } else {
            s
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    /// `V_eps` of the relay system; one entry per mode.
    Thermostatic,
    /// Branch-confined values `V_sc(i)`.
    StateConstraint,
    /// Limit value `V` assembled from a junction datum.
    Limit,
    /// Anything else, e.g. a generated test field.
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub kind: FieldKind,
    pub scenario_hash: String,
    pub thresholds: Vec<f64>,
    pub tol: f64,
    pub iterations: usize,
    pub residual: f64,
    pub residual_history: Vec<f64>,
    /// `(sup l / lambda) e^{-lambda X / M}`: truncation effect at the junction.
    pub tail_bound: f64,
}

impl FieldMeta {
    pub fn empty(kind: FieldKind) -> Self {
        Self {
            kind,
            scenario_hash: String::new(),
            thresholds: vec![],
            tol: 0.0,
            iterations: 0,
            residual: 0.0,
            residual_history: vec![],
            tail_bound: 0.0,
        }
    }
}

/// Grid-sampled value function, one vector per (branch, mode).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueField<T> {
    pub branches: Vec<BranchField<T>>,
    pub meta: FieldMeta,
}

impl<T: Real> ValueField<T> {
    pub fn branch(&self, id: i32) -> Result<&BranchField<T>> {
        self.branches
            .iter()
            .find(|b| b.id == id)
            .ok_or_else(|| Error::InvalidArgument(format!("field has no branch {id}")))
    }

    /// Value of branch/mode `id` at branch-local coordinate `s`.
    pub fn value(&self, id: i32, s: T) -> Result<T> {
        Ok(self.branch(id)?.at(s))
    }

    /// Value of branch/mode `id` at the native coordinate `x`.
    pub fn value_native(&self, id: i32, x: T) -> Result<T> {
        let b = self.branch(id)?;
        Ok(b.at(b.native(x)))
    }

    pub fn at_junction(&self, id: i32) -> Result<T> {
        self.value(id, T::zero())
    }

    pub fn min_value(&self) -> T {
        self.branches.iter().flat_map(|b| b.values.iter().copied()).fold(T::infinity(), T::min)
    }

    pub fn max_value(&self) -> T {
        self.branches.iter().flat_map(|b| b.values.iter().copied()).fold(T::neg_infinity(), T::max)
    }

    /// Largest difference to `other` over the nonnegative part of every branch,
    /// sampled at this field's nodes.
    pub fn sup_distance(&self, other: &ValueField<T>) -> Result<T> {
        let mut worst = T::zero();
        for b in &self.branches {
            let o = other.branch(b.id)?;
            for (k, s) in b.grid.nodes().enumerate() {
                if s >= T::zero() {
                    worst = worst.max((b.values[k] - o.at(s)).abs());
                }
            }
        }
        Ok(worst)
    }

    /// CSV with columns `branch,mode,x,value`; `x` is the native coordinate.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("branch,mode,x,value\n");
        for b in &self.branches {
            for (k, s) in b.grid.nodes().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    b.id,
                    b.id,
                    b.native(s).to_f64_lossy(),
                    b.values[k].to_f64_lossy()
                );
            }
        }
        out
    }

    /// Metadata sidecar as pretty JSON.
    pub fn meta_json(&self) -> String {
        serde_json::to_string_pretty(&self.meta).expect("metadata serializes")
    }

    /// Rebuilds a field from its CSV export. Grids are inferred from the node
    /// positions, which must be uniform per branch.
    pub fn from_csv(text: &str, meta: FieldMeta) -> Result<Self> {
        let mut rows: Vec<(i32, f64, f64)> = Vec::new();
        for (line_no, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            let parse_err = || Error::InvalidArgument(format!("malformed field row {}", line_no + 1));
            if cols.len() != 4 {
                return Err(parse_err());
            }
            let id: i32 = cols[0].trim().parse().map_err(|_| parse_err())?;
            let x: f64 = cols[2].trim().parse().map_err(|_| parse_err())?;
            let v: f64 = cols[3].trim().parse().map_err(|_| parse_err())?;
            rows.push((id, x, v));
        }
        let mut ids: Vec<i32> = rows.iter().map(|r| r.0).collect();
        ids.dedup();
        let mut branches = Vec::new();
        for id in ids {
            let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.0 == id).map(|r| (r.1, r.2)).collect();
            if pts.len() < 2 {
                return Err(Error::InvalidArgument(format!("branch {id} needs at least two nodes")));
            }
            let orientation: i8 = if pts[1].0 < pts[0].0 { -1 } else { 1 };
            let sign = f64::from(orientation);
            let left = sign * pts[0].0;
            let right = sign * pts[pts.len() - 1].0;
            let step = (right - left) / (pts.len() - 1) as f64;
            let grid = Grid::new(T::lit(left), T::lit(right), T::lit(step))?;
            if grid.len() != pts.len() {
                return Err(Error::InvalidArgument(format!("branch {id} nodes are not uniform")));
            }
            for (k, &(x, _)) in pts.iter().enumerate() {
                if (grid.node(k).to_f64_lossy() - sign * x).abs() > 1e-6 * step.max(1e-12) + 1e-9 {
                    return Err(Error::InvalidArgument(format!("branch {id} nodes are not uniform")));
                }
            }
            branches.push(BranchField { id, orientation, grid, values: pts.iter().map(|p| T::lit(p.1)).collect() });
        }
        Ok(Self { branches, meta })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> FieldMeta {
        FieldMeta::empty(FieldKind::Other)
    }

    #[test]
    fn csv_round_trip() {
        let g = Grid::new(-0.1f64, 1.0, 0.1).unwrap();
        let f = ValueField {
            branches: vec![
                BranchField { id: -1, orientation: -1, grid: g, values: g.nodes().map(|s| s * s).collect() },
                BranchField { id: 1, orientation: 1, grid: g, values: g.nodes().map(|s| 1.0 + s).collect() },
            ],
            meta: meta(),
        };
        let csv = f.to_csv();
        assert!(csv.starts_with("branch,mode,x,value\n-1,-1,0.1,"));
        let back = ValueField::<f64>::from_csv(&csv, meta()).unwrap();
        assert!(back.sup_distance(&f).unwrap() < 1e-12);
        assert_eq!(back.branch(-1).unwrap().orientation, -1);
        assert!((f.value_native(-1, -0.5).unwrap() - 0.25).abs() < 1e-12);
    }
}
