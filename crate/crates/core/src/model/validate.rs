use serde::Serialize;

use super::scenario::{num_nodes, Scenario};
use crate::error::Result;
use crate::scalar::Real;

/// First offending sample of a failed nonnegativity check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostViolation {
    pub x: f64,
    pub a: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchCheck {
    pub id: i32,
    pub cost_nonnegative: bool,
    pub negative_samples: usize,
    pub first_violation: Option<CostViolation>,
    /// Largest difference quotient `|f(x_k+1, a) - f(x_k, a)| / h` over the grid.
    pub lipschitz_estimate: f64,
    pub controllable: bool,
    /// Controls with `f(0, a) < 0` and `f(0, a) > 0` (native coordinate).
    pub inward_witness: Option<f64>,
    pub outward_witness: Option<f64>,
}

/// Assumption checks for a scenario on a sampling grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub grid_left: f64,
    pub grid_right: f64,
    pub grid_step: f64,
    pub branches: Vec<BranchCheck>,
    /// `M = sup |f|` over the grid and control set.
    pub sup_speed: f64,
    pub sup_cost: f64,
}

impl ValidationReport {
    pub fn all_costs_nonnegative(&self) -> bool {
        self.branches.iter().all(|b| b.cost_nonnegative)
    }

    pub fn all_controllable(&self) -> bool {
        self.branches.iter().all(|b| b.controllable)
    }
}

/// Checks the scenario on the distance interval `[0, X]` with its own grid step.
pub fn validate_scenario<T: Real>(s: &Scenario<T>) -> Result<ValidationReport> {
    validate_scenario_on(s, T::zero(), s.domain_radius(), s.grid_step())
}

/// Checks the raw branch expressions at distances `left..=right` from the
/// junction (no extension by constancy), so that `left < 0` probes the
/// threshold band.
pub fn validate_scenario_on<T: Real>(
    s: &Scenario<T>,
    left: T,
    right: T,
    step: T,
) -> Result<ValidationReport> {
    let n = num_nodes(right - left, step);
    let h = (right - left) / T::from_usize_lossy(n);
    let controls = s.controls().values();
    let mut branches = Vec::with_capacity(s.num_branches());
    let mut sup_speed = T::zero();
    let mut sup_cost = T::zero();

    for (index, spec) in s.branches().iter().enumerate() {
        let sigma = s.orientation(index);
        let mut negative = 0usize;
        let mut first = None;
        let mut lip = T::zero();
        let mut prev: Vec<T> = Vec::new();
        for k in 0..=n {
            let x = sigma * (left + h * T::from_usize_lossy(k));
            let mut row = Vec::with_capacity(controls.len());
            for &a in controls {
                let f = spec.dynamics.eval(x, a)?;
                let l = spec.cost.eval(x, a)?;
                sup_speed = sup_speed.max(f.abs());
                sup_cost = sup_cost.max(l.abs());
                if l < T::zero() {
                    negative += 1;
                    if first.is_none() {
                        first = Some(CostViolation {
                            x: x.to_f64_lossy(),
                            a: a.to_f64_lossy(),
                            cost: l.to_f64_lossy(),
                        });
                    }
                }
                row.push(f);
            }
            if !prev.is_empty() {
                for (f1, f0) in row.iter().zip(&prev) {
                    lip = lip.max((*f1 - *f0).abs() / h);
                }
            }
            prev = row;
        }
        let mut inward = None;
        let mut outward = None;
        for &a in controls {
            let f0 = spec.dynamics.eval(T::zero(), a)?;
            if f0 < T::zero() && inward.is_none() {
                inward = Some(a.to_f64_lossy());
            }
            if f0 > T::zero() && outward.is_none() {
                outward = Some(a.to_f64_lossy());
            }
        }
        branches.push(BranchCheck {
            id: spec.id,
            cost_nonnegative: negative == 0,
            negative_samples: negative,
            first_violation: first,
            lipschitz_estimate: lip.to_f64_lossy(),
            controllable: inward.is_some() && outward.is_some(),
            inward_witness: inward,
            outward_witness: outward,
        });
    }

    Ok(ValidationReport {
        grid_left: left.to_f64_lossy(),
        grid_right: right.to_f64_lossy(),
        grid_step: h.to_f64_lossy(),
        branches,
        sup_speed: sup_speed.to_f64_lossy(),
        sup_cost: sup_cost.to_f64_lossy(),
    })
}
