//! Grid solution of the relay system against simulated policies.

use serde::Serialize;

use crate::error::Result;
use crate::hjb::ValueField;
use crate::model::{Scenario, ThermostatConfig};
use crate::relay::{best_rollout, truncation_tail, RelayState, RolloutBudget};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DppSample {
    pub mode: i32,
    /// Native coordinate.
    pub x: f64,
    pub solver: f64,
    pub rollout: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DppReport {
    pub samples: Vec<DppSample>,
    /// `max (solver - rollout)`: how far the grid value lies above a
    /// realizable cost. Positive values contradict the value being an infimum.
    pub worst_violation: f64,
    /// `max |solver - rollout|`, informative only: the rollout search is finite.
    pub max_abs_gap: f64,
    pub truncation_tail: f64,
    pub horizon: f64,
}

/// `n` deterministic starts spread over `[-eps_i, X/2]` on each branch in turn.
pub fn dpp_starts<T: Real>(s: &Scenario<T>, config: &ThermostatConfig<T>, n: usize) -> Vec<RelayState<T>> {
    let nb = s.num_branches();
    let per = n.div_ceil(nb).max(1);
    let half = s.domain_radius() / T::lit(2.0);
    (0..n)
        .map(|k| {
            let index = k % nb;
            let j = k / nb;
            let eps = config.thresholds[index];
            let t = if per > 1 { T::from_usize_lossy(j) / T::from_usize_lossy(per - 1) } else { T::zero() };
            let local = -eps + (half + eps) * t;
            RelayState::new(s.branches()[index].id, s.orientation(index) * local)
        })
        .collect()
}

/// Compares `field` (the grid solution for `config`) with the cheapest
/// simulated policy from each start.
pub fn cross_check_dpp<T: Real>(
    s: &Scenario<T>,
    config: &ThermostatConfig<T>,
    field: &ValueField<T>,
    n_starts: usize,
    budget: &RolloutBudget<T>,
    horizon: T,
) -> Result<DppReport> {
    let dt = horizon / T::lit(256.0);
    let mut samples = Vec::with_capacity(n_starts);
    for start in dpp_starts(s, config, n_starts) {
        let solver = field.value_native(start.mode, start.position)?;
        let (_, rollout) = best_rollout(s, config, start, horizon, dt, budget)?;
        samples.push(DppSample {
            mode: start.mode,
            x: start.position.to_f64_lossy(),
            solver: solver.to_f64_lossy(),
            rollout: rollout.to_f64_lossy(),
        });
    }
    let worst_violation = samples.iter().map(|p| p.solver - p.rollout).fold(f64::NEG_INFINITY, f64::max);
    let max_abs_gap = samples.iter().map(|p| (p.solver - p.rollout).abs()).fold(0.0, f64::max);
    Ok(DppReport {
        samples,
        worst_violation,
        max_abs_gap,
        truncation_tail: truncation_tail(s, horizon).to_f64_lossy(),
        horizon: horizon.to_f64_lossy(),
    })
}
