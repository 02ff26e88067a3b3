//! Grid tolerances shared by the checks, calibrated on a scenario with a
//! closed-form value function.

use crate::error::Result;
use crate::hjb::{solve_state_constraint, F_FLOOR, FieldKind, FieldMeta, Grid, ValueField};
use crate::model::Scenario;
use crate::scalar::Real;

use super::viscosity::check_viscosity;

/// Residual tolerance is `RESIDUAL_C * h * lambda^2 (sup l / lambda) / m`,
/// with `m` the slowest nonzero speed at the junction.
///
/// Pinned at four times the ratio measured on the closed-form scenario
/// (see [`oracle_residual_ratio`]).
pub const RESIDUAL_C: f64 = 0.4;

/// Value tolerance is `VALUE_C * h * (sup l / lambda)`.
pub const VALUE_C: f64 = 5.0;

/// Smallest nonzero `|f_i(0, a)|` over branches and controls. Value functions
/// bend on the length scale `speed / lambda` of the slowest relevant motion.
pub fn junction_speed<T: Real>(s: &Scenario<T>) -> Result<f64> {
    let mut m = f64::INFINITY;
    for index in 0..s.num_branches() {
        for &a in s.controls().values() {
            let f = s.dynamics_at(index, T::zero(), a)?.to_f64_lossy().abs();
            if f > F_FLOOR {
                m = m.min(f);
            }
        }
    }
    Ok(if m.is_finite() { m } else { s.sup_speed().to_f64_lossy() })
}

/// Slope-times-value scale of the residual in `lambda V + H`.
pub fn residual_scale<T: Real>(s: &Scenario<T>) -> f64 {
    let lambda = s.lambda().to_f64_lossy();
    let bound = s.value_bound().to_f64_lossy();
    match junction_speed(s) {
        Ok(m) if m > 0.0 => lambda * lambda * bound / m,
        _ => lambda * bound,
    }
}

pub fn residual_tolerance<T: Real>(s: &Scenario<T>) -> f64 {
    RESIDUAL_C * s.grid_step().to_f64_lossy() * residual_scale(s)
}

/// Tolerance on value differences between two consistent discretizations.
pub fn value_tolerance<T: Real>(s: &Scenario<T>) -> f64 {
    VALUE_C * s.grid_step().to_f64_lossy() * s.value_bound().to_f64_lossy()
}

/// Closed-form scenario: `f = a`, `l = x`, `lambda = 1`, `A = {-1, 0, 1}` on
/// `[0, 5]`, whose branch-confined value is `x - 1 + e^{-x}`.
pub fn oracle_scenario(h: f64) -> Result<Scenario<f64>> {
    Scenario::new(&[(1, "a", "x"), (2, "a", "x"), (3, "a", "x")], &[-1.0, 0.0, 1.0], 1.0, 5.0, h)
}

pub fn oracle_value(x: f64) -> f64 {
    x - 1.0 + (-x).exp()
}

/// Measured interior residual of the solved closed-form scenario divided by
/// `h * residual_scale`.
pub fn oracle_residual_ratio(h: f64) -> Result<f64> {
    let s = oracle_scenario(h)?;
    let grid = Grid::new(0.0, 5.0, h)?;
    let b = solve_state_constraint(&s, 1, grid, 1e-12)?;
    let field = ValueField { branches: vec![b.field], meta: FieldMeta::empty(FieldKind::StateConstraint) };
    let r = check_viscosity(&s, &field, h)?;
    Ok(r.interior_sup() / (h * residual_scale(&s)))
}
