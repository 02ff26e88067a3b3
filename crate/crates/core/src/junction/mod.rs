//! Junction analysis: convexification weights, junction values, limit fields
//! and closed-form cycle values.

pub mod combos;
pub mod cycle;
pub mod limit;
pub mod report;
pub mod weights;

pub use combos::{u0_twofold, u123, u_pair, FeasibleCombo, JunctionCandidate, Sigma};
pub use cycle::{cycle_from_combo, cycle_value, CycleField, CycleMode};
pub use limit::{assemble_limit, solve_limit, LimitSolution};
pub use report::{junction_value, ArgminTag, JunctionMode, JunctionReport, Minimizer, TIE_TOL};
pub use weights::{mu_threefold, mu_twofold};

#[cfg(test)]
pub(crate) mod fixtures {
    use crate::model::Scenario;

    /// Three branches with `f = a`, `a = -1` costing `c_i`, `a = +1` costing 1000.
    pub(crate) fn forced_cycle() -> Scenario<f64> {
        let cost = |c: &str| format!("(1 - a)/2 * {c} + (1 + a)/2 * 1000");
        Scenario::new(
            &[(1, "a", &cost("100")), (2, "a", &cost("1")), (3, "a", &cost("1"))],
            &[-1.0, 1.0],
            1.0,
            5.0,
            0.01,
        )
        .unwrap()
    }
}
