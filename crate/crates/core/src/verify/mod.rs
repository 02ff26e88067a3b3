//! Measurable checks of the limit theorems and the solution concepts.

pub mod convergence;
pub mod dpp;
pub mod subsolution;
pub mod tolerance;
pub mod viscosity;

pub use convergence::{
    family_limit, liminf_over_families, loglog_slope, run_convergence, ConvergenceStudy, ThresholdFamily,
};
pub use dpp::{cross_check_dpp, dpp_starts, DppReport, DppSample};
pub use subsolution::{
    check_maximal_subsolution, cycle_slopes, generate_candidates, subsolution_report, Candidate, CandidateVerdict,
    Recipe, SubsolutionStudy, Verdict,
};
pub use tolerance::{
    junction_speed, oracle_residual_ratio, oracle_scenario, oracle_value, residual_scale, residual_tolerance,
    value_tolerance, RESIDUAL_C, VALUE_C,
};
pub use viscosity::{check_viscosity, corrupt, cycle_slope_test, PairCheck, ResidualReport};
