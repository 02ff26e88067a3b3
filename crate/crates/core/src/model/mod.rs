//! Scenarios, expressions, thermostat configurations and assumption checks.

pub mod expr;
pub mod scenario;
pub mod thermostat;
pub mod validate;

pub use expr::Expr;
pub use scenario::{BranchFile, BranchSpec, ControlSet, JunctionKind, Scenario, ScenarioFile};
pub use thermostat::ThermostatConfig;
pub use validate::{validate_scenario, validate_scenario_on, BranchCheck, ValidationReport};
