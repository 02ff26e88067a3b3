//! Optimal control on one-dimensional networks with a single junction,
//! approximated by delayed relays (thermostats) whose thresholds vanish.
//!
//! * [`model`]: scenarios, cost and dynamics expressions, relay configuration.
//! * [`relay`]: the hysteresis operator, trajectory integration, policy search.
//! * [`hjb`]: semi-Lagrangian solvers for branch and relay value functions.
//! * [`junction`]: convexification weights, junction values, limit fields.
//! * [`verify`]: residual, maximality, convergence and rollout checks.
//!
//! Everything numerical is generic over [`scalar::Real`]; the aliases below
//! fix `f64`.

// `!(x > y)` is how NaN is made to fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod hjb;
pub mod junction;
pub mod model;
pub mod relay;
pub mod scalar;
pub mod verify;

pub use error::{Error, Result};
pub use hjb::{solve_state_constraint, solve_thermostatic, state_constraint_field};
pub use junction::{junction_value, solve_limit, JunctionMode};
pub use model::{validate_scenario, Scenario, ScenarioFile, ThermostatConfig};
pub use verify::{check_viscosity, run_convergence, ThresholdFamily};

pub type Scenario64 = model::Scenario<f64>;
pub type Scenario32 = model::Scenario<f32>;
pub type ValueField64 = hjb::ValueField<f64>;
pub type ThermostatConfig64 = model::ThermostatConfig<f64>;
pub type JunctionReport64 = junction::JunctionReport<f64>;
pub type LimitSolution64 = junction::LimitSolution<f64>;
pub type TrajectoryRecord64 = relay::TrajectoryRecord<f64>;
