//! Delayed relay operator, hybrid trajectories and policy search.

pub mod operator;
pub mod rollout;
pub mod simulate;

pub use operator::{relay_step, RelayState};
pub use rollout::{best_rollout, RolloutBudget};
pub use simulate::{simulate, simulate_cost, truncation_tail, Policy, Sample, SwitchEvent, Tail, TrajectoryRecord};
