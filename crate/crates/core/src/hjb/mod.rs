//! Semi-Lagrangian solvers for branch problems and the relay system.

pub mod branch;
pub mod field;
pub mod grid;
pub mod solve;

pub use branch::{Boundary, BranchProblem, F_FLOOR};
pub use field::{BranchField, FieldKind, FieldMeta, ValueField};
pub use grid::Grid;
pub use solve::{
    dirichlet_field, hamiltonian, solve_branch_dirichlet, solve_state_constraint, solve_thermostatic,
    solve_thermostatic_with, state_constraint_field, BranchSolution, SolverOptions,
};
