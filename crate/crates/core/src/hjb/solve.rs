use rayon::prelude::*;

use super::branch::{Boundary, BranchProblem, MAX_SWEEPS};
use super::field::{BranchField, FieldKind, FieldMeta, ValueField};
use super::grid::Grid;
use crate::error::{Error, Result};
use crate::model::{Scenario, ThermostatConfig};
use crate::scalar::Real;

/// `max_a { -f(x,a) p - l(x,a) }` on branch `id`, native coordinates.
pub fn hamiltonian<T: Real>(s: &Scenario<T>, id: i32, x: T, p: T) -> Result<T> {
    s.hamiltonian_native(id, x, p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions<T> {
    /// Stop when exchanged exit costs (or branch values) move less than this.
    pub tol: T,
    pub max_outer: usize,
    pub max_sweeps: usize,
}

impl<T: Real> SolverOptions<T> {
    pub fn new(tol: T) -> Self {
        Self { tol, max_outer: 200_000, max_sweeps: MAX_SWEEPS }
    }
}

/// Converged branch values with solver statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchSolution<T> {
    pub field: BranchField<T>,
    pub sweeps: usize,
    pub residual: T,
}

fn orientation_of<T: Real>(s: &Scenario<T>, index: usize) -> i8 {
    if s.orientation(index) < T::zero() {
        -1
    } else {
        1
    }
}

pub(crate) fn tail_bound<T: Real>(s: &Scenario<T>) -> f64 {
    let m = s.sup_speed();
    if m > T::zero() {
        (s.value_bound() * (-s.lambda() * s.domain_radius() / m).exp()).to_f64_lossy()
    } else {
        0.0
    }
}

fn solve_branch<T: Real>(
    s: &Scenario<T>,
    id: i32,
    grid: Grid<T>,
    boundary: Boundary<T>,
    tol: T,
) -> Result<BranchSolution<T>> {
    if !(tol > T::zero()) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let index = s.index_of(id)?;
    let problem = BranchProblem::new(s, index, grid)?;
    let (values, sweeps, residual) = problem.solve(boundary, tol)?;
    Ok(BranchSolution {
        field: BranchField { id, orientation: orientation_of(s, index), grid, values },
        sweeps,
        residual,
    })
}

/// Value on one branch that pays `exit_cost` when leaving through `grid.left`.
///
/// `grid` is in branch-local coordinates. The left node takes the smaller of
/// the exit cost and the best in-branch continuation; at `grid.right` controls
/// pointing outward are excluded.
pub fn solve_branch_dirichlet<T: Real>(
    s: &Scenario<T>,
    id: i32,
    grid: Grid<T>,
    exit_cost: T,
    tol: T,
) -> Result<BranchSolution<T>> {
    if !(exit_cost >= T::zero()) || exit_cost > s.value_bound() {
        return Err(Error::InvalidArgument(format!(
            "exit cost {exit_cost} outside [0, {}]",
            s.value_bound()
        )));
    }
    solve_branch(s, id, grid, Boundary::Exit(exit_cost), tol)
}

/// Value of the problem confined to branch `id` (no exit at either end).
pub fn solve_state_constraint<T: Real>(s: &Scenario<T>, id: i32, grid: Grid<T>, tol: T) -> Result<BranchSolution<T>> {
    solve_branch(s, id, grid, Boundary::Constrained, tol)
}

/// State-constraint values of every branch on `[0, X]`, as one field.
pub fn state_constraint_field<T: Real>(s: &Scenario<T>, tol: T) -> Result<ValueField<T>> {
    let grid = Grid::new(T::zero(), s.domain_radius(), s.grid_step())?;
    let ids = s.branch_ids();
    let mut sweeps = 0;
    let mut residual = T::zero();
    let branches = ids
        .par_iter()
        .map(|&id| solve_state_constraint(s, id, grid, tol))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .map(|b| {
            sweeps = sweeps.max(b.sweeps);
            residual = residual.max(b.residual);
            b.field
        })
        .collect();
    Ok(ValueField {
        branches,
        meta: FieldMeta {
            kind: FieldKind::StateConstraint,
            scenario_hash: s.hash().to_string(),
            thresholds: vec![],
            tol: tol.to_f64_lossy(),
            iterations: sweeps,
            residual: residual.to_f64_lossy(),
            residual_history: vec![],
            tail_bound: tail_bound(s),
        },
    })
}

/// Value function of the relay system.
///
/// Mode `i` lives on the local interval `[-eps_i, X]`. Leaving it through
/// `-eps_i` costs the value of the next mode at `+eps_next`; these exchanged
/// exit costs are updated synchronously (Jacobi) from the supersolution
/// `sup l / lambda` until they move less than `tol`.
pub fn solve_thermostatic<T: Real>(s: &Scenario<T>, config: &ThermostatConfig<T>, tol: T) -> Result<ValueField<T>> {
    solve_thermostatic_with(s, config, &SolverOptions::new(tol))
}

pub fn solve_thermostatic_with<T: Real>(
    s: &Scenario<T>,
    config: &ThermostatConfig<T>,
    opts: &SolverOptions<T>,
) -> Result<ValueField<T>> {
    config.validate(s)?;
    if !(opts.tol > T::zero()) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let n = s.num_branches();
    let problems = (0..n)
        .map(|i| BranchProblem::on(s, i, -config.thresholds[i]))
        .collect::<Result<Vec<_>>>()?;
    let next: Vec<usize> = (0..n).map(|i| config.next_index(s, i)).collect();
    let bound = s.value_bound();
    let inner_tol = opts.tol / T::lit(16.0);

    let mut values: Vec<Vec<T>> = problems.iter().map(|p| vec![bound; p.grid.len()]).collect();
    let mut exits = vec![bound; n];
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut residual = T::infinity();

    while iterations < opts.max_outer {
        iterations += 1;
        values
            .par_iter_mut()
            .zip(problems.par_iter())
            .zip(exits.par_iter())
            .try_for_each(|((v, p), &e)| p.solve_in_place(v, Boundary::Exit(e), inner_tol, opts.max_sweeps).map(|_| ()))?;
        let updated: Vec<T> = (0..n)
            .map(|i| problems[next[i]].grid.interpolate(&values[next[i]], config.thresholds[next[i]]))
            .collect();
        residual = exits.iter().zip(&updated).fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()));
        history.push(residual.to_f64_lossy());
        exits = updated;
        if residual < opts.tol {
            break;
        }
    }
    if !(residual < opts.tol) {
        return Err(Error::NotConverged {
            what: "thermostatic exit-cost iteration",
            iterations,
            residual: residual.to_f64_lossy(),
            history,
        });
    }
    for ((v, p), &e) in values.iter_mut().zip(&problems).zip(&exits) {
        p.solve_in_place(v, Boundary::Exit(e), inner_tol, opts.max_sweeps)?;
    }

    let branches = problems
        .iter()
        .zip(values)
        .map(|(p, values)| BranchField {
            id: s.branches()[p.index].id,
            orientation: orientation_of(s, p.index),
            grid: p.grid,
            values,
        })
        .collect();
    Ok(ValueField {
        branches,
        meta: FieldMeta {
            kind: FieldKind::Thermostatic,
            scenario_hash: s.hash().to_string(),
            thresholds: config.thresholds.iter().map(|e| e.to_f64_lossy()).collect(),
            tol: opts.tol.to_f64_lossy(),
            iterations,
            residual: residual.to_f64_lossy(),
            residual_history: history,
            tail_bound: tail_bound(s),
        },
    })
}

/// Values of the branch problems with a common junction datum `v0` on `[0, X]`.
pub fn dirichlet_field<T: Real>(s: &Scenario<T>, data: &[T], tol: T, kind: FieldKind) -> Result<ValueField<T>> {
    if data.len() != s.num_branches() {
        return Err(Error::InvalidArgument("one junction datum per branch expected".into()));
    }
    let grid = Grid::new(T::zero(), s.domain_radius(), s.grid_step())?;
    let ids = s.branch_ids();
    let solved = ids
        .par_iter()
        .zip(data.par_iter())
        .map(|(&id, &d)| solve_branch_dirichlet(s, id, grid, d, tol))
        .collect::<Result<Vec<_>>>()?;
    let sweeps = solved.iter().map(|b| b.sweeps).max().unwrap_or(0);
    let residual = solved.iter().map(|b| b.residual).fold(T::zero(), T::max);
    Ok(ValueField {
        branches: solved.into_iter().map(|b| b.field).collect(),
        meta: FieldMeta {
            kind,
            scenario_hash: s.hash().to_string(),
            thresholds: vec![],
            tol: tol.to_f64_lossy(),
            iterations: sweeps,
            residual: residual.to_f64_lossy(),
            residual_history: vec![],
            tail_bound: tail_bound(s),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hamiltonian_of_speed_control() {
        let s: Scenario<f64> =
            Scenario::new(&[(1, "a", "2.5"), (-1, "a", "2.5")], &[-1.0, 0.0, 1.0], 1.0, 5.0, 0.01).unwrap();
        for p in [-3.0, -0.5, 0.0, 0.7] {
            assert!((hamiltonian(&s, 1, 0.3, p).unwrap() - (p.abs() - 2.5)).abs() < 1e-15);
            assert!((hamiltonian(&s, -1, -0.3, p).unwrap() - (p.abs() - 2.5)).abs() < 1e-15);
        }
    }

    #[test]
    fn exit_cost_range_is_checked() {
        let s: Scenario<f64> =
            Scenario::new(&[(1, "a", "1"), (-1, "a", "1")], &[-1.0, 0.0, 1.0], 1.0, 5.0, 0.01).unwrap();
        let g = Grid::new(0.0, 5.0, 0.01).unwrap();
        assert!(solve_branch_dirichlet(&s, 1, g, 1.5, 1e-9).is_err());
        assert!(solve_branch_dirichlet(&s, 1, g, -0.1, 1e-9).is_err());
        assert!(solve_branch_dirichlet(&s, 7, g, 0.5, 1e-9).is_err());
    }

    #[test]
    fn symmetric_constant_cost_is_flat() {
        let s: Scenario<f64> =
            Scenario::new(&[(1, "a", "1.5"), (-1, "a", "1.5")], &[-1.0, 0.0, 1.0], 2.0, 3.0, 0.01).unwrap();
        for eps in [0.2, 0.05] {
            let v = solve_thermostatic(&s, &ThermostatConfig::twofold(eps), 1e-10).unwrap();
            assert!((v.max_value() - 0.75).abs() < 1e-9 && (v.min_value() - 0.75).abs() < 1e-9);
        }
    }
}
