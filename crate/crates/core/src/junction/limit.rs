use super::report::{junction_value, JunctionMode, JunctionReport};
use crate::error::Result;
use crate::hjb::{dirichlet_field, state_constraint_field, FieldKind, ValueField};
use crate::model::Scenario;
use crate::scalar::Real;

/// Limit value field: every branch solved on `[0, X]` with the junction
/// datum `report.v_junction`.
pub fn assemble_limit<T: Real>(s: &Scenario<T>, report: &JunctionReport<T>, tol: T) -> Result<ValueField<T>> {
    let data = vec![report.v_junction.min(s.value_bound()); s.num_branches()];
    dirichlet_field(s, &data, tol, FieldKind::Limit)
}

/// State-constraint values, junction report and assembled limit field in one go.
#[derive(Debug, Clone)]
pub struct LimitSolution<T> {
    pub state_constraint: ValueField<T>,
    pub report: JunctionReport<T>,
    pub field: ValueField<T>,
}

impl<T: Real> LimitSolution<T> {
    /// Sup distance between the limit field and `V_sc(i)` on every branch
    /// whose state-constraint value attains the junction value.
    pub fn state_constraint_agreement(&self) -> Result<Vec<(i32, T)>> {
        self.report
            .argmin_state_constraints()
            .into_iter()
            .map(|id| {
                let a = self.field.branch(id)?;
                let b = self.state_constraint.branch(id)?;
                let d = a.values.iter().zip(&b.values).fold(T::zero(), |m, (x, y)| m.max((*x - *y).abs()));
                Ok((id, d))
            })
            .collect()
    }
}

pub fn solve_limit<T: Real>(s: &Scenario<T>, mode: JunctionMode, tol: T) -> Result<LimitSolution<T>> {
    let state_constraint = state_constraint_field(s, tol)?;
    let v_sc = s
        .branch_ids()
        .into_iter()
        .map(|id| state_constraint.at_junction(id))
        .collect::<Result<Vec<_>>>()?;
    let report = junction_value(s, mode, &v_sc)?;
    let field = assemble_limit(s, &report, tol)?;
    Ok(LimitSolution { state_constraint, report, field })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twofold_example_limit_field() {
        let s: Scenario<f64> =
            Scenario::new(&[(1, "a", "2"), (-1, "a", "1")], &[-1.0, 0.0, 1.0], 1.0, 5.0, 0.001).unwrap();
        let l = solve_limit(&s, JunctionMode::Twofold, 1e-10).unwrap();
        assert!((l.report.v_junction - 1.0).abs() < 1e-9);
        assert!(l.report.is_tie());
        let b = l.field.branch(1).unwrap();
        let h = s.grid_step();
        for (k, x) in b.grid.nodes().enumerate() {
            assert!((b.values[k] - (2.0 - (-x).exp())).abs() <= 5.0 * h);
        }
        assert!(l.field.branch(-1).unwrap().values.iter().all(|v| (v - 1.0).abs() < 1e-12));
        let agree = l.state_constraint_agreement().unwrap();
        assert_eq!(agree.len(), 1);
        assert!(agree[0].1 < 1e-9);
    }

    #[test]
    fn constant_cost_limit_is_flat() {
        let s: Scenario<f64> = Scenario::new(
            &[(1, "a", "1.5"), (2, "a", "1.5"), (3, "2*a", "1.5")],
            &[-1.0, 0.0, 1.0],
            0.5,
            3.0,
            0.01,
        )
        .unwrap();
        for mode in [JunctionMode::ThreefoldUniform, JunctionMode::ThreefoldNonuniform] {
            let l = solve_limit(&s, mode, 1e-10).unwrap();
            assert!((l.field.max_value() - 3.0).abs() < 1e-9 && (l.field.min_value() - 3.0).abs() < 1e-9);
        }
    }
}
