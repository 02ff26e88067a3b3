//! Semi-Lagrangian value iteration on one branch.

use super::grid::Grid;
use crate::error::{Error, Result};
use crate::model::Scenario;
use crate::scalar::Real;

/// Speeds below this are treated as resting when choosing the local time step.
pub const F_FLOOR: f64 = 1e-6;

/// Default cap on Gauss-Seidel sweeps of one branch solve.
pub const MAX_SWEEPS: usize = 1_000_000;

/// Condition at the junction end of a branch grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary<T> {
    /// Leaving through the left end pays `exit_cost`.
    Exit(T),
    /// Leaving through the left end is forbidden.
    Constrained,
}

/// One candidate update `V_k <- c + d * V[k + dir]`.
#[derive(Debug, Clone, Copy)]
struct Update<T> {
    c: T,
    d: T,
    dir: i8,
}

/// Discrete problem on one branch: the semi-Lagrangian operator
///
/// `V(s) = min_a [ w l(s,a) + e^{-lambda D} I[V](s + D f(s,a)) ]`,
/// `D = h / max(|f|, F_FLOOR)`, `w = (1 - e^{-lambda D}) / lambda`,
///
/// in branch-local coordinates. The foot of every characteristic lies between
/// the node and one neighbour, so each control gives an affine update in that
/// neighbour once the self-weight is eliminated.
#[derive(Debug, Clone)]
pub struct BranchProblem<T> {
    pub index: usize,
    pub grid: Grid<T>,
    cap: T,
    lambda: T,
    /// Per node: admissible updates; the left node list excludes outward controls.
    updates: Vec<Vec<Update<T>>>,
    /// Per node: the raw `(w l, beta, theta, dir)` data, kept for [`Self::apply`].
    raw: Vec<Vec<(T, T, T, i8)>>,
}

/// Adds, per node, the value of the best policy that oscillates between the
/// node and a neighbour. It is the fixed point of a two-node subsystem, hence
/// an upper bound for the solution, and it spares Gauss-Seidel the slow
/// `e^{-2 lambda h}` contraction of such chattering pairs.
fn add_two_cycles<T: Real>(updates: &mut [Vec<Update<T>>]) {
    let n = updates.len();
    let mut best = vec![T::infinity(); n];
    for k in 0..n.saturating_sub(1) {
        for u in updates[k].iter().filter(|u| u.dir == 1) {
            for w in updates[k + 1].iter().filter(|w| w.dir == -1) {
                let det = T::one() - u.d * w.d;
                if det > T::zero() {
                    best[k] = best[k].min((u.c + u.d * w.c) / det);
                    best[k + 1] = best[k + 1].min((w.c + w.d * u.c) / det);
                }
            }
        }
    }
    for (node, b) in updates.iter_mut().zip(best) {
        if b.is_finite() {
            node.push(Update { c: b, d: T::zero(), dir: 0 });
        }
    }
}

impl<T: Real> BranchProblem<T> {
    pub fn new(s: &Scenario<T>, index: usize, grid: Grid<T>) -> Result<Self> {
        let lambda = s.lambda();
        let h = grid.step;
        let floor = T::lit(F_FLOOR);
        let last = grid.len() - 1;
        let mut updates = Vec::with_capacity(grid.len());
        let mut raw = Vec::with_capacity(grid.len());
        for k in 0..grid.len() {
            let x = grid.node(k);
            let mut node = Vec::with_capacity(s.controls().len());
            let mut node_raw = Vec::with_capacity(s.controls().len());
            for &a in s.controls().values() {
                let f = s.dynamics_at(index, x, a)?;
                let l = s.cost_at(index, x, a)?;
                let dir: i8 = if f > T::zero() {
                    1
                } else if f < T::zero() {
                    -1
                } else {
                    0
                };
                if (k == 0 && dir < 0) || (k == last && dir > 0) {
                    continue;
                }
                let speed = f.abs().max(floor);
                let dt = h / speed;
                let beta = (-lambda * dt).exp();
                let wl = (T::one() - beta) / lambda * l;
                let theta = f.abs() / speed;
                let denom = T::one() - beta * (T::one() - theta);
                node.push(Update { c: wl / denom, d: beta * theta / denom, dir });
                node_raw.push((wl, beta, theta, dir));
            }
            updates.push(node);
            raw.push(node_raw);
        }
        add_two_cycles(&mut updates);
        Ok(Self { index, grid, cap: s.value_bound(), lambda, updates, raw })
    }

    /// Problem on `[left, X]` with the scenario grid step.
    pub fn on(s: &Scenario<T>, index: usize, left: T) -> Result<Self> {
        Self::new(s, index, Grid::new(left, s.domain_radius(), s.grid_step())?)
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    #[inline]
    fn node_value(&self, k: usize, v: &[T], boundary: Boundary<T>) -> T {
        let mut best = T::infinity();
        for u in &self.updates[k] {
            let nb = match u.dir {
                1 => v[k + 1],
                -1 => v[k - 1],
                _ => T::zero(),
            };
            let cand = u.c + u.d * nb;
            if cand < best {
                best = cand;
            }
        }
        if k == 0 {
            if let Boundary::Exit(e) = boundary {
                best = best.min(e);
            }
        }
        if best.is_infinite() {
            self.cap
        } else {
            best
        }
    }

    /// One application of the (explicit) scheme operator to `v`.
    ///
    /// Monotone: raising any entry of `v` cannot lower any entry of the output.
    pub fn apply(&self, v: &[T], boundary: Boundary<T>) -> Vec<T> {
        (0..self.grid.len())
            .map(|k| {
                let mut best = T::infinity();
                for &(wl, beta, theta, dir) in &self.raw[k] {
                    let nb = match dir {
                        1 => v[k + 1],
                        -1 => v[k - 1],
                        _ => v[k],
                    };
                    let cand = wl + beta * ((T::one() - theta) * v[k] + theta * nb);
                    if cand < best {
                        best = cand;
                    }
                }
                if k == 0 {
                    if let Boundary::Exit(e) = boundary {
                        best = best.min(e);
                    }
                }
                if best.is_infinite() {
                    self.cap
                } else {
                    best
                }
            })
            .collect()
    }

    /// Iterates alternating Gauss-Seidel sweeps from `v` until the largest
    /// change of a sweep is below `tol`. Returns `(sweeps, last change)`.
    pub fn solve_in_place(&self, v: &mut [T], boundary: Boundary<T>, tol: T, max_sweeps: usize) -> Result<(usize, T)> {
        if v.len() != self.grid.len() {
            return Err(Error::InvalidArgument("value vector does not match the grid".into()));
        }
        let n = v.len();
        let mut history = Vec::new();
        for sweep in 0..max_sweeps {
            let mut change = T::zero();
            let mut visit = |k: usize, v: &mut [T]| {
                let new = self.node_value(k, v, boundary);
                change = change.max((new - v[k]).abs());
                v[k] = new;
            };
            if sweep % 2 == 0 {
                (0..n).for_each(|k| visit(k, v));
            } else {
                (0..n).rev().for_each(|k| visit(k, v));
            }
            if !change.is_finite() {
                return Err(Error::NonFinite { what: "branch value".into(), x: f64::NAN, a: f64::NAN });
            }
            if change < tol {
                return Ok((sweep + 1, change));
            }
            if history.len() < 64 {
                history.push(change.to_f64_lossy());
            }
        }
        Err(Error::NotConverged {
            what: "branch value iteration",
            iterations: max_sweeps,
            residual: history.last().copied().unwrap_or(f64::NAN),
            history,
        })
    }

    pub fn solve(&self, boundary: Boundary<T>, tol: T) -> Result<(Vec<T>, usize, T)> {
        let mut v = vec![self.cap; self.grid.len()];
        let (sweeps, change) = self.solve_in_place(&mut v, boundary, tol, MAX_SWEEPS)?;
        Ok((v, sweeps, change))
    }
}
