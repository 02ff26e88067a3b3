//! Grid-level checks of the Hamilton-Jacobi-Bellman equation and the
//! junction conditions.

use serde::Serialize;

use crate::error::Result;
use crate::hjb::{BranchField, ValueField};
use crate::junction::JunctionMode;
use crate::model::Scenario;
use crate::scalar::Real;

/// Samples of the slope interval in the pairwise junction test.
const PAIR_SAMPLES: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairCheck {
    pub pair: (i32, i32),
    /// Slopes `p` of test functions touching from above: `[D+u_i, -D+u_j]`.
    pub slopes: Option<(f64, f64)>,
    /// `max_p min(lambda u + H_i(0,p), lambda u + H_j(0,-p))`; `None` when the
    /// slope interval is empty.
    pub worst: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    /// Per branch, `sup |lambda V + H(x, DV)|` over interior nodes.
    pub interior_residuals: Vec<(i32, f64)>,
    /// Per branch, `sup (lambda V + H(x, DV))`; the subsolution side.
    pub interior_max: Vec<(i32, f64)>,
    /// Per branch, `lambda V_i(0) + H_i(0, D+V_i(0))`.
    pub junction_terms: Vec<(i32, f64)>,
    pub junction_min: f64,
    pub junction_max: f64,
    /// Largest difference between branch values at the junction.
    pub junction_jump: f64,
    pub pairs: Vec<PairCheck>,
    /// Three-branch junction tested with the slopes of the limit cycle profile
    /// (see [`cycle_slope_test`]); `None` when not applicable.
    pub cycle_test: Option<f64>,
    pub fd_step: f64,
}

impl ResidualReport {
    pub fn interior_sup(&self) -> f64 {
        self.interior_residuals.iter().map(|r| r.1).fold(0.0, f64::max)
    }

    pub fn interior_sup_signed(&self) -> f64 {
        self.interior_max.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest pairwise junction defect; `-inf` when every slope interval is empty.
    pub fn pair_worst(&self) -> f64 {
        self.pairs.iter().filter_map(|p| p.worst).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Viscosity solution at grid resolution: interior equation and both
    /// sides of the junction condition.
    pub fn is_solution(&self, tol: f64) -> bool {
        self.interior_sup() <= tol && self.junction_min <= tol && self.junction_max >= -tol && self.junction_jump <= tol
    }

    /// Subsolution at grid resolution. Twofold and non-uniform threefold
    /// junctions admit test functions that are smooth across a pair of
    /// branches, so every pair is tested over its admissible slopes; the
    /// uniform threefold condition is tested at the one-sided slopes and, when
    /// set, at the slopes of the cycle profile.
    pub fn is_subsolution(&self, mode: JunctionMode, tol: f64) -> bool {
        let junction = match mode {
            JunctionMode::ThreefoldUniform => self.junction_min <= tol && self.cycle_test.is_none_or(|c| c <= tol),
            _ => self.pair_worst() <= tol,
        };
        self.interior_sup_signed() <= tol && self.junction_jump <= tol && junction
    }
}

struct Sampled<T> {
    /// Per node, per control: (f, l) in local coordinates.
    data: Vec<Vec<(T, T)>>,
}

fn sample<T: Real>(s: &Scenario<T>, b: &BranchField<T>) -> Result<Sampled<T>> {
    let index = s.index_of(b.id)?;
    let data = b
        .grid
        .nodes()
        .map(|x| {
            s.controls()
                .values()
                .iter()
                .map(|&a| Ok((s.dynamics_at(index, x, a)?, s.cost_at(index, x, a)?)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Sampled { data })
}

/// `lambda V + H` with one-sided differences taken in the direction of motion.
fn upwind_residual<T: Real>(lambda: T, v: T, dminus: T, dplus: T, row: &[(T, T)]) -> T {
    let mut h = T::neg_infinity();
    for &(f, l) in row {
        let p = if f > T::zero() { dplus } else { dminus };
        h = h.max(-f * p - l);
    }
    lambda * v + h
}

/// Residuals of `field` in the discounted HJB equation on every branch and
/// at the junction. Differences use the node stride closest to `fd_step`.
pub fn check_viscosity<T: Real>(s: &Scenario<T>, field: &ValueField<T>, fd_step: T) -> Result<ResidualReport> {
    let lambda = s.lambda();
    let mut interior_residuals = Vec::new();
    let mut interior_max = Vec::new();
    let mut junction_terms = Vec::new();
    let mut at_zero = Vec::new();
    let mut slopes = Vec::new();
    let mut fd = T::zero();

    for b in &field.branches {
        let h = b.grid.step;
        let m = (fd_step / h).round().to_usize().unwrap_or(1).max(1);
        let mh = h * T::from_usize_lossy(m);
        fd = fd.max(mh);
        let sampled = sample(s, b)?;
        let v = &b.values;
        let n = v.len();
        let (mut sup_abs, mut sup) = (T::zero(), T::neg_infinity());
        for k in m..n.saturating_sub(m) {
            let r = upwind_residual(lambda, v[k], (v[k] - v[k - m]) / mh, (v[k + m] - v[k]) / mh, &sampled.data[k]);
            sup_abs = sup_abs.max(r.abs());
            sup = sup.max(r);
        }
        interior_residuals.push((b.id, sup_abs.to_f64_lossy()));
        interior_max.push((b.id, sup.to_f64_lossy()));

        let index = s.index_of(b.id)?;
        let u0 = b.at(T::zero());
        let p = (b.at(mh) - u0) / mh;
        junction_terms.push((b.id, (lambda * u0 + s.hamiltonian(index, T::zero(), p)?).to_f64_lossy()));
        at_zero.push((index, u0));
        slopes.push(p);
    }

    let junction_min = junction_terms.iter().map(|t| t.1).fold(f64::INFINITY, f64::min);
    let junction_max = junction_terms.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
    let mut junction_jump = T::zero();
    let mut pairs = Vec::new();
    for i in 0..at_zero.len() {
        for j in i + 1..at_zero.len() {
            let (ii, ui) = at_zero[i];
            let (jj, uj) = at_zero[j];
            junction_jump = junction_jump.max((ui - uj).abs());
            let u = (ui + uj) / T::lit(2.0);
            let (lo, hi) = (slopes[i], -slopes[j]);
            let pair = (field.branches[i].id, field.branches[j].id);
            if lo > hi {
                pairs.push(PairCheck { pair, slopes: None, worst: None });
                continue;
            }
            let mut worst = T::neg_infinity();
            for k in 0..=PAIR_SAMPLES {
                let p = lo + (hi - lo) * T::from_usize_lossy(k) / T::from_usize_lossy(PAIR_SAMPLES);
                let a = lambda * u + s.hamiltonian(ii, T::zero(), p)?;
                let b = lambda * u + s.hamiltonian(jj, T::zero(), -p)?;
                worst = worst.max(a.min(b));
            }
            pairs.push(PairCheck {
                pair,
                slopes: Some((lo.to_f64_lossy(), hi.to_f64_lossy())),
                worst: Some(worst.to_f64_lossy()),
            });
        }
    }

    Ok(ResidualReport {
        interior_residuals,
        interior_max,
        junction_terms,
        junction_min,
        junction_max,
        junction_jump: junction_jump.to_f64_lossy(),
        pairs,
        cycle_test: None,
        fd_step: fd.to_f64_lossy(),
    })
}

fn one_sided<T: Real>(b: &BranchField<T>, fd_step: T) -> (T, T) {
    let m = (fd_step / b.grid.step).round().to_usize().unwrap_or(1).max(1);
    let mh = b.grid.step * T::from_usize_lossy(m);
    let u0 = b.at(T::zero());
    (u0, (b.at(mh) - u0) / mh)
}

/// Junction test with a test function whose branch slopes are `slopes`
/// (branch-local). It touches `field` from above at the junction when every
/// slope is at least the one-sided slope of the field, up to `slack`; then
/// the subsolution condition `min_i (lambda u(0) + H_i(0, p_i)) <= 0` is
/// evaluated and returned. `None` means the test function does not touch.
pub fn cycle_slope_test<T: Real>(
    s: &Scenario<T>,
    field: &ValueField<T>,
    slopes: &[(i32, T)],
    fd_step: T,
    slack: T,
) -> Result<Option<f64>> {
    let mut worst = T::infinity();
    for b in &field.branches {
        let Some(&(_, p)) = slopes.iter().find(|(id, _)| *id == b.id) else {
            return Ok(None);
        };
        let (u0, du) = one_sided(b, fd_step);
        if p < du - slack {
            return Ok(None);
        }
        let index = s.index_of(b.id)?;
        worst = worst.min(s.lambda() * u0 + s.hamiltonian(index, T::zero(), p)?);
    }
    Ok(Some(worst.to_f64_lossy()))
}

/// Adds `bump` to the value at the interior node nearest to `s` on branch `id`.
pub fn corrupt<T: Real>(field: &ValueField<T>, id: i32, s: T, bump: T) -> Result<ValueField<T>> {
    let mut out = field.clone();
    let b = out
        .branches
        .iter_mut()
        .find(|b| b.id == id)
        .ok_or_else(|| crate::Error::InvalidArgument(format!("field has no branch {id}")))?;
    let k = b.grid.nearest(s).clamp(1, b.values.len() - 2);
    b.values[k] = b.values[k] + bump;
    Ok(out)
}
