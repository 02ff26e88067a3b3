//! Maximality of the limit field among generated subsolutions.

use rayon::prelude::*;
use serde::Serialize;

use super::viscosity::{check_viscosity, cycle_slope_test, ResidualReport};
use crate::error::Result;
use crate::hjb::{dirichlet_field, FieldKind, ValueField};
use crate::junction::{JunctionMode, JunctionReport};
use crate::model::Scenario;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Recipe {
    /// Constant below `inf l / lambda`.
    Constant,
    /// The limit field lowered, scaled down, or minus a smooth bump.
    Perturbed,
    /// Branch Dirichlet problems with a junction ingredient as datum.
    JunctionDatum,
    /// The limit field itself.
    Limit,
}

#[derive(Debug, Clone)]
pub struct Candidate<T> {
    pub label: String,
    pub recipe: Recipe,
    pub field: ValueField<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Failed its own subsolution check.
    Excluded,
    Below,
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateVerdict {
    pub label: String,
    pub recipe: Recipe,
    pub verdict: Verdict,
    /// `max (candidate - V)` over the nodes.
    pub excess: f64,
    /// `min_i |candidate_i(0) - V_i(0)|`.
    pub junction_gap: f64,
    pub interior_max: f64,
    pub junction_jump: f64,
    /// Junction defect used by the pre-check.
    pub junction_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsolutionStudy {
    pub mode: JunctionMode,
    pub residual_tol: f64,
    pub value_tol: f64,
    pub verdicts: Vec<CandidateVerdict>,
}

impl SubsolutionStudy {
    /// No admitted candidate lies above the field.
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.verdict != Verdict::Above)
    }

    pub fn admitted(&self) -> usize {
        self.verdicts.iter().filter(|v| v.verdict != Verdict::Excluded).count()
    }

    /// Some admitted candidate meets the field at the junction.
    pub fn attained(&self) -> bool {
        self.verdicts.iter().any(|v| v.verdict == Verdict::Below && v.junction_gap <= self.value_tol)
    }
}

fn map_values<T: Real>(field: &ValueField<T>, label: FieldKind, f: impl Fn(T, T) -> T) -> ValueField<T> {
    let mut out = field.clone();
    out.meta.kind = label;
    for b in &mut out.branches {
        for (k, v) in b.values.iter_mut().enumerate() {
            *v = f(b.grid.node(k), *v);
        }
    }
    out
}

fn inf_cost<T: Real>(s: &Scenario<T>, field: &ValueField<T>) -> Result<T> {
    let mut m = T::infinity();
    for b in &field.branches {
        let index = s.index_of(b.id)?;
        for x in b.grid.nodes() {
            for &a in s.controls().values() {
                m = m.min(s.cost_at(index, x, a)?);
            }
        }
    }
    Ok(m.max(T::zero()))
}

/// Subsolution candidates built from the limit field `v` and the junction
/// data of `report`.
pub fn generate_candidates<T: Real>(
    s: &Scenario<T>,
    v: &ValueField<T>,
    report: &JunctionReport<T>,
    tol: T,
) -> Result<Vec<Candidate<T>>> {
    let lambda = s.lambda();
    let bound = s.value_bound();
    let mut out = Vec::new();

    let floor = inf_cost(s, v)? / lambda;
    for k in 0..=6 {
        let c = floor * T::from_usize_lossy(k) / T::lit(6.0);
        out.push(Candidate {
            label: format!("constant {c}"),
            recipe: Recipe::Constant,
            field: map_values(v, FieldKind::Other, |_, _| c),
        });
    }

    for delta in [1e-3, 1e-2, 1e-1] {
        let d = bound * T::lit(delta);
        out.push(Candidate {
            label: format!("V - {d}"),
            recipe: Recipe::Perturbed,
            field: map_values(v, FieldKind::Other, |_, u| u - d),
        });
    }
    for theta in [0.5, 0.75, 0.9, 0.95, 0.99] {
        let t = T::lit(theta);
        out.push(Candidate {
            label: format!("{theta} V"),
            recipe: Recipe::Perturbed,
            field: map_values(v, FieldKind::Other, |_, u| t * u),
        });
    }
    // Bumps wider than M / lambda: the slope they add is dominated by the
    // discount gained on lowering the value.
    let x = s.domain_radius();
    let m = s.sup_speed();
    let width = (m / lambda).max(x / T::lit(8.0));
    let amp = T::lit(0.1) * bound;
    for q in 0..4 {
        let x0 = x * T::from_usize_lossy(q) / T::lit(4.0);
        out.push(Candidate {
            label: format!("V - bump at {x0}"),
            recipe: Recipe::Perturbed,
            field: map_values(v, FieldKind::Other, |s, u| u - amp / ((s - x0) / width).cosh()),
        });
    }

    let mut data: Vec<(String, T)> = Vec::new();
    if let Some(u) = &report.u0_twofold {
        data.push(("u0".into(), u.value));
    }
    if let Some(u) = &report.u123 {
        data.push(("u123".into(), u.value));
    }
    for (i, j, u) in &report.u_pair {
        data.push((format!("u{i}{j}"), u.value));
    }
    for (id, u) in &report.v_sc {
        data.push((format!("V_sc({id})"), *u));
    }
    let n = s.num_branches();
    let fields: Vec<Result<Option<Candidate<T>>>> = data
        .into_par_iter()
        .map(|(name, d)| {
            if !d.is_finite() || d > bound {
                return Ok(None);
            }
            Ok(Some(Candidate {
                label: format!("datum {name} = {d}"),
                recipe: Recipe::JunctionDatum,
                field: dirichlet_field(s, &vec![d; n], tol, FieldKind::Other)?,
            }))
        })
        .collect();
    for f in fields {
        out.extend(f?);
    }

    out.push(Candidate { label: "V".into(), recipe: Recipe::Limit, field: v.clone() });
    Ok(out)
}

/// Branch-local slopes at the junction of the limit cycle of the full
/// three-branch combination: `(l_i(0, a_i) - lambda u123) / |f_i(0, a_i)|`.
pub fn cycle_slopes<T: Real>(s: &Scenario<T>, report: &JunctionReport<T>) -> Result<Option<Vec<(i32, T)>>> {
    let Some(u) = &report.u123 else { return Ok(None) };
    let Some(combo) = &u.combo else { return Ok(None) };
    if combo.is_rest() || combo.branches.len() != s.num_branches() {
        return Ok(None);
    }
    let mut out = Vec::new();
    for (&id, &a) in combo.branches.iter().zip(&combo.controls) {
        let index = s.index_of(id)?;
        let f = s.dynamics_at(index, T::zero(), a)?;
        if !(f < T::zero()) {
            return Ok(None);
        }
        out.push((id, (s.cost_at(index, T::zero(), a)? - s.lambda() * u.value) / -f));
    }
    Ok(Some(out))
}

/// Grid subsolution test for `mode`. For uniform thresholds the junction is
/// also tested with the cycle slopes of `report`.
pub fn subsolution_report<T: Real>(
    s: &Scenario<T>,
    mode: JunctionMode,
    report: &JunctionReport<T>,
    field: &ValueField<T>,
    fd_step: T,
    residual_tol: f64,
) -> Result<ResidualReport> {
    let mut r = check_viscosity(s, field, fd_step)?;
    if mode == JunctionMode::ThreefoldUniform {
        if let Some(slopes) = cycle_slopes(s, report)? {
            let m = T::lit(super::tolerance::junction_speed(s)?);
            r.cycle_test = cycle_slope_test(s, field, &slopes, fd_step, T::lit(residual_tol) / m)?;
        }
    }
    Ok(r)
}

fn junction_defect(r: &ResidualReport, mode: JunctionMode) -> f64 {
    match mode {
        JunctionMode::ThreefoldUniform => r.junction_min.max(r.cycle_test.unwrap_or(f64::NEG_INFINITY)),
        _ => r.pair_worst(),
    }
}

/// Checks every candidate against `v`: candidates failing their own
/// subsolution test are excluded; the others must stay below `v + value_tol`.
#[allow(clippy::too_many_arguments)]
pub fn check_maximal_subsolution<T: Real>(
    s: &Scenario<T>,
    mode: JunctionMode,
    report: &JunctionReport<T>,
    v: &ValueField<T>,
    candidates: &[Candidate<T>],
    fd_step: T,
    residual_tol: f64,
    value_tol: f64,
) -> Result<SubsolutionStudy> {
    let verdicts = candidates
        .par_iter()
        .map(|c| {
            let r = subsolution_report(s, mode, report, &c.field, fd_step, residual_tol)?;
            let mut excess = T::neg_infinity();
            for b in &c.field.branches {
                for (k, x) in b.grid.nodes().enumerate() {
                    excess = excess.max(b.values[k] - v.value(b.id, x)?);
                }
            }
            let mut gap = T::infinity();
            for b in &c.field.branches {
                gap = gap.min((b.at(T::zero()) - v.at_junction(b.id)?).abs());
            }
            let verdict = if !r.is_subsolution(mode, residual_tol) {
                Verdict::Excluded
            } else if excess.to_f64_lossy() <= value_tol {
                Verdict::Below
            } else {
                Verdict::Above
            };
            Ok(CandidateVerdict {
                label: c.label.clone(),
                recipe: c.recipe,
                verdict,
                excess: excess.to_f64_lossy(),
                junction_gap: gap.to_f64_lossy(),
                interior_max: r.interior_sup_signed(),
                junction_jump: r.junction_jump,
                junction_defect: junction_defect(&r, mode),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SubsolutionStudy { mode, residual_tol, value_tol, verdicts })
}
