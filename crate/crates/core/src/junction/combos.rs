//! Convexified junction costs over feasible control combinations.

use serde::{Deserialize, Serialize};

use super::weights::{mu_threefold, mu_twofold};
use crate::error::{Error, Result};
use crate::model::{JunctionKind, Scenario};
use crate::scalar::Real;

/// Which branches a threefold switching cycle visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sigma {
    #[serde(rename = "12")]
    S12,
    #[serde(rename = "13")]
    S13,
    #[serde(rename = "23")]
    S23,
    #[serde(rename = "123")]
    S123,
}

impl Sigma {
    pub fn pair(i: i32, j: i32) -> Option<Self> {
        match (i.min(j), i.max(j)) {
            (1, 2) => Some(Sigma::S12),
            (1, 3) => Some(Sigma::S13),
            (2, 3) => Some(Sigma::S23),
            _ => None,
        }
    }

    pub fn branches(self) -> &'static [i32] {
        match self {
            Sigma::S12 => &[1, 2],
            Sigma::S13 => &[1, 3],
            Sigma::S23 => &[2, 3],
            Sigma::S123 => &[1, 2, 3],
        }
    }
}

impl std::fmt::Display for Sigma {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Sigma::S12 => "12",
            Sigma::S13 => "13",
            Sigma::S23 => "23",
            Sigma::S123 => "123",
        };
        f.write_str(s)
    }
}

/// Controls held on each branch of a junction cycle, their time fractions and
/// the resulting average running cost. A single branch with weight one is a
/// rest at the junction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibleCombo<T> {
    pub branches: Vec<i32>,
    pub controls: Vec<T>,
    pub weights: Vec<T>,
    pub sigma: Option<Sigma>,
    pub cycle_cost: T,
}

impl<T: Real> FeasibleCombo<T> {
    pub fn is_rest(&self) -> bool {
        self.branches.len() == 1
    }

    pub fn control_of(&self, id: i32) -> Option<T> {
        self.branches.iter().position(|&b| b == id).map(|k| self.controls[k])
    }
}

/// Minimum of a convexified cost: `value = cycle_cost / lambda`, or `+inf`
/// without witness when no combination is feasible.
#[derive(Debug, Clone, PartialEq)]
pub struct JunctionCandidate<T> {
    pub value: T,
    pub combo: Option<FeasibleCombo<T>>,
}

impl<T: Real> JunctionCandidate<T> {
    pub fn infeasible() -> Self {
        Self { value: T::infinity(), combo: None }
    }

    pub fn is_feasible(&self) -> bool {
        self.combo.is_some()
    }

    fn offer(&mut self, value: T, combo: impl FnOnce() -> FeasibleCombo<T>) {
        if value < self.value {
            self.value = value;
            self.combo = Some(combo());
        }
    }
}

/// Junction data of one branch: for every control, the speed and cost at 0
/// in branch-local orientation (negative speed points into the junction).
struct AtZero<T> {
    id: i32,
    rows: Vec<(T, T, T)>,
}

fn at_zero<T: Real>(s: &Scenario<T>, id: i32) -> Result<AtZero<T>> {
    let index = s.index_of(id)?;
    let rows = s
        .controls()
        .values()
        .iter()
        .map(|&a| Ok((a, s.dynamics_at(index, T::zero(), a)?, s.cost_at(index, T::zero(), a)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(AtZero { id, rows })
}

fn offer_rests<T: Real>(best: &mut JunctionCandidate<T>, lambda: T, sides: &[&AtZero<T>], sigma: Option<Sigma>) {
    for side in sides {
        for &(a, f, l) in &side.rows {
            if f == T::zero() {
                best.offer(l / lambda, || FeasibleCombo {
                    branches: vec![side.id],
                    controls: vec![a],
                    weights: vec![T::one()],
                    sigma,
                    cycle_cost: l,
                });
            }
        }
    }
}

/// Best two-branch cycle between `p` and `q`, rests included.
fn pair_minimum<T: Real>(lambda: T, p: &AtZero<T>, q: &AtZero<T>, sigma: Option<Sigma>) -> JunctionCandidate<T> {
    let mut best = JunctionCandidate::infeasible();
    for &(ap, fp, lp) in &p.rows {
        if fp > T::zero() {
            continue;
        }
        for &(aq, fq, lq) in &q.rows {
            if fq > T::zero() || (fp == T::zero() && fq == T::zero()) {
                continue;
            }
            // weight of p in the cycle: |f_q| / (|f_p| + |f_q|)
            let Ok(mu) = mu_twofold(-fp, fq) else { continue };
            let cost = mu * lp + (T::one() - mu) * lq;
            best.offer(cost / lambda, || FeasibleCombo {
                branches: vec![p.id, q.id],
                controls: vec![ap, aq],
                weights: vec![mu, T::one() - mu],
                sigma,
                cycle_cost: cost,
            });
        }
    }
    offer_rests(&mut best, lambda, &[p, q], sigma);
    best
}

/// Convexified junction cost of a twofold network:
/// `(1/lambda) min { mu l_{-1}(0,a_{-1}) + (1-mu) l_1(0,a_1) }` over pairs
/// with `f_1(0,a_1) <= 0 <= f_{-1}(0,a_{-1})`, not both zero, also compared
/// against resting controls `f_i(0,a) = 0`.
pub fn u0_twofold<T: Real>(s: &Scenario<T>) -> Result<JunctionCandidate<T>> {
    if s.kind() != JunctionKind::Twofold {
        return Err(Error::InvalidArgument("u0_twofold needs a twofold scenario".into()));
    }
    Ok(pair_minimum(s.lambda(), &at_zero(s, -1)?, &at_zero(s, 1)?, None))
}

/// Best two-branch cycle between threefold branches `i` and `j`.
pub fn u_pair<T: Real>(s: &Scenario<T>, i: i32, j: i32) -> Result<JunctionCandidate<T>> {
    if s.kind() != JunctionKind::Threefold {
        return Err(Error::InvalidArgument("u_pair needs a threefold scenario".into()));
    }
    let sigma = Sigma::pair(i, j).ok_or_else(|| Error::InvalidArgument(format!("no branch pair ({i}, {j})")))?;
    let (lo, hi) = (i.min(j), i.max(j));
    Ok(pair_minimum(s.lambda(), &at_zero(s, lo)?, &at_zero(s, hi)?, Some(sigma)))
}

/// Best full cycle through the three branches, rests included.
pub fn u123<T: Real>(s: &Scenario<T>) -> Result<JunctionCandidate<T>> {
    if s.kind() != JunctionKind::Threefold {
        return Err(Error::InvalidArgument("u123 needs a threefold scenario".into()));
    }
    let lambda = s.lambda();
    let b = [at_zero(s, 1)?, at_zero(s, 2)?, at_zero(s, 3)?];
    let inward = |z: &AtZero<T>| z.rows.iter().copied().filter(|r| r.1 <= T::zero()).collect::<Vec<_>>();
    let (r1, r2, r3) = (inward(&b[0]), inward(&b[1]), inward(&b[2]));
    let mut best = JunctionCandidate::infeasible();
    for &(a1, f1, l1) in &r1 {
        for &(a2, f2, l2) in &r2 {
            for &(a3, f3, l3) in &r3 {
                let Ok((m1, m2, m3)) = mu_threefold(f1, f2, f3) else { continue };
                let cost = m1 * l1 + m2 * l2 + m3 * l3;
                best.offer(cost / lambda, || FeasibleCombo {
                    branches: vec![1, 2, 3],
                    controls: vec![a1, a2, a3],
                    weights: vec![m1, m2, m3],
                    sigma: Some(Sigma::S123),
                    cycle_cost: cost,
                });
            }
        }
    }
    offer_rests(&mut best, lambda, &[&b[0], &b[1], &b[2]], Some(Sigma::S123));
    Ok(best)
}
