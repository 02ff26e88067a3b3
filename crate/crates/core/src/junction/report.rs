use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::combos::{u0_twofold, u123, u_pair, FeasibleCombo, JunctionCandidate, Sigma};
use crate::error::{Error, Result};
use crate::model::{JunctionKind, Scenario};
use crate::scalar::Real;

/// Relative tolerance under which two junction ingredients count as tied.
pub const TIE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JunctionMode {
    Twofold,
    /// Equal thresholds: only the full three-branch cycle.
    ThreefoldUniform,
    /// Vanishing thresholds at different rates: pairwise cycles compete too.
    ThreefoldNonuniform,
}

impl JunctionMode {
    pub fn default_for(kind: JunctionKind) -> Self {
        match kind {
            JunctionKind::Twofold => JunctionMode::Twofold,
            JunctionKind::Threefold => JunctionMode::ThreefoldUniform,
        }
    }
}

impl std::str::FromStr for JunctionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "twofold" => Ok(JunctionMode::Twofold),
            "threefold_uniform" | "uniform" => Ok(JunctionMode::ThreefoldUniform),
            "threefold_nonuniform" | "nonuniform" => Ok(JunctionMode::ThreefoldNonuniform),
            other => Err(Error::InvalidArgument(format!("unknown junction mode `{other}`"))),
        }
    }
}

/// Where the junction value comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArgminTag {
    /// A switching cycle or rest at the junction; `sigma` tags threefold scopes.
    Convexified { sigma: Option<Sigma> },
    /// Staying on one branch forever.
    StateConstraint { branch: i32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimizer<T> {
    pub tag: ArgminTag,
    pub value: T,
    pub combo: Option<FeasibleCombo<T>>,
}

/// All scalar junction quantities of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct JunctionReport<T> {
    pub mode: JunctionMode,
    pub lambda: T,
    /// Twofold convexified value.
    pub u0_twofold: Option<JunctionCandidate<T>>,
    /// Threefold: minimum of the pairwise and full-cycle values.
    pub u0_nonuniform: Option<(T, Vec<Sigma>)>,
    pub u123: Option<JunctionCandidate<T>>,
    /// `(i, j, value)` for the pairs `12`, `13`, `23`.
    pub u_pair: Vec<(i32, i32, JunctionCandidate<T>)>,
    /// State-constraint values at the junction, per branch id.
    pub v_sc: Vec<(i32, T)>,
    pub v_junction: T,
    /// Every ingredient attaining `v_junction` within [`TIE_TOL`]; the first
    /// is the preferred one.
    pub argmin: Vec<Minimizer<T>>,
}

fn tied<T: Real>(a: T, b: T) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= T::lit(TIE_TOL) * a.abs().max(b.abs()).max(T::one())
}

/// Value of the limit problem at the junction.
///
/// * twofold: `min { u0, V_sc(-1)(0), V_sc(1)(0) }`;
/// * threefold uniform: `min { u123, V_sc(i)(0) }`;
/// * threefold non-uniform: as uniform with `u123` replaced by
///   `min { u12, u13, u23, u123 }`.
///
/// `v_sc` lists the state-constraint values at 0 in increasing branch id order.
pub fn junction_value<T: Real>(s: &Scenario<T>, mode: JunctionMode, v_sc: &[T]) -> Result<JunctionReport<T>> {
    let ids = s.branch_ids();
    if v_sc.len() != ids.len() {
        return Err(Error::InvalidArgument(format!("expected {} state-constraint values", ids.len())));
    }
    let expected = match mode {
        JunctionMode::Twofold => JunctionKind::Twofold,
        _ => JunctionKind::Threefold,
    };
    if s.kind() != expected {
        return Err(Error::InvalidArgument(format!("mode {mode:?} does not fit a {:?} scenario", s.kind())));
    }

    let mut ingredients: Vec<Minimizer<T>> = Vec::new();
    let mut report = JunctionReport {
        mode,
        lambda: s.lambda(),
        u0_twofold: None,
        u0_nonuniform: None,
        u123: None,
        u_pair: Vec::new(),
        v_sc: ids.iter().copied().zip(v_sc.iter().copied()).collect(),
        v_junction: T::infinity(),
        argmin: Vec::new(),
    };

    match mode {
        JunctionMode::Twofold => {
            let u = u0_twofold(s)?;
            ingredients.push(Minimizer {
                tag: ArgminTag::Convexified { sigma: None },
                value: u.value,
                combo: u.combo.clone(),
            });
            report.u0_twofold = Some(u);
        }
        JunctionMode::ThreefoldUniform | JunctionMode::ThreefoldNonuniform => {
            let full = u123(s)?;
            let pairs = [(1, 2), (1, 3), (2, 3)]
                .into_iter()
                .map(|(i, j)| Ok((i, j, u_pair(s, i, j)?)))
                .collect::<Result<Vec<_>>>()?;
            let mut scoped: Vec<(Sigma, &JunctionCandidate<T>)> = vec![(Sigma::S123, &full)];
            for (i, j, u) in &pairs {
                scoped.push((Sigma::pair(*i, *j).expect("valid pair"), u));
            }
            let u0 = scoped.iter().map(|(_, u)| u.value).fold(T::infinity(), T::min);
            let tags = scoped.iter().filter(|(_, u)| tied(u.value, u0)).map(|(g, _)| *g).collect();
            report.u0_nonuniform = Some((u0, tags));
            let allowed: &[(Sigma, &JunctionCandidate<T>)] =
                if mode == JunctionMode::ThreefoldUniform { &scoped[..1] } else { &scoped };
            for (sigma, u) in allowed {
                ingredients.push(Minimizer {
                    tag: ArgminTag::Convexified { sigma: Some(*sigma) },
                    value: u.value,
                    combo: u.combo.clone(),
                });
            }
            report.u123 = Some(full.clone());
            report.u_pair = pairs;
        }
    }
    for (&id, &v) in ids.iter().zip(v_sc) {
        ingredients.push(Minimizer { tag: ArgminTag::StateConstraint { branch: id }, value: v, combo: None });
    }

    let best = ingredients.iter().map(|m| m.value).fold(T::infinity(), T::min);
    report.v_junction = best;
    report.argmin = ingredients.into_iter().filter(|m| tied(m.value, best)).collect();
    Ok(report)
}

fn num<T: Real>(v: T) -> Value {
    if v.is_finite() {
        json!(v.to_f64_lossy())
    } else {
        Value::Null
    }
}

fn combo_json<T: Real>(c: &Option<FeasibleCombo<T>>) -> Value {
    match c {
        None => Value::Null,
        Some(c) => json!({
            "branches": c.branches,
            "controls": c.controls.iter().map(|&v| num(v)).collect::<Vec<_>>(),
            "weights": c.weights.iter().map(|&v| num(v)).collect::<Vec<_>>(),
            "sigma": c.sigma.map(|s| s.to_string()),
            "cycle_cost": num(c.cycle_cost),
            "rest": c.is_rest(),
        }),
    }
}

fn candidate_json<T: Real>(u: &JunctionCandidate<T>) -> Value {
    json!({
        "value": num(u.value),
        "feasible": u.is_feasible(),
        "argmin": combo_json(&u.combo),
    })
}

impl<T: Real> JunctionReport<T> {
    /// Preferred minimizer.
    pub fn primary(&self) -> Option<&Minimizer<T>> {
        self.argmin.first()
    }

    pub fn is_tie(&self) -> bool {
        self.argmin.len() > 1
    }

    /// Scope tags of the convexified minimizers.
    pub fn argmin_sigmas(&self) -> Vec<Sigma> {
        self.argmin
            .iter()
            .filter_map(|m| match m.tag {
                ArgminTag::Convexified { sigma } => sigma,
                _ => None,
            })
            .collect()
    }

    pub fn argmin_state_constraints(&self) -> Vec<i32> {
        self.argmin
            .iter()
            .filter_map(|m| match m.tag {
                ArgminTag::StateConstraint { branch } => Some(branch),
                _ => None,
            })
            .collect()
    }

    pub fn v_sc_of(&self, id: i32) -> Option<T> {
        self.v_sc.iter().find(|(i, _)| *i == id).map(|(_, v)| *v)
    }

    /// JSON export. Infeasible (infinite) values are written as `null` with
    /// `"feasible": false`.
    pub fn to_json_value(&self) -> Value {
        json!({
            "mode": self.mode,
            "lambda": num(self.lambda),
            "u0_twofold": self.u0_twofold.as_ref().map(candidate_json),
            "u0_nonuniform": self.u0_nonuniform.as_ref().map(|(v, tags)| json!({
                "value": num(*v),
                "sigma": tags.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
            })),
            "u123": self.u123.as_ref().map(candidate_json),
            "u_pair": self.u_pair.iter().map(|(i, j, u)| {
                let mut v = candidate_json(u);
                v["pair"] = json!([i, j]);
                v
            }).collect::<Vec<_>>(),
            "v_sc": self.v_sc.iter().map(|(i, v)| json!({"branch": i, "value": num(*v)})).collect::<Vec<_>>(),
            "v_junction": num(self.v_junction),
            "tie": self.is_tie(),
            "argmin": self.argmin.iter().map(|m| {
                let tag = serde_json::to_value(&m.tag).expect("tag serializes");
                json!({"tag": tag, "value": num(m.value), "combo": combo_json(&m.combo)})
            }).collect::<Vec<_>>(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("report serializes")
    }
}
