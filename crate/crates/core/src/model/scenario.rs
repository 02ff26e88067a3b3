use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::expr::Expr;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Which junction a scenario describes. Determined by the branch count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JunctionKind {
    /// Two half-lines labelled `-1` and `1` on one signed axis.
    Twofold,
    /// Three half-lines labelled `1`, `2`, `3`.
    Threefold,
}

/// Dynamics and running cost of one branch.
///
/// Expressions are written in the branch's native coordinate. For the twofold
/// branch `-1` that is the negative half-axis; every other branch uses `x >= 0`
/// measured away from the junction.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchSpec {
    pub id: i32,
    pub dynamics: Expr,
    pub cost: Expr,
}

/// Finite, sorted, duplicate-free sample of the control set.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSet<T> {
    values: Vec<T>,
}

impl<T: Real> ControlSet<T> {
    pub fn new(mut values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidScenario("control set is empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidScenario("control values must be finite".into()));
        }
        values.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        values.dedup();
        Ok(Self { values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// On-disk scenario document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub branches: Vec<BranchFile>,
    pub controls: Vec<f64>,
    pub lambda: f64,
    pub domain_radius: f64,
    pub grid_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchFile {
    pub id: i32,
    pub dynamics: String,
    pub cost: String,
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// A network with one junction, its control sample and discretization data.
#[derive(Debug, Clone)]
pub struct Scenario<T> {
    kind: JunctionKind,
    branches: Vec<BranchSpec>,
    controls: ControlSet<T>,
    lambda: T,
    domain_radius: T,
    grid_step: T,
    sup_cost: T,
    sup_speed: T,
    hash: String,
}

impl<T: Real> Scenario<T> {
    pub fn from_file(file: &ScenarioFile) -> Result<Self> {
        let hash = sha256_hex(file.to_json().as_bytes());
        let mut branches = Vec::with_capacity(file.branches.len());
        for b in &file.branches {
            branches.push(BranchSpec {
                id: b.id,
                dynamics: Expr::parse(&b.dynamics).map_err(|e| context(b.id, "dynamics", e))?,
                cost: Expr::parse(&b.cost).map_err(|e| context(b.id, "cost", e))?,
            });
        }
        let controls = ControlSet::new(file.controls.iter().map(|&v| T::lit(v)).collect())?;
        let mut s = Self::build(
            branches,
            controls,
            T::lit(file.lambda),
            T::lit(file.domain_radius),
            T::lit(file.grid_step),
        )?;
        s.hash = hash;
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(&ScenarioFile::from_json(text)?)
    }

    /// Builds a scenario from expression sources, mainly for tests and examples.
    pub fn new(
        branches: &[(i32, &str, &str)],
        controls: &[f64],
        lambda: f64,
        domain_radius: f64,
        grid_step: f64,
    ) -> Result<Self> {
        Self::from_file(&ScenarioFile {
            branches: branches
                .iter()
                .map(|&(id, f, l)| BranchFile { id, dynamics: f.into(), cost: l.into() })
                .collect(),
            controls: controls.to_vec(),
            lambda,
            domain_radius,
            grid_step,
        })
    }

    fn build(
        mut branches: Vec<BranchSpec>,
        controls: ControlSet<T>,
        lambda: T,
        domain_radius: T,
        grid_step: T,
    ) -> Result<Self> {
        if !(lambda > T::zero()) {
            return Err(Error::InvalidScenario("lambda must be positive".into()));
        }
        if !(domain_radius > T::zero()) {
            return Err(Error::InvalidScenario("domain_radius must be positive".into()));
        }
        if !(grid_step > T::zero()) || grid_step > domain_radius {
            return Err(Error::InvalidScenario("grid_step must lie in (0, domain_radius]".into()));
        }
        branches.sort_by_key(|b| b.id);
        let ids: Vec<i32> = branches.iter().map(|b| b.id).collect();
        let kind = match ids.as_slice() {
            [-1, 1] => JunctionKind::Twofold,
            [1, 2, 3] => JunctionKind::Threefold,
            _ => {
                return Err(Error::InvalidScenario(format!(
                    "branch ids must be {{-1, 1}} or {{1, 2, 3}}, got {ids:?}"
                )))
            }
        };
        let mut s = Self {
            kind,
            branches,
            controls,
            lambda,
            domain_radius,
            grid_step,
            sup_cost: T::zero(),
            sup_speed: T::zero(),
            hash: String::new(),
        };
        let n = num_nodes(domain_radius, grid_step);
        let mut sup_cost = T::zero();
        let mut sup_speed = T::zero();
        for b in 0..s.branches.len() {
            for k in 0..=n {
                let x = domain_radius * T::from_usize_lossy(k) / T::from_usize_lossy(n);
                for &a in s.controls.values() {
                    sup_cost = sup_cost.max(s.cost_at(b, x, a)?.abs());
                    sup_speed = sup_speed.max(s.dynamics_at(b, x, a)?.abs());
                }
            }
        }
        s.sup_cost = sup_cost;
        s.sup_speed = sup_speed;
        Ok(s)
    }

    pub fn kind(&self) -> JunctionKind {
        self.kind
    }

    pub fn branches(&self) -> &[BranchSpec] {
        &self.branches
    }

    pub fn num_branches(&self) -> usize {
        self.branches.len()
    }

    pub fn branch_ids(&self) -> Vec<i32> {
        self.branches.iter().map(|b| b.id).collect()
    }

    /// Position of branch `id` in [`Self::branches`].
    pub fn index_of(&self, id: i32) -> Result<usize> {
        self.branches
            .iter()
            .position(|b| b.id == id)
            .ok_or_else(|| Error::InvalidArgument(format!("no branch with id {id}")))
    }

    pub fn controls(&self) -> &ControlSet<T> {
        &self.controls
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn domain_radius(&self) -> T {
        self.domain_radius
    }

    pub fn grid_step(&self) -> T {
        self.grid_step
    }

    /// `sup |l|` over the sampling grid and control set.
    pub fn sup_cost(&self) -> T {
        self.sup_cost
    }

    /// `M = sup |f|` over the sampling grid and control set.
    pub fn sup_speed(&self) -> T {
        self.sup_speed
    }

    /// Upper bound `sup l / lambda` for every value function of the scenario.
    pub fn value_bound(&self) -> T {
        self.sup_cost / self.lambda
    }

    /// SHA-256 of the canonical JSON form of the scenario.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// `-1` for the twofold branch `-1` (native negative axis), `+1` otherwise.
    pub fn orientation(&self, index: usize) -> T {
        if self.kind == JunctionKind::Twofold && self.branches[index].id == -1 {
            -T::one()
        } else {
            T::one()
        }
    }

    /// Native coordinate of the point at distance-coordinate `s` on branch `index`.
    pub fn native_position(&self, index: usize, s: T) -> T {
        self.orientation(index) * s
    }

    /// Dynamics in the branch-local coordinate `s` (positive away from the
    /// junction). Below `s = 0` the branch data are extended by constancy.
    pub fn dynamics_at(&self, index: usize, s: T, a: T) -> Result<T> {
        let sigma = self.orientation(index);
        let x = sigma * s.max(T::zero());
        Ok(sigma * self.branches[index].dynamics.eval(x, a)?)
    }

    /// Running cost in the branch-local coordinate, extended by constancy below 0.
    pub fn cost_at(&self, index: usize, s: T, a: T) -> Result<T> {
        let x = self.orientation(index) * s.max(T::zero());
        self.branches[index].cost.eval(x, a)
    }

    /// Hamiltonian `sup_a { -f(s,a) p - l(s,a) }` in branch-local coordinates.
    pub fn hamiltonian(&self, index: usize, s: T, p: T) -> Result<T> {
        let mut best = T::neg_infinity();
        for &a in self.controls.values() {
            let v = -self.dynamics_at(index, s, a)? * p - self.cost_at(index, s, a)?;
            if v > best {
                best = v;
            }
        }
        Ok(best)
    }

    /// Hamiltonian of branch `id` in its native coordinate `x`.
    pub fn hamiltonian_native(&self, id: i32, x: T, p: T) -> Result<T> {
        let index = self.index_of(id)?;
        let sigma = self.orientation(index);
        self.hamiltonian(index, sigma * x, sigma * p)
    }
}

fn context(id: i32, field: &str, e: Error) -> Error {
    match e {
        Error::Syntax { offset, message } => Error::Syntax {
            offset,
            message: format!("{message} (branch {id} {field})"),
        },
        other => other,
    }
}

pub(crate) fn num_nodes<T: Real>(length: T, step: T) -> usize {
    let n = (length / step).to_f64_lossy();
    // Tolerate representation noise so that e.g. 5 / 0.001 gives 5000 intervals.
    let rounded = n.round();
    let n = if (n - rounded).abs() < 1e-9 * rounded.max(1.0) { rounded } else { n.ceil() };
    (n as usize).max(1)
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn twofold() -> Scenario<f64> {
        Scenario::new(&[(1, "a", "2"), (-1, "a", "1")], &[1.0, -1.0, 0.0, 1.0], 1.0, 5.0, 0.01)
            .unwrap()
    }

    #[test]
    fn controls_sorted_and_deduplicated() {
        let s = twofold();
        assert_eq!(s.controls().values(), &[-1.0, 0.0, 1.0]);
        assert_eq!(s.branch_ids(), vec![-1, 1]);
        assert_eq!(s.kind(), JunctionKind::Twofold);
    }

    #[test]
    fn local_coordinates_flip_the_negative_branch() {
        let s = twofold();
        let neg = s.index_of(-1).unwrap();
        // native f = a; moving right (a = 1) on branch -1 approaches the junction
        assert_eq!(s.dynamics_at(neg, 0.5, 1.0).unwrap(), -1.0);
        assert_eq!(s.native_position(neg, 0.5), -0.5);
        assert_eq!(s.sup_speed(), 1.0);
        assert_eq!(s.value_bound(), 2.0);
    }

    #[test]
    fn extension_by_constancy_below_zero() {
        let s: Scenario<f64> =
            Scenario::new(&[(1, "x + a", "x*x"), (2, "a", "1"), (3, "a", "1")], &[-1.0, 1.0], 1.0, 2.0, 0.1)
                .unwrap();
        assert_eq!(s.dynamics_at(0, -0.05, 1.0).unwrap(), 1.0);
        assert_eq!(s.cost_at(0, -0.05, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        let bad = |lambda, x, h| {
            Scenario::<f64>::new(&[(1, "a", "1"), (-1, "a", "1")], &[-1.0, 1.0], lambda, x, h)
        };
        assert!(bad(0.0, 1.0, 0.1).is_err());
        assert!(bad(1.0, -1.0, 0.1).is_err());
        assert!(bad(1.0, 1.0, 0.0).is_err());
        assert!(Scenario::<f64>::new(&[(1, "a", "1")], &[1.0], 1.0, 1.0, 0.1).is_err());
        assert!(Scenario::<f64>::new(&[(1, "a", "1"), (2, "a", "1")], &[1.0], 1.0, 1.0, 0.1).is_err());
        assert!(Scenario::<f64>::new(&[(1, "a", "1"), (-1, "a", "1")], &[], 1.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn loader_rejects_unknown_keys() {
        let text = r#"{"branches": [], "controls": [1], "lambda": 1, "domain_radius": 1,
                       "grid_step": 0.1, "epsilon": 0.1}"#;
        assert!(ScenarioFile::from_json(text).is_err());
    }

    #[test]
    fn malformed_expression_reports_offset() {
        let err = Scenario::<f64>::new(&[(1, "a +", "1"), (-1, "a", "1")], &[1.0], 1.0, 1.0, 0.1)
            .unwrap_err();
        assert!(matches!(err, Error::Syntax { offset: 3, .. }), "{err}");
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(twofold().hash(), twofold().hash());
        assert_eq!(twofold().hash().len(), 64);
    }

    #[test]
    fn node_count_tolerates_rounding() {
        assert_eq!(num_nodes(5.0, 0.001), 5000);
        assert_eq!(num_nodes(5.1, 0.001), 5100);
        assert_eq!(num_nodes(1.0, 0.3), 4);
    }
}
