use serde::{Deserialize, Serialize};

use super::scenario::{JunctionKind, Scenario};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Thresholds and cyclic switching order of the approximating hybrid system.
///
/// `thresholds[k]` belongs to the branch at index `k` of
/// [`Scenario::branches`] (ids in increasing order). Branch `i` lives on the
/// local interval `[-eps_i, X]`; leaving it through `-eps_i` enters the next
/// branch of `order` at `+eps_next`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermostatConfig<T> {
    pub thresholds: Vec<T>,
    pub order: Vec<i32>,
}

impl<T: Real> ThermostatConfig<T> {
    /// Delayed relay with thresholds `-eps` and `eps` on the signed axis.
    pub fn twofold(eps: T) -> Self {
        Self { thresholds: vec![eps, eps], order: vec![1, -1] }
    }

    /// Three thresholds for branches 1, 2, 3, switching 1 -> 2 -> 3 -> 1.
    pub fn threefold(thresholds: [T; 3]) -> Self {
        Self { thresholds: thresholds.to_vec(), order: vec![1, 2, 3] }
    }

    pub fn uniform(eps: T) -> Self {
        Self::threefold([eps; 3])
    }

    /// Same thresholds, another cyclic switching order.
    pub fn with_order(mut self, order: &[i32]) -> Self {
        self.order = order.to_vec();
        self
    }

    pub fn validate(&self, s: &Scenario<T>) -> Result<()> {
        let n = s.num_branches();
        if self.thresholds.len() != n {
            return Err(Error::InvalidConfig(format!(
                "expected {n} thresholds, got {}",
                self.thresholds.len()
            )));
        }
        for &e in &self.thresholds {
            if !(e > T::zero()) || !e.is_finite() {
                return Err(Error::InvalidConfig(format!("threshold {e} must be positive")));
            }
            if e >= s.domain_radius() {
                return Err(Error::InvalidConfig(format!(
                    "threshold {e} must be smaller than the domain radius"
                )));
            }
        }
        if s.kind() == JunctionKind::Twofold && self.thresholds[0] != self.thresholds[1] {
            return Err(Error::InvalidConfig("twofold relay thresholds must be -eps and eps".into()));
        }
        let mut sorted = self.order.clone();
        sorted.sort_unstable();
        if sorted != s.branch_ids() {
            return Err(Error::InvalidConfig(format!(
                "switching order {:?} is not a cycle over branches {:?}",
                self.order,
                s.branch_ids()
            )));
        }
        Ok(())
    }

    /// Index of the branch entered when leaving branch `index` through its threshold.
    pub fn next_index(&self, s: &Scenario<T>, index: usize) -> usize {
        let id = s.branches()[index].id;
        let pos = self.order.iter().position(|&o| o == id).expect("validated order");
        let next = self.order[(pos + 1) % self.order.len()];
        s.index_of(next).expect("validated order")
    }

    pub fn min_threshold(&self) -> T {
        self.thresholds.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max_threshold(&self) -> T {
        self.thresholds.iter().copied().fold(T::zero(), T::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three() -> Scenario<f64> {
        Scenario::new(&[(1, "a", "1"), (2, "a", "1"), (3, "a", "1")], &[-1.0, 1.0], 1.0, 1.0, 0.1)
            .unwrap()
    }

    #[test]
    fn cyclic_successor() {
        let s = three();
        let c = ThermostatConfig::uniform(0.1);
        c.validate(&s).unwrap();
        assert_eq!(c.next_index(&s, 0), 1);
        assert_eq!(c.next_index(&s, 2), 0);
        let c = c.with_order(&[1, 3, 2]);
        c.validate(&s).unwrap();
        assert_eq!(c.next_index(&s, 0), 2);
        assert_eq!(c.next_index(&s, 2), 1);
    }

    #[test]
    fn rejects_invalid_configs() {
        let s = three();
        assert!(ThermostatConfig::uniform(0.0).validate(&s).is_err());
        assert!(ThermostatConfig::uniform(1.5).validate(&s).is_err());
        assert!(ThermostatConfig::uniform(0.1).with_order(&[1, 2, 2]).validate(&s).is_err());
        assert!(ThermostatConfig::twofold(0.1).validate(&s).is_err());
        let two: Scenario<f64> =
            Scenario::new(&[(1, "a", "1"), (-1, "a", "1")], &[-1.0, 1.0], 1.0, 1.0, 0.1).unwrap();
        ThermostatConfig::twofold(0.1).validate(&two).unwrap();
        let lopsided = ThermostatConfig { thresholds: vec![0.1, 0.2], order: vec![1, -1] };
        assert!(lopsided.validate(&two).is_err());
    }
}
