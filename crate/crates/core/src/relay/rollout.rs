//! Brute-force search over piecewise-constant policies.

use rayon::prelude::*;

use super::operator::RelayState;
use super::simulate::{simulate, simulate_cost, Policy, Tail, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::model::{Scenario, ThermostatConfig};
use crate::scalar::Real;

/// Search space of [`best_rollout`].
///
/// A candidate policy is a prefix of at most `max_segments - 1` open-loop
/// segments, each a control paired with one of `durations`, followed by a tail
/// that is either one constant control or one constant control per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutBudget<T> {
    pub max_segments: usize,
    pub durations: Vec<T>,
    /// Hard cap on the number of simulated policies.
    pub cap: u128,
}

impl<T: Real> RolloutBudget<T> {
    pub const MAX_SEGMENTS: usize = 6;
    pub const DEFAULT_CAP: u128 = 2_000_000;

    pub fn new(max_segments: usize, durations: &[T]) -> Self {
        Self { max_segments, durations: durations.to_vec(), cap: Self::DEFAULT_CAP }
    }

    /// Tail-only search: constant and per-mode constant controls.
    pub fn tails_only() -> Self {
        Self::new(1, &[])
    }

    /// Number of policies the search would simulate for `s`.
    pub fn combinations(&self, s: &Scenario<T>) -> u128 {
        let m = s.controls().len() as u128;
        let per_segment = m * self.durations.len() as u128;
        let tails = tail_count(m, s.num_branches());
        let mut total = 0u128;
        let mut prefixes = 1u128;
        for _ in 0..self.max_segments.max(1) {
            total = total.saturating_add(prefixes.saturating_mul(tails));
            prefixes = prefixes.saturating_mul(per_segment);
        }
        total
    }
}

fn tail_count(m: u128, n: usize) -> u128 {
    m + m.pow(n as u32)
}

/// Cheapest policy found by exhaustive search, with its recorded trajectory.
///
/// The result is an upper bound for the discounted value at `start`, up to the
/// horizon truncation and the time discretization. Ties are broken towards the
/// policy enumerated first, so runs are deterministic under any thread count.
pub fn best_rollout<T: Real>(
    s: &Scenario<T>,
    config: &ThermostatConfig<T>,
    start: RelayState<T>,
    horizon: T,
    dt: T,
    budget: &RolloutBudget<T>,
) -> Result<(TrajectoryRecord<T>, T)> {
    if budget.max_segments == 0 || budget.max_segments > RolloutBudget::<T>::MAX_SEGMENTS {
        return Err(Error::InvalidArgument(format!(
            "segment budget must be between 1 and {}",
            RolloutBudget::<T>::MAX_SEGMENTS
        )));
    }
    if budget.max_segments > 1 && budget.durations.iter().any(|&d| !(d > T::zero())) {
        return Err(Error::InvalidArgument("segment durations must be positive".into()));
    }
    let requested = budget.combinations(s);
    if requested > budget.cap {
        return Err(Error::BudgetExceeded { requested, cap: budget.cap });
    }
    config.validate(s)?;
    config.check_coherent(&start)?;

    let total = requested as u64;
    let enumerator = Enumerator::new(s, budget);
    let best = (0..total)
        .into_par_iter()
        .map(|i| {
            let policy = enumerator.policy(i);
            simulate_cost(s, config, start, &policy, horizon, dt).map(|(_, c)| (c, i))
        })
        .try_reduce(
            || (T::infinity(), u64::MAX),
            |a, b| Ok(if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a }),
        )?;
    let policy = enumerator.policy(best.1);
    let record = simulate(s, config, start, &policy, horizon, dt)?;
    let cost = record.discounted_cost;
    Ok((record, cost))
}

struct Enumerator<'a, T> {
    controls: &'a [T],
    durations: &'a [T],
    modes: Vec<i32>,
    max_segments: usize,
}

impl<'a, T: Real> Enumerator<'a, T> {
    fn new(s: &'a Scenario<T>, budget: &'a RolloutBudget<T>) -> Self {
        Self {
            controls: s.controls().values(),
            durations: &budget.durations,
            modes: s.branch_ids(),
            max_segments: budget.max_segments,
        }
    }

    fn policy(&self, mut i: u64) -> Policy<T> {
        let m = self.controls.len() as u64;
        let tails = tail_count(m as u128, self.modes.len()) as u64;
        let per_segment = m * self.durations.len() as u64;
        let mut prefixes = 1u64;
        let mut k = 0;
        while k + 1 < self.max_segments && i >= prefixes * tails {
            i -= prefixes * tails;
            prefixes *= per_segment;
            k += 1;
        }
        let mut tail_index = i % tails;
        let mut prefix_index = i / tails;
        let mut segments = Vec::with_capacity(k);
        for _ in 0..k {
            let j = (prefix_index % per_segment) as usize;
            prefix_index /= per_segment;
            let a = self.controls[j % m as usize];
            let d = self.durations[j / m as usize];
            segments.push((d, a));
        }
        let tail = if tail_index < m {
            Tail::Constant(self.controls[tail_index as usize])
        } else {
            tail_index -= m;
            let map = self
                .modes
                .iter()
                .map(|&mode| {
                    let a = self.controls[(tail_index % m) as usize];
                    tail_index /= m;
                    (mode, a)
                })
                .collect();
            Tail::PerMode(map)
        };
        Policy { segments, tail }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_cost_any_policy() {
        let s: Scenario<f64> =
            Scenario::new(&[(1, "a", "3"), (-1, "a", "3")], &[-1.0, 0.0, 1.0], 1.0, 5.0, 0.01).unwrap();
        let c = ThermostatConfig::twofold(0.1);
        let horizon = 30.0;
        let budget = RolloutBudget::new(2, &[0.1, 0.5]);
        let (_, cost) = best_rollout(&s, &c, RelayState::new(1, 0.0), horizon, 0.01, &budget).unwrap();
        assert!((cost - 3.0).abs() <= 3.0 * (-horizon).exp() + 1e-12);
    }

    #[test]
    fn switches_to_cheap_mode_then_rests() {
        let s: Scenario<f64> =
            Scenario::new(&[(1, "a", "2"), (-1, "a", "1")], &[-1.0, 0.0, 1.0], 1.0, 5.0, 0.01).unwrap();
        for eps in [0.1, 0.05] {
            let c = ThermostatConfig::twofold(eps);
            let (record, cost) =
                best_rollout(&s, &c, RelayState::new(1, 0.0), 30.0, 0.001, &RolloutBudget::tails_only()).unwrap();
            // one step of cost 2 over time eps, then 1 forever
            let exact = 2.0 * (1.0 - (-eps).exp()) + (-eps).exp();
            assert!((cost - exact).abs() < 1e-9, "{cost} vs {exact}");
            assert_eq!(record.switch_events.len(), 1);
            assert_eq!(record.final_state.mode, -1);
        }
    }

    #[test]
    fn enumeration_is_exhaustive_and_distinct() {
        let s: Scenario<f64> =
            Scenario::new(&[(1, "a", "1"), (-1, "a", "1")], &[-1.0, 0.0, 1.0], 1.0, 5.0, 0.01).unwrap();
        let budget = RolloutBudget::new(3, &[0.1, 0.2]);
        let total = budget.combinations(&s);
        assert_eq!(total, 12 * (1 + 6 + 36));
        let e = Enumerator::new(&s, &budget);
        let policies: Vec<_> = (0..total as u64).map(|i| format!("{:?}", e.policy(i))).collect();
        let mut unique = policies.clone();
        unique.sort();
        unique.dedup();
        assert_eq!(unique.len(), policies.len());
    }

    #[test]
    fn budget_guard() {
        let s: Scenario<f64> =
            Scenario::new(&[(1, "a", "1"), (-1, "a", "1")], &[-1.0, -0.5, 0.0, 0.5, 1.0], 1.0, 5.0, 0.01).unwrap();
        let c = ThermostatConfig::twofold(0.1);
        let mut budget = RolloutBudget::new(6, &[0.1, 0.2, 0.3, 0.4]);
        budget.cap = 1000;
        let err = best_rollout(&s, &c, RelayState::new(1, 0.0), 1.0, 0.1, &budget).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
        assert!(best_rollout(&s, &c, RelayState::new(1, 0.0), 1.0, 0.1, &RolloutBudget::new(7, &[0.1])).is_err());
    }
}
