//! Explicit integration of the thermostatic hybrid system with event detection.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::operator::RelayState;
use crate::error::{Error, Result};
use crate::model::{Scenario, ThermostatConfig};
use crate::scalar::Real;

/// What to do after the open-loop segments are exhausted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail<T> {
    Constant(T),
    /// One constant control per mode.
    PerMode(Vec<(i32, T)>),
}

/// Piecewise-constant control: open-loop `(duration, control)` segments
/// followed by a tail that runs until the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy<T> {
    pub segments: Vec<(T, T)>,
    pub tail: Tail<T>,
}

impl<T: Real> Policy<T> {
    pub fn constant(a: T) -> Self {
        Self { segments: Vec::new(), tail: Tail::Constant(a) }
    }

    pub fn per_mode(controls: &[(i32, T)]) -> Self {
        Self { segments: Vec::new(), tail: Tail::PerMode(controls.to_vec()) }
    }

    pub fn schedule(segments: &[(T, T)], tail: Tail<T>) -> Self {
        Self { segments: segments.to_vec(), tail }
    }

    pub fn control(&self, t: T, mode: i32) -> Result<T> {
        let mut end = T::zero();
        for &(d, a) in &self.segments {
            end = end + d;
            if t < end {
                return Ok(a);
            }
        }
        match &self.tail {
            Tail::Constant(a) => Ok(*a),
            Tail::PerMode(map) => map
                .iter()
                .find(|(m, _)| *m == mode)
                .map(|&(_, a)| a)
                .ok_or_else(|| Error::InvalidArgument(format!("policy has no control for mode {mode}"))),
        }
    }

    /// First segment boundary strictly after `t`.
    fn next_boundary(&self, t: T) -> Option<T> {
        let mut end = T::zero();
        for &(d, _) in &self.segments {
            end = end + d;
            if end > t {
                return Some(end);
            }
        }
        None
    }

    /// The same policy seen from time `offset` on.
    pub fn shifted(&self, offset: T) -> Self {
        let mut segments = Vec::new();
        let mut start = T::zero();
        for &(d, a) in &self.segments {
            let end = start + d;
            if end > offset {
                segments.push((end - start.max(offset), a));
            }
            start = end;
        }
        Self { segments, tail: self.tail.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample<T> {
    pub t: T,
    pub x: T,
    pub mode: i32,
    pub control: T,
    /// Discounted cost accumulated on `[0, t]`.
    pub running_cost: T,
    pub switched: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwitchEvent<T> {
    pub t: T,
    pub from_mode: i32,
    pub to_mode: i32,
    pub x_before: T,
    pub x_after: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord<T> {
    pub samples: Vec<Sample<T>>,
    pub switch_events: Vec<SwitchEvent<T>>,
    pub discounted_cost: T,
    pub horizon: T,
    pub final_state: RelayState<T>,
}

impl<T: Real> TrajectoryRecord<T> {
    /// CSV with columns `t,x,mode,control,running_cost,switch`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,mode,control,running_cost,switch\n");
        for s in &self.samples {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                s.t.to_f64_lossy(),
                s.x.to_f64_lossy(),
                s.mode,
                s.control.to_f64_lossy(),
                s.running_cost.to_f64_lossy(),
                u8::from(s.switched)
            );
        }
        out
    }
}

pub(crate) enum Observation<T> {
    Sample(Sample<T>),
    Switch(SwitchEvent<T>),
}

/// Integrates the hybrid system and reports samples and switches to `observe`.
///
/// State is advanced in the branch-local coordinate (positive away from the
/// junction), where both relays share one rule: moving inward through
/// `-eps_mode` switches to the next mode at `+eps_next`. For the twofold relay
/// this is the continuity of the signed position.
pub(crate) fn integrate<T: Real>(
    s: &Scenario<T>,
    config: &ThermostatConfig<T>,
    start: RelayState<T>,
    policy: &Policy<T>,
    horizon: T,
    dt: T,
    mut observe: impl FnMut(Observation<T>),
) -> Result<(RelayState<T>, T)> {
    if !(dt > T::zero()) {
        return Err(Error::InvalidArgument("time step must be positive".into()));
    }
    if !(horizon >= T::zero()) || !horizon.is_finite() {
        return Err(Error::InvalidArgument("horizon must be finite and nonnegative".into()));
    }
    config.validate(s)?;
    config.check_coherent(&start)?;
    let lambda = s.lambda();

    let mut index = s.index_of(start.mode)?;
    let mut pos = s.orientation(index) * start.position;
    let mut t = T::zero();
    let mut cost = T::zero();
    let mut k = 0usize;
    let native = |index: usize, pos: T| s.orientation(index) * pos;

    observe(Observation::Sample(Sample {
        t,
        x: start.position,
        mode: start.mode,
        control: policy.control(t, start.mode)?,
        running_cost: cost,
        switched: false,
    }));

    while t < horizon {
        let mode = s.branches()[index].id;
        let t_grid = (dt * T::from_usize_lossy(k + 1)).min(horizon);
        let t_end = match policy.next_boundary(t) {
            Some(b) if b < t_grid => b,
            _ => t_grid,
        };
        let a = policy.control(t, mode)?;
        let f = s.dynamics_at(index, pos, a)?;
        let l = s.cost_at(index, pos, a)?;
        let span = t_end - t;
        let moved = pos + span * f;
        let eps = config.thresholds[index];
        let weight = |tau: T| (-lambda * t).exp() * l * (T::one() - (-lambda * tau).exp()) / lambda;

        if f < T::zero() && moved <= -eps {
            let theta = ((-eps - pos) / (moved - pos)).max(T::zero()).min(T::one());
            let tau = theta * span;
            cost = cost + weight(tau);
            t = t + tau;
            let next = config.next_index(s, index);
            let event = SwitchEvent {
                t,
                from_mode: mode,
                to_mode: s.branches()[next].id,
                x_before: native(index, -eps),
                x_after: native(next, config.thresholds[next]),
            };
            index = next;
            pos = config.thresholds[next];
            observe(Observation::Switch(event));
            observe(Observation::Sample(Sample {
                t,
                x: event.x_after,
                mode: event.to_mode,
                control: policy.control(t, event.to_mode)?,
                running_cost: cost,
                switched: true,
            }));
            if t_end == t_grid && tau == span {
                k += 1;
            }
        } else {
            cost = cost + weight(span);
            pos = moved;
            t = t_end;
            if t_end == t_grid {
                k += 1;
                let mode = s.branches()[index].id;
                observe(Observation::Sample(Sample {
                    t,
                    x: native(index, pos),
                    mode,
                    control: policy.control(t, mode)?,
                    running_cost: cost,
                    switched: false,
                }));
            }
        }
        if !cost.is_finite() || !pos.is_finite() {
            return Err(Error::NonFinite {
                what: "trajectory".into(),
                x: pos.to_f64_lossy(),
                a: a.to_f64_lossy(),
            });
        }
    }

    let end = RelayState { mode: s.branches()[index].id, position: native(index, pos) };
    Ok((end, cost))
}

/// Simulates the hybrid system on `[0, horizon]` and records the trajectory.
pub fn simulate<T: Real>(
    s: &Scenario<T>,
    config: &ThermostatConfig<T>,
    start: RelayState<T>,
    policy: &Policy<T>,
    horizon: T,
    dt: T,
) -> Result<TrajectoryRecord<T>> {
    let mut samples = Vec::new();
    let mut switch_events = Vec::new();
    let (final_state, discounted_cost) = integrate(s, config, start, policy, horizon, dt, |o| match o {
        Observation::Sample(x) => samples.push(x),
        Observation::Switch(e) => switch_events.push(e),
    })?;
    Ok(TrajectoryRecord { samples, switch_events, discounted_cost, horizon, final_state })
}

/// Discounted cost only, without recording.
pub fn simulate_cost<T: Real>(
    s: &Scenario<T>,
    config: &ThermostatConfig<T>,
    start: RelayState<T>,
    policy: &Policy<T>,
    horizon: T,
    dt: T,
) -> Result<(RelayState<T>, T)> {
    integrate(s, config, start, policy, horizon, dt, |_| {})
}

/// `(sup l / lambda) e^{-lambda T}`: what a horizon-`T` truncation can miss.
pub fn truncation_tail<T: Real>(s: &Scenario<T>, horizon: T) -> T {
    s.value_bound() * (-s.lambda() * horizon).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn twofold(l_pos: &str, l_neg: &str) -> Scenario<f64> {
        Scenario::new(&[(1, "a", l_pos), (-1, "a", l_neg)], &[-1.0, 0.0, 1.0], 1.0, 5.0, 0.01).unwrap()
    }

    #[test]
    fn constant_integrand_geometric_tail() {
        let s: Scenario<f64> =
            Scenario::new(&[(1, "0", "3"), (-1, "0", "3")], &[-1.0, 0.0, 1.0], 2.0, 5.0, 0.01).unwrap();
        let c = ThermostatConfig::twofold(0.1);
        let horizon = 40.0 / 2.0;
        let r = simulate(&s, &c, RelayState::new(1, 0.3), &Policy::constant(0.0), horizon, 0.01).unwrap();
        let exact = 3.0 / 2.0;
        assert!((r.discounted_cost - exact).abs() <= (-40.0f64).exp() * exact + 1e-12);
        assert!(r.switch_events.is_empty());
        assert!(truncation_tail(&s, horizon) < 1e-16);
    }

    #[test]
    fn linear_motion_reaches_far_threshold_once() {
        let s = twofold("1", "1");
        let eps = 0.1;
        let c = ThermostatConfig::twofold(eps);
        let r = simulate(&s, &c, RelayState::new(1, eps), &Policy::constant(-1.0), 0.3, 0.001).unwrap();
        assert_eq!(r.switch_events.len(), 1);
        let e = r.switch_events[0];
        assert_relative_eq!(e.t, 2.0 * eps, epsilon = 1e-12);
        assert_eq!((e.from_mode, e.to_mode), (1, -1));
        assert_relative_eq!(e.x_before, -eps, epsilon = 1e-15);
        assert_relative_eq!(e.x_after, -eps, epsilon = 1e-15);
        assert!(r.samples.iter().any(|s| s.switched));
    }

    #[test]
    fn cyclic_switch_discontinuity() {
        let s: Scenario<f64> =
            Scenario::new(&[(1, "a", "1"), (2, "a", "1"), (3, "a", "1")], &[-1.0, 1.0], 1.0, 2.0, 0.01).unwrap();
        let c = ThermostatConfig::threefold([0.05, 0.1, 0.2]);
        let r = simulate(&s, &c, RelayState::new(1, 0.05), &Policy::constant(-1.0), 1.0, 0.01).unwrap();
        let modes: Vec<(i32, i32)> = r.switch_events.iter().map(|e| (e.from_mode, e.to_mode)).collect();
        assert_eq!(&modes[..4], &[(1, 2), (2, 3), (3, 1), (1, 2)]);
        for e in &r.switch_events {
            assert_relative_eq!(e.x_before, -c.threshold_of(e.from_mode).unwrap(), epsilon = 1e-12);
            assert_relative_eq!(e.x_after, c.threshold_of(e.to_mode).unwrap(), epsilon = 1e-12);
        }
        // 2 * (0.05 + 0.1 + 0.2) per cycle
        assert_relative_eq!(r.switch_events[3].t - r.switch_events[0].t, 0.7, epsilon = 1e-12);
    }

    #[test]
    fn segments_change_control_mid_step() {
        let s = twofold("1", "1");
        let c = ThermostatConfig::twofold(0.1);
        let p = Policy::schedule(&[(0.025, 1.0)], Tail::Constant(0.0));
        let r = simulate(&s, &c, RelayState::new(1, 0.0), &p, 1.0, 0.01).unwrap();
        assert_relative_eq!(r.final_state.position, 0.025, epsilon = 1e-12);
        assert_relative_eq!(r.discounted_cost, 1.0 - (-1.0f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn csv_has_header_and_switch_flags() {
        let s = twofold("2", "1");
        let c = ThermostatConfig::twofold(0.1);
        let r = simulate(&s, &c, RelayState::new(1, 0.1), &Policy::per_mode(&[(1, -1.0), (-1, 1.0)]), 1.0, 0.05)
            .unwrap();
        let csv = r.to_csv();
        assert!(csv.starts_with("t,x,mode,control,running_cost,switch\n"));
        assert_eq!(csv.lines().filter(|l| l.ends_with(",1")).count(), r.switch_events.len());
    }

    #[test]
    fn rejects_incoherent_start_and_bad_step() {
        let s = twofold("1", "1");
        let c = ThermostatConfig::twofold(0.1);
        assert!(simulate(&s, &c, RelayState::new(1, -0.5), &Policy::constant(0.0), 1.0, 0.1).is_err());
        assert!(simulate(&s, &c, RelayState::new(1, 0.0), &Policy::constant(0.0), 1.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn semigroup(k1 in 1usize..200, k2 in 1usize..200, x0 in -0.1f64..2.0, a1 in -1.0f64..1.0, a2 in -1.0f64..1.0) {
            let s = Scenario::new(&[(1, "a + 0.1*x", "2 + x"), (-1, "a", "1 + x*x")], &[-1.0, 1.0], 0.7, 5.0, 0.01).unwrap();
            let c = ThermostatConfig::twofold(0.1);
            let dt = 0.01;
            let p = Policy::per_mode(&[(1, a1), (-1, a2)]);
            let (t1, t2) = (k1 as f64 * dt, k2 as f64 * dt);
            let start = RelayState::new(1, x0);
            let whole = simulate(&s, &c, start, &p, t1 + t2, dt).unwrap();
            let first = simulate(&s, &c, start, &p, t1, dt).unwrap();
            let rest = simulate(&s, &c, first.final_state, &p.shifted(t1), t2, dt).unwrap();
            let joined = first.discounted_cost + (-0.7 * t1).exp() * rest.discounted_cost;
            prop_assert!((whole.discounted_cost - joined).abs() <= 1e-12 * whole.discounted_cost.abs().max(1.0));
            prop_assert_eq!(whole.final_state.mode, rest.final_state.mode);
            prop_assert!((whole.final_state.position - rest.final_state.position).abs() <= 1e-10);
        }

        #[test]
        fn cost_and_switch_count_bounds(a1 in -1.0f64..1.0, a2 in -1.0f64..1.0, eps in 0.01f64..0.3, horizon in 0.0f64..20.0) {
            let s = Scenario::new(&[(1, "a", "2"), (-1, "a", "1")], &[-1.0, 1.0], 1.0, 5.0, 0.01).unwrap();
            let c = ThermostatConfig::twofold(eps);
            let r = simulate(&s, &c, RelayState::new(1, 0.0), &Policy::per_mode(&[(1, a1), (-1, a2)]), horizon, 0.01).unwrap();
            prop_assert!(r.discounted_cost <= s.value_bound() + 1e-12);
            let bound = horizon * s.sup_speed() / (2.0 * eps) + 1.0;
            prop_assert!(r.switch_events.len() as f64 <= bound + 1e-9);
            for w in r.samples.windows(2) {
                prop_assert!(w[1].t >= w[0].t);
                prop_assert!(w[1].running_cost >= w[0].running_cost);
            }
        }
    }
}
