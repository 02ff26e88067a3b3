//! Closed-form value of a relay cycle with frozen junction data.

use super::combos::FeasibleCombo;
use crate::error::{Error, Result};
use crate::model::{Scenario, ThermostatConfig};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct CycleMode<T> {
    pub id: i32,
    pub control: T,
    /// Speed towards the junction, `|f_i(0, a_i)| > 0`.
    pub speed: T,
    pub cost: T,
    pub threshold: T,
    /// `+1`, or `-1` for the twofold branch `-1` (native coordinate `-s`).
    pub orientation: T,
    /// Value on entering the mode, i.e. at local coordinate `+eps_i`.
    pub entry_value: T,
}

/// Value of the policy that holds one constant control per mode, with
/// dynamics and costs frozen at the junction, so that every mode is crossed
/// from `+eps_i` to `-eps_i` forever.
///
/// In branch-local coordinates, with `tau = (s + eps_i) / |f_i|`,
/// `V(s, i) = l_i / lambda (1 - e^{-lambda tau}) + e^{-lambda tau} E_next`,
/// where the entry values `E` solve the cyclic linear system obtained at
/// `s = eps_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleField<T> {
    pub lambda: T,
    pub modes: Vec<CycleMode<T>>,
    next: Vec<usize>,
}

pub fn cycle_value<T: Real>(
    s: &Scenario<T>,
    config: &ThermostatConfig<T>,
    controls: &[(i32, T)],
) -> Result<CycleField<T>> {
    config.validate(s)?;
    let lambda = s.lambda();
    let n = s.num_branches();
    let mut modes = Vec::with_capacity(n);
    for (index, b) in s.branches().iter().enumerate() {
        let a = controls
            .iter()
            .find(|(id, _)| *id == b.id)
            .map(|&(_, a)| a)
            .ok_or_else(|| Error::InvalidArgument(format!("no control given for mode {}", b.id)))?;
        let f = s.dynamics_at(index, T::zero(), a)?;
        if !(f < T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "mode {} does not move towards its threshold (zero or outward dynamics)",
                b.id
            )));
        }
        modes.push(CycleMode {
            id: b.id,
            control: a,
            speed: -f,
            cost: s.cost_at(index, T::zero(), a)?,
            threshold: config.thresholds[index],
            orientation: s.orientation(index),
            entry_value: T::zero(),
        });
    }
    let next: Vec<usize> = (0..n).map(|i| config.next_index(s, i)).collect();

    // E_i = c_i + b_i E_next(i); going once around the cycle gives a scalar equation.
    let coef: Vec<(T, T)> = modes
        .iter()
        .map(|m| {
            let beta = (-lambda * (m.threshold + m.threshold) / m.speed).exp();
            (m.cost / lambda * (T::one() - beta), beta)
        })
        .collect();
    let (mut c, mut b) = (T::zero(), T::one());
    let mut k = 0;
    for _ in 0..n {
        c = c + b * coef[k].0;
        b = b * coef[k].1;
        k = next[k];
    }
    let mut e = c / (T::one() - b);
    // walk backwards around the cycle from E_0
    let mut order = vec![0usize];
    while order.len() < n {
        order.push(next[*order.last().expect("nonempty")]);
    }
    modes[0].entry_value = e;
    for &i in order.iter().skip(1).rev() {
        e = coef[i].0 + coef[i].1 * e;
        modes[i].entry_value = e;
    }
    Ok(CycleField { lambda, modes, next })
}

/// Cycle value for the controls of a junction combination.
pub fn cycle_from_combo<T: Real>(
    s: &Scenario<T>,
    config: &ThermostatConfig<T>,
    combo: &FeasibleCombo<T>,
) -> Result<CycleField<T>> {
    let controls: Vec<(i32, T)> = combo.branches.iter().copied().zip(combo.controls.iter().copied()).collect();
    cycle_value(s, config, &controls)
}

impl<T: Real> CycleField<T> {
    fn mode(&self, id: i32) -> Result<usize> {
        self.modes
            .iter()
            .position(|m| m.id == id)
            .ok_or_else(|| Error::InvalidArgument(format!("cycle has no mode {id}")))
    }

    fn local(&self, k: usize, s: T) -> (T, T) {
        let m = &self.modes[k];
        let decay = (-self.lambda * (s + m.threshold) / m.speed).exp();
        let e_next = self.modes[self.next[k]].entry_value;
        let value = m.cost / self.lambda * (T::one() - decay) + decay * e_next;
        let slope = decay * (m.cost - self.lambda * e_next) / m.speed;
        (value, slope)
    }

    /// `V(x, id)` at the native coordinate `x`, valid on the mode's band.
    pub fn value(&self, id: i32, x: T) -> Result<T> {
        let k = self.mode(id)?;
        Ok(self.local(k, self.modes[k].orientation * x).0)
    }

    /// `dV/dx (x, id)` in native coordinates.
    pub fn derivative(&self, id: i32, x: T) -> Result<T> {
        let k = self.mode(id)?;
        let m = &self.modes[k];
        Ok(m.orientation * self.local(k, m.orientation * x).1)
    }

    /// Time fractions of the modes along one cycle.
    pub fn weights(&self) -> Vec<T> {
        let times: Vec<T> = self.modes.iter().map(|m| m.threshold / m.speed).collect();
        let total: T = times.iter().copied().sum();
        times.into_iter().map(|t| t / total).collect()
    }

    /// Average running cost of the cycle.
    pub fn cycle_cost(&self) -> T {
        self.weights().iter().zip(&self.modes).map(|(w, m)| *w * m.cost).sum()
    }

    /// Native derivative of mode `id` as the thresholds shrink at fixed
    /// ratios: `(l_i - sum_j mu_j l_j) / |f_i|`, oriented. For the twofold
    /// relay both modes give `(l_1 - l_{-1}) / (f_{-1} - f_1)`.
    pub fn derivative_limit(&self, id: i32) -> Result<T> {
        let k = self.mode(id)?;
        let m = &self.modes[k];
        Ok(m.orientation * (m.cost - self.cycle_cost()) / m.speed)
    }

    /// `sup |V'(x, 1) - V'(x, -1)|` over `samples + 1` points of `[-eps, eps]`.
    pub fn twofold_derivative_gap(&self, samples: usize) -> Result<T> {
        let eps = self.modes[self.mode(1)?].threshold;
        let mut worst = T::zero();
        for k in 0..=samples {
            let x = -eps + (eps + eps) * T::from_usize_lossy(k) / T::from_usize_lossy(samples.max(1));
            worst = worst.max((self.derivative(1, x)? - self.derivative(-1, x)?).abs());
        }
        Ok(worst)
    }
}
