//! The delayed relay (thermostat) switching rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ThermostatConfig;
use crate::scalar::Real;

/// Discrete mode and continuous position of the hybrid system.
///
/// The position is in native coordinates: the signed axis for the twofold
/// relay, the branch coordinate on `[-eps_mode, X]` for the cyclic relay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelayState<T> {
    pub mode: i32,
    pub position: T,
}

impl<T: Real> RelayState<T> {
    pub fn new(mode: i32, position: T) -> Self {
        Self { mode, position }
    }
}

impl<T: Real> ThermostatConfig<T> {
    pub(crate) fn is_twofold(&self) -> bool {
        self.order.len() == 2
    }

    /// Threshold attached to branch `id`.
    pub fn threshold_of(&self, id: i32) -> Result<T> {
        let mut ids = self.order.clone();
        ids.sort_unstable();
        ids.iter()
            .position(|&i| i == id)
            .and_then(|k| self.thresholds.get(k).copied())
            .ok_or_else(|| Error::InvalidArgument(format!("no threshold for branch {id}")))
    }

    /// Successor of `id` in the switching cycle.
    pub fn next_mode(&self, id: i32) -> Result<i32> {
        let pos = self
            .order
            .iter()
            .position(|&o| o == id)
            .ok_or_else(|| Error::InvalidArgument(format!("mode {id} not in switching order")))?;
        Ok(self.order[(pos + 1) % self.order.len()])
    }

    /// Checks that `state` is admissible for this relay.
    pub fn check_coherent(&self, state: &RelayState<T>) -> Result<()> {
        let incoherent = || Error::IncoherentState { mode: state.mode, x: state.position.to_f64_lossy() };
        let eps = self.threshold_of(state.mode).map_err(|_| incoherent())?;
        let x = state.position;
        let ok = if self.is_twofold() {
            match state.mode {
                1 => x >= -eps,
                -1 => x <= eps,
                _ => false,
            }
        } else {
            x >= -eps
        };
        if ok && x.is_finite() {
            Ok(())
        } else {
            Err(incoherent())
        }
    }
}

/// Applies the switching rule to a new input position.
///
/// Twofold: mode `1` drops to `-1` once the input is below `-eps`, mode `-1`
/// rises to `1` once it is above `eps`; the position is unchanged. Cyclic:
/// reaching `-eps_mode` switches to the next mode and moves the position to
/// `+eps_next`.
pub fn relay_step<T: Real>(
    state: RelayState<T>,
    new_position: T,
    config: &ThermostatConfig<T>,
) -> Result<RelayState<T>> {
    config.check_coherent(&state)?;
    let eps = config.threshold_of(state.mode)?;
    if config.is_twofold() {
        let mode = match state.mode {
            1 if new_position < -eps => -1,
            -1 if new_position > eps => 1,
            m => m,
        };
        Ok(RelayState { mode, position: new_position })
    } else if new_position <= -eps {
        let next = config.next_mode(state.mode)?;
        Ok(RelayState { mode: next, position: config.threshold_of(next)? })
    } else {
        Ok(RelayState { mode: state.mode, position: new_position })
    }
}
