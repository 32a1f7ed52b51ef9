use serde::{Deserialize, Serialize};

use super::EnvError;
use crate::Vector3;

/// Discrete levels per axis and for the burn-time slot.
pub const LEVELS: usize = 5;
/// `5^4`: three thrust axes plus the intra-step burn slot.
pub const N_ACTIONS: usize = LEVELS * LEVELS * LEVELS * LEVELS;
/// Per-axis Δv multipliers of `dv_scale`.
pub const THRUST_VALUES: [f64; LEVELS] = [0.0, 0.01, 0.05, 0.1, -0.05];
/// `THRUST_VALUES` in hundredths, for exact fuel bookkeeping.
pub(crate) const THRUST_CENTI: [i64; LEVELS] = [0, 1, 5, 10, -5];

/// Index into the 625-element action space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Action(usize);

/// Base-5 digits of an action.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ActionDigits {
    pub dv: [usize; 3],
    pub time_slot: usize,
}

impl Action {
    /// The coasting action: no burn.
    pub const NOOP: Action = Action(0);

    pub fn new(index: usize) -> Result<Self, EnvError> {
        if index < N_ACTIONS {
            Ok(Self(index))
        } else {
            Err(EnvError::ActionOutOfRange(index))
        }
    }

    pub fn index(self) -> usize {
        self.0
    }

    pub fn digits(self) -> ActionDigits {
        let mut rest = self.0;
        let time_slot = rest % LEVELS;
        rest /= LEVELS;
        let dz = rest % LEVELS;
        rest /= LEVELS;
        let dy = rest % LEVELS;
        let dx = rest / LEVELS;
        ActionDigits {
            dv: [dx, dy, dz],
            time_slot,
        }
    }

    pub fn encode(digits: ActionDigits) -> Result<Self, EnvError> {
        let ActionDigits {
            dv: [dx, dy, dz],
            time_slot,
        } = digits;
        if [dx, dy, dz, time_slot].iter().any(|&d| d >= LEVELS) {
            return Err(EnvError::ActionOutOfRange(
                ((dx * LEVELS + dy) * LEVELS + dz) * LEVELS + time_slot,
            ));
        }
        Ok(Self(((dx * LEVELS + dy) * LEVELS + dz) * LEVELS + time_slot))
    }

    /// Δv in units of `dv_scale`, and the burn slot.
    pub fn decode(self) -> (Vector3, usize) {
        let d = self.digits();
        let dv = Vector3::new(THRUST_VALUES[d.dv[0]], THRUST_VALUES[d.dv[1]], THRUST_VALUES[d.dv[2]]);
        (dv, d.time_slot)
    }

    /// Fuel cost `|dv|_1 / dv_scale` in hundredths of a fuel unit.
    pub(crate) fn fuel_cost_centi(self) -> i64 {
        self.digits().dv.iter().map(|&d| THRUST_CENTI[d].abs()).sum()
    }

    pub fn all() -> impl Iterator<Item = Action> {
        (0..N_ACTIONS).map(Action)
    }
}

/// `decode_action`: Δv scaled by `dv_scale` (m/s) and the burn slot.
pub fn decode_action(index: usize, dv_scale: f64) -> Result<(Vector3, usize), EnvError> {
    let (dv, slot) = Action::new(index)?.decode();
    Ok((dv * dv_scale, slot))
}

impl TryFrom<usize> for Action {
    type Error = EnvError;

    fn try_from(value: usize) -> Result<Self, Self::Error> {
        Action::new(value)
    }
}

impl From<Action> for usize {
    fn from(a: Action) -> usize {
        a.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_zero_is_a_zero_burn() {
        let (dv, slot) = decode_action(0, 1.0).unwrap();
        assert_eq!(dv, Vector3::zero());
        assert_eq!(slot, 0);
        assert_eq!(Action::NOOP.fuel_cost_centi(), 0);
    }

    #[test]
    fn last_index_uses_negative_level() {
        let (dv, slot) = decode_action(624, 2.0).unwrap();
        assert_eq!(dv, Vector3::new(-0.1, -0.1, -0.1));
        assert_eq!(slot, 4);
    }

    #[test]
    fn codec_is_a_bijection() {
        let mut seen = vec![false; N_ACTIONS];
        for a in Action::all() {
            let d = a.digits();
            assert_eq!(Action::encode(d).unwrap(), a);
            let key = ((d.dv[0] * 5 + d.dv[1]) * 5 + d.dv[2]) * 5 + d.time_slot;
            assert!(!seen[key]);
            seen[key] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(matches!(Action::new(625), Err(EnvError::ActionOutOfRange(625))));
        assert!(Action::encode(ActionDigits {
            dv: [5, 0, 0],
            time_slot: 0
        })
        .is_err());
    }

    #[test]
    fn fuel_cost_is_l1_norm() {
        let a = Action::encode(ActionDigits {
            dv: [3, 4, 1],
            time_slot: 2,
        })
        .unwrap();
        assert_eq!(a.fuel_cost_centi(), 10 + 5 + 1);
        let (dv, _) = a.decode();
        assert!((dv.norm_l1() - 0.16).abs() < 1e-15);
    }
}
