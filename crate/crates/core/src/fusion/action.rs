//! Discretized rotation codec and the final action record.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Vec3};
use crate::scalar::Real;

pub const ROTATION_BINS: u8 = 72;
pub const BIN_WIDTH_DEG: f64 = 360.0 / ROTATION_BINS as f64;

/// Bin of each angle (degrees, any real value, reduced modulo 360).
/// Angles are intrinsic z-y-x Euler angles.
pub fn encode_rotation<T: Real>(euler_deg: [T; 3]) -> Result<[u8; 3]> {
    let mut bins = [0u8; 3];
    for (b, &a) in bins.iter_mut().zip(&euler_deg) {
        let a = a.to_f64_lossy();
        if !a.is_finite() {
            return Err(Error::Domain(format!("non-finite Euler angle {a}")));
        }
        let reduced = a.rem_euclid(360.0);
        *b = ((reduced / BIN_WIDTH_DEG).floor() as i64).clamp(0, ROTATION_BINS as i64 - 1) as u8;
    }
    Ok(bins)
}

/// Bin centres in degrees.
pub fn decode_rotation(bins: [u8; 3]) -> Result<[f64; 3]> {
    if let Some(b) = bins.iter().find(|&&b| b >= ROTATION_BINS) {
        return Err(Error::Domain(format!("rotation bin {b} outside [0, {ROTATION_BINS})")));
    }
    Ok(bins.map(|b| (b as f64 + 0.5) * BIN_WIDTH_DEG))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", into = "ActionRecord<T>", try_from = "ActionRecord<T>")]
pub struct ActionPrediction<T: Real> {
    pub translation: Vec3<T>,
    pub rotation_bins: [u8; 3],
    pub gripper: u8,
    pub collision: u8,
}

impl<T: Real> ActionPrediction<T> {
    pub fn rotation_deg(&self) -> [f64; 3] {
        decode_rotation(self.rotation_bins).expect("bins validated at construction")
    }
}

/// Serialized form; `rotation_deg` is informational and recomputed on read.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct ActionRecord<T> {
    translation: Vec3<T>,
    rotation_bins: [u8; 3],
    rotation_deg: [f64; 3],
    gripper: u8,
    collision: u8,
}

impl<T: Real> From<ActionPrediction<T>> for ActionRecord<T> {
    fn from(a: ActionPrediction<T>) -> Self {
        Self {
            translation: a.translation,
            rotation_bins: a.rotation_bins,
            rotation_deg: a.rotation_deg(),
            gripper: a.gripper,
            collision: a.collision,
        }
    }
}

impl<T: Real> TryFrom<ActionRecord<T>> for ActionPrediction<T> {
    type Error = Error;

    fn try_from(r: ActionRecord<T>) -> Result<Self> {
        validate_fields(r.rotation_bins, r.gripper, r.collision)?;
        Ok(Self {
            translation: r.translation,
            rotation_bins: r.rotation_bins,
            gripper: r.gripper,
            collision: r.collision,
        })
    }
}

fn validate_fields(bins: [u8; 3], gripper: u8, collision: u8) -> Result<()> {
    decode_rotation(bins)?;
    if gripper > 1 || collision > 1 {
        return Err(Error::Domain(format!(
            "gripper {gripper} and collision {collision} must be 0 or 1"
        )));
    }
    Ok(())
}

/// Validates and builds the action. A translation outside the workspace is
/// rejected rather than clamped.
pub fn assemble_action<T: Real>(
    translation: Vec3<T>,
    rotation_bins: [u8; 3],
    gripper: u8,
    collision: u8,
    workspace: &Aabb<T>,
) -> Result<ActionPrediction<T>> {
    validate_fields(rotation_bins, gripper, collision)?;
    if !translation.is_finite() || !workspace.contains(translation) {
        return Err(Error::Contract(format!(
            "translation {:?} outside workspace {:?}..{:?}",
            translation.to_array(),
            workspace.min.to_array(),
            workspace.max.to_array()
        )));
    }
    Ok(ActionPrediction {
        translation,
        rotation_bins,
        gripper,
        collision,
    })
}
