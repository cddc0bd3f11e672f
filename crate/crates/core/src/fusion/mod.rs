//! Back-projection of per-view heatmaps into a voxel score volume, and
//! decoding of the action from it.

mod action;
mod upsample;

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use action::{assemble_action, decode_rotation, encode_rotation, ActionPrediction, BIN_WIDTH_DEG, ROTATION_BINS};
pub use upsample::{convex_upsample, ConvexWeights, CENTER_SLOT};

use crate::attention::Heatmap;
use crate::error::{Error, Result};
use crate::geometry::{Aabb, Vec3};
use crate::scalar::Real;
use crate::viewsphere::CameraPose;

/// Largest voxel count a volume may hold.
pub const MAX_VOXELS: usize = 1 << 28;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    #[default]
    Bilinear,
    Nearest,
}

/// Scores over a regular grid; voxel `(i, j, k)` has linear index
/// `i + nx * (j + ny * k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreVolume<T> {
    pub workspace: Aabb<T>,
    pub resolution: [usize; 3],
    pub scores: Vec<T>,
    /// Weights of the views accumulated so far, in order.
    pub view_weights: Vec<T>,
}

impl<T: Real> ScoreVolume<T> {
    pub fn new(workspace: Aabb<T>, resolution: [usize; 3]) -> Result<Self> {
        if resolution.contains(&0) {
            return Err(Error::Domain(format!("resolution {resolution:?} has a zero axis")));
        }
        let e = workspace.extent();
        if !(e.x > T::zero() && e.y > T::zero() && e.z > T::zero()) {
            return Err(Error::Degenerate(format!(
                "workspace extent {:?} is not positive",
                e.to_array()
            )));
        }
        let n = resolution
            .iter()
            .try_fold(1usize, |a, &r| a.checked_mul(r))
            .filter(|&n| n <= MAX_VOXELS)
            .ok_or_else(|| Error::Capacity(format!("{resolution:?} exceeds {MAX_VOXELS} voxels")))?;
        Ok(Self {
            workspace,
            resolution,
            scores: vec![T::zero(); n],
            view_weights: Vec::new(),
        })
    }

    pub fn cubic(workspace: Aabb<T>, n: usize) -> Result<Self> {
        Self::new(workspace, [n; 3])
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn voxel_size(&self) -> Vec3<T> {
        let e = self.workspace.extent();
        let [nx, ny, nz] = self.resolution.map(T::from_usize_lossy);
        Vec3::new(e.x / nx, e.y / ny, e.z / nz)
    }

    pub fn linear_index(&self, [i, j, k]: [usize; 3]) -> usize {
        let [nx, ny, _] = self.resolution;
        i + nx * (j + ny * k)
    }

    pub fn voxel_of(&self, index: usize) -> [usize; 3] {
        let [nx, ny, _] = self.resolution;
        [index % nx, (index / nx) % ny, index / (nx * ny)]
    }

    pub fn voxel_center(&self, [i, j, k]: [usize; 3]) -> Vec3<T> {
        let d = self.voxel_size();
        let half = T::lit(0.5);
        let min = self.workspace.min;
        Vec3::new(
            min.x + (T::from_usize_lossy(i) + half) * d.x,
            min.y + (T::from_usize_lossy(j) + half) * d.y,
            min.z + (T::from_usize_lossy(k) + half) * d.z,
        )
    }

    /// Voxel containing `p`; the max faces belong to the last voxel.
    pub fn voxel_containing(&self, p: Vec3<T>) -> Option<[usize; 3]> {
        if !self.workspace.contains(p) {
            return None;
        }
        let d = self.voxel_size();
        let rel = p - self.workspace.min;
        let mut out = [0; 3];
        for a in 0..3 {
            let c = (rel[a] / d[a]).floor().to_usize().unwrap_or(0);
            out[a] = c.min(self.resolution[a] - 1);
        }
        Some(out)
    }

    /// Adds `weight * h(pi(g))` at every voxel centre `g`. Centres projecting
    /// outside the image (or behind a pinhole) contribute nothing.
    pub fn accumulate(&mut self, pose: &CameraPose<T>, heatmap: &Heatmap, weight: T, sampling: Sampling) -> Result<()> {
        if (heatmap.width, heatmap.height) != (pose.width(), pose.height()) {
            return Err(Error::Contract(format!(
                "heatmap is {}x{}, view renders {}x{}",
                heatmap.width,
                heatmap.height,
                pose.width(),
                pose.height()
            )));
        }
        if !(weight >= T::zero()) || !weight.is_finite() {
            return Err(Error::Domain(format!("view weight {weight} must be finite and >= 0")));
        }
        self.view_weights.push(weight);
        if weight == T::zero() {
            return Ok(());
        }
        let projector = pose.projector();
        let [nx, ny, _] = self.resolution;
        let d = self.voxel_size();
        // Camera coordinates are affine in the voxel index; each voxel is
        // evaluated from the origin, not accumulated, so there is no drift.
        let origin = projector.to_camera(self.voxel_center([0, 0, 0]));
        let step = [
            projector.rotate(Vec3::new(d.x, T::zero(), T::zero())),
            projector.rotate(Vec3::new(T::zero(), d.y, T::zero())),
            projector.rotate(Vec3::new(T::zero(), T::zero(), d.z)),
        ];
        let index = |n: usize| T::from_usize_lossy(n);
        self.scores.par_chunks_mut(nx * ny).enumerate().for_each(|(k, slice)| {
            let plane = origin + step[2] * index(k);
            for j in 0..ny {
                let row = plane + step[1] * index(j);
                for i in 0..nx {
                    let Some(ip) = projector.project_camera(row + step[0] * index(i)) else {
                        continue;
                    };
                    let (u, v) = (ip.u.to_f64_lossy(), ip.v.to_f64_lossy());
                    let s = match sampling {
                        Sampling::Bilinear => heatmap.sample_bilinear(u, v),
                        Sampling::Nearest => heatmap.sample_nearest(u, v),
                    };
                    if let Some(s) = s {
                        slice[i + nx * j] += weight * T::lit(s);
                    }
                }
            }
        });
        Ok(())
    }

    /// Linear index of the best voxel, lowest index on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, &s) in self.scores.iter().enumerate() {
            if s > self.scores[best] {
                best = k;
            }
        }
        best
    }

    /// Centre of the best-scoring voxel.
    pub fn decode_translation(&self) -> Vec3<T> {
        self.voxel_center(self.voxel_of(self.argmax()))
    }

    pub fn max_score(&self) -> T {
        self.scores[self.argmax()]
    }

    /// Writes `<stem>.json` and `<stem>.f32` (x-fastest little-endian f32).
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        let header = VolumeHeader {
            workspace: self.workspace.cast(),
            resolution: self.resolution,
            dtype: "f32le".into(),
            order: "x-fastest".into(),
        };
        fs::write(dir.join(format!("{stem}.json")), serde_json::to_vec_pretty(&header)?)?;
        fs::write(
            dir.join(format!("{stem}.f32")),
            crate::render::encode_f32le(&self.scores),
        )?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeHeader {
    pub workspace: Aabb<f64>,
    pub resolution: [usize; 3],
    pub dtype: String,
    pub order: String,
}

/// Fuses views into a fresh volume. `weights` defaults to uniform `1/|views|`.
pub fn fuse<T: Real>(
    workspace: Aabb<T>,
    resolution: [usize; 3],
    views: &[(&CameraPose<T>, &Heatmap)],
    weights: Option<&[T]>,
    sampling: Sampling,
) -> Result<ScoreVolume<T>> {
    if views.is_empty() {
        return Err(Error::EmptyInput("fusing zero views"));
    }
    if let Some(w) = weights {
        if w.len() != views.len() {
            return Err(Error::Contract(format!(
                "{} weights for {} views",
                w.len(),
                views.len()
            )));
        }
    }
    let uniform = T::one() / T::from_usize_lossy(views.len());
    let mut vol = ScoreVolume::new(workspace, resolution)?;
    for (v, (pose, heatmap)) in views.iter().enumerate() {
        let w = weights.map_or(uniform, |w| w[v]);
        vol.accumulate(pose, heatmap, w, sampling)?;
    }
    Ok(vol)
}
