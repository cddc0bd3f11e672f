use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::Sampling;
use crate::geometry::{Aabb, Vec3};
use crate::render::{RenderOptions, DEFAULT_IMAGE_SIZE};
use crate::scalar::Real;
use crate::scene::PointCloud;
use crate::scoring::{ScoringParams, ScoringWeights};

/// How the fine-stage views are chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ViewStrategy {
    /// Top-K by composite score.
    #[default]
    Active,
    /// K candidates drawn uniformly without replacement.
    Random { seed: u64 },
    /// Coarse orthographic views only; no fine stage.
    Fixed,
}

/// How the zoom render enters the fine fusion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZoomMode {
    /// Fused as an extra view next to the K selected ones.
    #[default]
    Additive,
    /// Takes the place of the rank-1 view it was zoomed from.
    Replace,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "T: Real")]
pub struct PipelineConfig<T> {
    /// Fixed workspace; `None` uses the cloud bounds grown by
    /// `workspace_padding` on every side.
    pub workspace: Option<Aabb<T>>,
    pub workspace_padding: T,
    pub coarse_image_size: (u32, u32),
    pub fine_image_size: (u32, u32),
    /// Voxels per axis of the coarse grid.
    pub grid_resolution: usize,
    /// Voxels per axis of the fine grid, rounded up to odd so the coarse
    /// estimate is a voxel centre.
    pub fine_grid_resolution: usize,
    /// Half side of the fine grid; `None` uses half the zoom coverage.
    pub fine_half_extent: Option<T>,
    pub subdivision_level: u32,
    /// Candidate sphere radius as a multiple of the cloud's bounding-sphere
    /// radius.
    pub candidate_radius_scale: T,
    /// Drop candidates below this elevation (radians) around the focus.
    pub min_elevation: Option<T>,
    pub up_hint: Vec3<T>,
    pub scoring: ScoringParams<T>,
    pub weights: ScoringWeights<T>,
    /// Number of selected views K.
    pub views: usize,
    pub zoom_z: T,
    /// Horizontal field of view of the fine-stage cameras, radians;
    /// 40 degrees by default.
    pub fov_alpha: T,
    pub zoom_mode: ZoomMode,
    pub sampling: Sampling,
    pub render: RenderOptions,
    pub strategy: ViewStrategy,
    pub instruction: String,
}

impl<T: Real> Default for PipelineConfig<T> {
    fn default() -> Self {
        Self {
            workspace: None,
            workspace_padding: T::lit(0.02),
            coarse_image_size: DEFAULT_IMAGE_SIZE,
            fine_image_size: DEFAULT_IMAGE_SIZE,
            grid_resolution: 100,
            fine_grid_resolution: 100,
            fine_half_extent: None,
            subdivision_level: 1,
            candidate_radius_scale: T::lit(1.5),
            min_elevation: None,
            up_hint: Vec3::unit_z(),
            scoring: ScoringParams::default(),
            weights: ScoringWeights::default(),
            views: 3,
            zoom_z: T::lit(4.0),
            fov_alpha: T::lit(40f64.to_radians()),
            zoom_mode: ZoomMode::Additive,
            sampling: Sampling::Bilinear,
            render: RenderOptions::default(),
            strategy: ViewStrategy::Active,
            instruction: String::new(),
        }
    }
}

impl<T: Real> PipelineConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Domain(msg));
        if self.views == 0 {
            return bad("views (K) must be at least 1".into());
        }
        if !(self.zoom_z >= T::one()) || !self.zoom_z.is_finite() {
            return bad(format!("zoom_z = {} must be >= 1", self.zoom_z));
        }
        if !(self.fov_alpha > T::zero() && self.fov_alpha < T::PI()) {
            return bad(format!("fov_alpha = {} must lie in (0, pi)", self.fov_alpha));
        }
        if self.grid_resolution == 0 || self.fine_grid_resolution == 0 {
            return bad("grid resolutions must be positive".into());
        }
        for (name, (w, h)) in [("coarse", self.coarse_image_size), ("fine", self.fine_image_size)] {
            if w == 0 || h == 0 {
                return bad(format!("{name} image size must be positive"));
            }
        }
        if !(self.candidate_radius_scale > T::zero()) || !self.candidate_radius_scale.is_finite() {
            return bad(format!(
                "candidate_radius_scale = {} must be positive",
                self.candidate_radius_scale
            ));
        }
        if !(self.workspace_padding >= T::zero()) || !self.workspace_padding.is_finite() {
            return bad(format!("workspace_padding = {} must be >= 0", self.workspace_padding));
        }
        if let Some(h) = self.fine_half_extent {
            if !(h > T::zero()) || !h.is_finite() {
                return bad(format!("fine_half_extent = {h} must be positive"));
            }
        }
        if self.up_hint.try_normalize().is_none() {
            return bad("up_hint must be a nonzero vector".into());
        }
        self.weights.validate()?;
        self.scoring.visibility.validate()?;
        Ok(())
    }

    pub fn workspace_for(&self, cloud: &PointCloud<T>) -> Result<Aabb<T>> {
        match self.workspace {
            Some(ws) => Ok(ws),
            None => {
                let b = cloud.bounds()?;
                let pad = Vec3::splat(self.workspace_padding);
                Aabb::new(b.min - pad, b.max + pad)
            }
        }
    }
}

/// Parts of the action the geometry does not decide: rotation, gripper and
/// collision come from the scenario.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "T: Real")]
pub struct ActionHints<T> {
    pub euler_deg: [T; 3],
    pub gripper: u8,
    pub collision: u8,
}

impl<T: Real> Default for ActionHints<T> {
    fn default() -> Self {
        Self {
            euler_deg: [T::zero(); 3],
            gripper: 0,
            collision: 0,
        }
    }
}
