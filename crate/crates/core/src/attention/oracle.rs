//! Ground-truth attention: a Gaussian at the target's image location.

use serde::{Deserialize, Serialize};

use super::{check_response, AttentionError, AttentionRequest, Heatmap, HeatmapProvider, Normalization};
use crate::geometry::Vec3;
use crate::render::MultiChannelImage;
use crate::scalar::Real;

pub const DEFAULT_SIGMA_PX: f64 = 5.0;

/// Keeps the Gaussian peak strictly inside the pixel the target projects to,
/// so the argmax never drifts into a neighbour through rounding.
const CELL_MARGIN_PX: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleHeatmap {
    pub heatmap: Heatmap,
    /// False when the target was not seen and the map fell back to uniform.
    pub target_seen: bool,
}

/// Gaussian with standard deviation `sigma_px` centred on the projection of
/// `target`, normalized to unit mass. Out-of-frame targets give a uniform map.
pub fn oracle_heatmap<T: Real>(
    image: &MultiChannelImage<T>,
    target: Vec3<T>,
    sigma_px: f64,
) -> Result<OracleHeatmap, AttentionError> {
    check_sigma(sigma_px)?;
    let projector = image.pose.projector();
    let hit = projector
        .project(target)
        .and_then(|ip| projector.pixel(&ip).map(|px| (ip, px)));
    let Some((ip, (px, py))) = hit else {
        return Ok(unseen(image));
    };
    let cu = clamp_into_cell(ip.u.to_f64_lossy(), px);
    let cv = clamp_into_cell(ip.v.to_f64_lossy(), py);
    Ok(OracleHeatmap {
        heatmap: gaussian(image.width, image.height, cu, cv, sigma_px, (px, py)),
        target_seen: true,
    })
}

/// Gaussian centred on the mean pixel position of the rendered pixels whose
/// surface point lies within `target_radius` of `target`. Unlike
/// [`oracle_heatmap`] this respects occlusion: a hidden target gives a
/// uniform map.
pub fn visible_centroid_heatmap<T: Real>(
    image: &MultiChannelImage<T>,
    target: Vec3<T>,
    target_radius: T,
    sigma_px: f64,
) -> Result<OracleHeatmap, AttentionError> {
    check_sigma(sigma_px)?;
    let r2 = target_radius * target_radius;
    let (mut su, mut sv, mut n) = (0.0, 0.0, 0usize);
    for y in 0..image.height {
        for x in 0..image.width {
            if image.is_valid(x, y) && image.texel(x, y).world.distance_squared(target) <= r2 {
                su += x as f64 + 0.5;
                sv += y as f64 + 0.5;
                n += 1;
            }
        }
    }
    if n == 0 {
        return Ok(unseen(image));
    }
    let (cu, cv) = (su / n as f64, sv / n as f64);
    let cell = ((cu as usize).min(image.width - 1), (cv as usize).min(image.height - 1));
    Ok(OracleHeatmap {
        heatmap: gaussian(image.width, image.height, cu, cv, sigma_px, cell),
        target_seen: true,
    })
}

fn check_sigma(sigma_px: f64) -> Result<(), AttentionError> {
    if sigma_px.is_finite() && sigma_px > 0.0 {
        Ok(())
    } else {
        Err(AttentionError::Domain(format!(
            "oracle sigma must be positive, got {sigma_px}"
        )))
    }
}

fn unseen<T>(image: &MultiChannelImage<T>) -> OracleHeatmap {
    OracleHeatmap {
        heatmap: Heatmap::uniform(image.width, image.height),
        target_seen: false,
    }
}

fn clamp_into_cell(c: f64, cell: usize) -> f64 {
    let lo = cell as f64 + CELL_MARGIN_PX;
    let hi = cell as f64 + 1.0 - CELL_MARGIN_PX;
    c.clamp(lo, hi)
}

fn gaussian(width: usize, height: usize, cu: f64, cv: f64, sigma: f64, cell: (usize, usize)) -> Heatmap {
    let inv = 1.0 / (2.0 * sigma * sigma);
    let mut raw = Vec::with_capacity(width * height);
    for y in 0..height {
        let dy = y as f64 + 0.5 - cv;
        for x in 0..width {
            let dx = x as f64 + 0.5 - cu;
            raw.push((-(dx * dx + dy * dy) * inv).exp());
        }
    }
    let mass: f64 = raw.iter().sum();
    let values = if mass > 0.0 {
        raw.iter().map(|v| (v / mass) as f32).collect()
    } else {
        // Tiny sigma underflows everywhere; the limit is a delta.
        let mut v = vec![0.0f32; width * height];
        v[cell.1 * width + cell.0] = 1.0;
        v
    };
    Heatmap {
        width,
        height,
        values,
        normalization: Normalization::SumToOne,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleMode {
    /// Peak at the target's projection, ignoring occlusion.
    Projected,
    /// Peak at the centroid of the target's visible pixels.
    VisibleCentroid { target_radius: f64 },
}

/// Provider answering every image with an oracle map for a known target.
#[derive(Clone, Debug)]
pub struct OracleProvider<T> {
    pub target: Vec3<T>,
    pub sigma_px: f64,
    pub mode: OracleMode,
}

impl<T: Real> OracleProvider<T> {
    pub fn new(target: Vec3<T>) -> Self {
        Self {
            target,
            sigma_px: DEFAULT_SIGMA_PX,
            mode: OracleMode::Projected,
        }
    }

    pub fn with_mode(mut self, mode: OracleMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_sigma(mut self, sigma_px: f64) -> Self {
        self.sigma_px = sigma_px;
        self
    }

    pub fn oracle(&self, image: &MultiChannelImage<T>) -> Result<OracleHeatmap, AttentionError> {
        match self.mode {
            OracleMode::Projected => oracle_heatmap(image, self.target, self.sigma_px),
            OracleMode::VisibleCentroid { target_radius } => {
                visible_centroid_heatmap(image, self.target, T::lit(target_radius), self.sigma_px)
            }
        }
    }
}

impl<T: Real> HeatmapProvider<T> for OracleProvider<T> {
    fn heatmaps(&self, request: &AttentionRequest<'_, T>) -> Result<Vec<Heatmap>, AttentionError> {
        request.validate()?;
        let maps = request
            .images
            .iter()
            .map(|im| self.oracle(im).map(|o| o.heatmap))
            .collect::<Result<Vec<_>, _>>()?;
        check_response(request, maps)
    }

    fn name(&self) -> &str {
        "oracle"
    }
}
