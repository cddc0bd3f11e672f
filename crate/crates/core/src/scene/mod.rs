//! Point-cloud data model, ingestion, bounds and the exact nearest-neighbor
//! index used by visibility ray marching.

mod io;
mod kdtree;

use serde::{Deserialize, Serialize};

pub use io::{load_cloud, write_cloud, CloudFormat};
pub use kdtree::{linear_nearest, Nearest, SpatialIndex};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Vec3};
use crate::scalar::Real;

/// Default color assigned to points loaded without color.
pub const DEFAULT_GRAY: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Point<T> {
    pub position: Vec3<T>,
    /// Linear RGB in `[0, 1]`.
    pub color: [T; 3],
}

impl<T: Real> Point<T> {
    pub fn new(position: Vec3<T>, color: [T; 3]) -> Self {
        Self { position, color }
    }

    pub fn gray(position: Vec3<T>) -> Self {
        Self::new(position, [T::lit(DEFAULT_GRAY); 3])
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PointCloud<T> {
    pub points: Vec<Point<T>>,
    pub frame_id: String,
}

impl<T: Real> PointCloud<T> {
    pub fn new(points: Vec<Point<T>>) -> Self {
        Self {
            points,
            frame_id: "world".to_string(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn positions(&self) -> impl ExactSizeIterator<Item = Vec3<T>> + '_ {
        self.points.iter().map(|p| p.position)
    }

    /// Tight componentwise bounds over all positions.
    pub fn bounds(&self) -> Result<Aabb<T>> {
        bounds(self)
    }

    /// Keeps only the points inside `region`, preserving order.
    pub fn cropped(&self, region: &Aabb<T>) -> Self {
        Self {
            points: self
                .points
                .iter()
                .filter(|p| region.contains(p.position))
                .copied()
                .collect(),
            frame_id: self.frame_id.clone(),
        }
    }

    pub fn cast<U: Real>(&self) -> PointCloud<U> {
        PointCloud {
            points: self
                .points
                .iter()
                .map(|p| Point {
                    position: p.position.cast(),
                    color: p.color.map(|c| U::lit(c.to_f64_lossy())),
                })
                .collect(),
            frame_id: self.frame_id.clone(),
        }
    }
}

pub fn bounds<T: Real>(cloud: &PointCloud<T>) -> Result<Aabb<T>> {
    let mut it = cloud.positions();
    let first = it.next().ok_or(Error::EmptyInput("bounds of an empty cloud"))?;
    let (min, max) = it.fold((first, first), |(lo, hi), p| (lo.component_min(p), hi.component_max(p)));
    Ok(Aabb { min, max })
}
