//! Geodesic candidate viewpoints around a focus point, and look-at poses.

mod camera;
mod icosphere;

use serde::{Deserialize, Serialize};

pub use camera::{look_at, CameraBasis, CameraPose, ImagePoint, Projection, Projector, PARALLEL_TOLERANCE};
pub use icosphere::{paper_vertex_count, subdivide_icosahedron, GeodesicSphere, MAX_LEVEL};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::scalar::Real;

/// Camera positions `focus + radius * v` for every vertex `v` of the level-`level`
/// geodesic sphere, in subdivision order.
pub fn generate_candidates<T: Real>(focus: Vec3<T>, radius: T, level: u32) -> Result<Vec<Vec3<T>>> {
    if !(radius > T::zero() && radius.is_finite()) {
        return Err(Error::Domain(format!("candidate radius {radius} must be positive")));
    }
    if !focus.is_finite() {
        return Err(Error::Domain("focus point must be finite".into()));
    }
    let sphere = subdivide_icosahedron::<T>(level)?;
    Ok(sphere.vertices.into_iter().map(|v| focus + v * radius).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Candidate<T> {
    pub id: usize,
    pub position: Vec3<T>,
}

/// Serializable candidate set: `{focus, radius, level, candidates: [{id, position}]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CandidateSet<T> {
    pub focus: Vec3<T>,
    pub radius: T,
    pub level: u32,
    pub candidates: Vec<Candidate<T>>,
}

impl<T: Real> CandidateSet<T> {
    pub fn generate(focus: Vec3<T>, radius: T, level: u32) -> Result<Self> {
        let candidates = generate_candidates(focus, radius, level)?
            .into_iter()
            .enumerate()
            .map(|(id, position)| Candidate { id, position })
            .collect();
        Ok(Self {
            focus,
            radius,
            level,
            candidates,
        })
    }

    /// Drops candidates whose elevation above the focus, as an angle from the
    /// horizontal plane, is below `min_elevation` radians. Ids are kept.
    pub fn cull_below(&mut self, min_elevation: T) {
        let focus = self.focus;
        let radius = self.radius;
        self.candidates
            .retain(|c| ((c.position.z - focus.z) / radius).max(-T::one()).min(T::one()).asin() >= min_elevation);
    }

    pub fn positions(&self) -> Vec<Vec3<T>> {
        self.candidates.iter().map(|c| c.position).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_zero_unit_sphere() {
        let c = generate_candidates(Vec3::<f64>::zero(), 1.0, 0).unwrap();
        assert_eq!(c.len(), 12);
        assert!(c.iter().all(|p| (p.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn centroid_is_focus() {
        let f = Vec3::new(1.0, 2.0, 3.0);
        for level in 0..3 {
            let c = generate_candidates(f, 0.8, level).unwrap();
            let centroid = c.iter().fold(Vec3::zero(), |a, &p| a + p) / c.len() as f64;
            assert!((centroid - f).norm() < 1e-9);
            assert!(c.iter().all(|p| (p.distance(f) - 0.8).abs() < 1e-9));
        }
    }

    #[test]
    fn non_positive_radius_is_rejected() {
        assert!(matches!(
            generate_candidates(Vec3::<f64>::zero(), 0.0, 0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            generate_candidates(Vec3::<f64>::zero(), -1.0, 0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn equivariance_under_translation_and_scale() {
        let a = generate_candidates(Vec3::<f64>::zero(), 1.0, 1).unwrap();
        let shift = Vec3::new(-0.3, 4.0, 0.25);
        let b = generate_candidates(shift, 2.5, 1).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert!(((*q - shift) - *p * 2.5).norm() < 1e-12);
        }
    }

    #[test]
    fn candidate_set_json() {
        let set = CandidateSet::generate(Vec3::new(0.0f64, 0.0, 0.5), 1.5, 0).unwrap();
        let v = serde_json::to_value(&set).unwrap();
        assert_eq!(v["level"], 0);
        assert_eq!(v["candidates"].as_array().unwrap().len(), 12);
        assert_eq!(v["candidates"][3]["id"], 3);
        assert_eq!(v["focus"], serde_json::json!([0.0, 0.0, 0.5]));
    }

    #[test]
    fn elevation_culling() {
        let mut set = CandidateSet::generate(Vec3::<f64>::zero(), 1.0, 1).unwrap();
        set.cull_below(0.0);
        assert!(!set.candidates.is_empty());
        assert!(set.candidates.iter().all(|c| c.position.z >= 0.0));
        assert!(set.candidates.len() < 42);
    }
}
