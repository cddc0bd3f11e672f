//! Geometry engine for language-guided active viewpoint selection.
//!
//! A point cloud is rendered from three orthographic views, a heatmap
//! provider points at the region of interest, and the heatmaps are
//! back-projected into a voxel score volume. A second, zoomed pass around the
//! coarse estimate refines it. Candidate viewpoints come from a geodesic
//! sphere and are ranked by visibility, distance and diversity.
//!
//! The numeric core is generic over `f32` and `f64`; the aliases at the crate
//! root pin it to `f64`.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attention;
pub mod error;
pub mod fusion;
pub mod geometry;
pub mod pipeline;
pub mod render;
pub mod scalar;
pub mod scene;
pub mod scoring;
pub mod synth;
pub mod viewsphere;

pub use error::{Error, Result, Stage};
pub use scalar::Real;

pub type Vec3 = geometry::Vec3<f64>;
pub type Aabb = geometry::Aabb<f64>;
pub type Point = scene::Point<f64>;
pub type PointCloud = scene::PointCloud<f64>;
pub type SpatialIndex = scene::SpatialIndex<f64>;
pub type CameraPose = viewsphere::CameraPose<f64>;
pub type CandidateSet = viewsphere::CandidateSet<f64>;
pub type MultiChannelImage = render::MultiChannelImage<f64>;
pub type ViewCandidate = scoring::ViewCandidate<f64>;
pub type ScoreVolume = fusion::ScoreVolume<f64>;
pub type ActionPrediction = fusion::ActionPrediction<f64>;
pub type PipelineConfig = pipeline::PipelineConfig<f64>;
pub type StageTrace = pipeline::StageTrace<f64>;
