//! Heatmap providers standing in for the vision-language model: an analytic
//! oracle for tests and synthetic scenes, and an HTTP client for an external
//! model service.

mod oracle;
mod remote;
pub mod wire;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use oracle::{
    oracle_heatmap, visible_centroid_heatmap, OracleHeatmap, OracleMode, OracleProvider, DEFAULT_SIGMA_PX,
};
pub use remote::{RemoteProvider, DEFAULT_TIMEOUT};

use crate::render::MultiChannelImage;
use crate::scalar::Real;

/// Tolerance on the total mass of a sum-to-one map.
pub const MASS_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum AttentionError {
    #[error("request to {endpoint} timed out after {timeout_ms} ms")]
    Timeout { endpoint: String, timeout_ms: u64 },

    #[error("cannot reach {endpoint}: {message}")]
    Connection { endpoint: String, message: String },

    #[error("server answered HTTP {status}: {body}")]
    HttpStatus { status: u16, body: String },

    #[error("malformed payload: {0}")]
    MalformedPayload(String),

    #[error("expected {expected} heatmaps, got {got}")]
    CountMismatch { expected: usize, got: usize },

    #[error("heatmap {index}: expected {expected:?} (width, height), got {got:?}")]
    ShapeMismatch {
        index: usize,
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("heatmap {index}: {message}")]
    InvalidValue { index: usize, message: String },

    #[error("heatmap has zero total mass")]
    ZeroMass,

    #[error("invalid attention request: {0}")]
    InvalidRequest(String),

    #[error("domain error: {0}")]
    Domain(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    SumToOne,
    #[default]
    Raw,
}

/// Non-negative per-pixel attention, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f32>,
    pub normalization: Normalization,
}

impl Heatmap {
    pub fn new(
        width: usize,
        height: usize,
        values: Vec<f32>,
        normalization: Normalization,
    ) -> Result<Self, AttentionError> {
        let h = Self {
            width,
            height,
            values,
            normalization,
        };
        h.validate(0)?;
        Ok(h)
    }

    pub fn uniform(width: usize, height: usize) -> Self {
        let n = width * height;
        Self {
            width,
            height,
            values: vec![(1.0 / n as f64) as f32; n],
            normalization: Normalization::SumToOne,
        }
    }

    /// Checks the map invariants; `index` labels errors.
    pub fn validate(&self, index: usize) -> Result<(), AttentionError> {
        if self.values.len() != self.width * self.height {
            return Err(AttentionError::InvalidValue {
                index,
                message: format!("{} values for a {}x{} map", self.values.len(), self.width, self.height),
            });
        }
        if let Some(k) = self.values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(AttentionError::InvalidValue {
                index,
                message: format!("value {} at pixel {k} is negative or non-finite", self.values[k]),
            });
        }
        if self.normalization == Normalization::SumToOne && (self.mass() - 1.0).abs() > MASS_TOLERANCE {
            return Err(AttentionError::InvalidValue {
                index,
                message: format!("declared sum-to-one but sums to {}", self.mass()),
            });
        }
        Ok(())
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().map(|&v| v as f64).sum()
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.values[y * self.width + x]
    }

    /// Pixel of the largest value, lowest linear index on ties.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (k, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = k;
            }
        }
        (best % self.width, best / self.width)
    }

    /// Bilinear interpolation at continuous image coordinates (pixel `(i, j)`
    /// centered at `(i + 0.5, j + 0.5)`), edge-clamped. `None` outside
    /// `[0, width) x [0, height)`.
    #[inline]
    pub fn sample_bilinear(&self, u: f64, v: f64) -> Option<f64> {
        if !(u >= 0.0 && v >= 0.0 && u < self.width as f64 && v < self.height as f64) {
            return None;
        }
        let (x, y) = (u - 0.5, v - 0.5);
        let (x0, y0) = (x.floor(), y.floor());
        let (fx, fy) = (x - x0, y - y0);
        let clamp_x = |i: f64| (i.max(0.0) as usize).min(self.width - 1);
        let clamp_y = |i: f64| (i.max(0.0) as usize).min(self.height - 1);
        let (xa, xb) = (clamp_x(x0), clamp_x(x0 + 1.0));
        let (ya, yb) = (clamp_y(y0), clamp_y(y0 + 1.0));
        let g = |x: usize, y: usize| self.values[y * self.width + x] as f64;
        let top = g(xa, ya) * (1.0 - fx) + g(xb, ya) * fx;
        let bottom = g(xa, yb) * (1.0 - fx) + g(xb, yb) * fx;
        Some(top * (1.0 - fy) + bottom * fy)
    }

    /// Value of the pixel containing `(u, v)`.
    #[inline]
    pub fn sample_nearest(&self, u: f64, v: f64) -> Option<f64> {
        if !(u >= 0.0 && v >= 0.0 && u < self.width as f64 && v < self.height as f64) {
            return None;
        }
        Some(self.get(u as usize, v as usize) as f64)
    }
}

/// Scales a map to unit mass. Maps already within [`MASS_TOLERANCE`] of unit
/// mass are returned unchanged so the operation is idempotent.
pub fn normalize(heatmap: &Heatmap) -> Result<Heatmap, AttentionError> {
    heatmap.validate(0).or_else(|e| match e {
        // A raw map may be anything non-negative; only a broken sum-to-one
        // declaration is recoverable here.
        AttentionError::InvalidValue { .. } if heatmap.normalization == Normalization::SumToOne => Heatmap {
            normalization: Normalization::Raw,
            ..heatmap.clone()
        }
        .validate(0),
        e => Err(e),
    })?;
    let mass = heatmap.mass();
    if mass <= 0.0 {
        return Err(AttentionError::ZeroMass);
    }
    if (mass - 1.0).abs() <= MASS_TOLERANCE {
        return Ok(Heatmap {
            normalization: Normalization::SumToOne,
            ..heatmap.clone()
        });
    }
    let scale = 1.0 / mass;
    Ok(Heatmap {
        width: heatmap.width,
        height: heatmap.height,
        values: heatmap.values.iter().map(|&v| (v as f64 * scale) as f32).collect(),
        normalization: Normalization::SumToOne,
    })
}

/// Images plus the language instruction, as sent to a provider.
#[derive(Clone, Copy, Debug)]
pub struct AttentionRequest<'a, T> {
    pub images: &'a [MultiChannelImage<T>],
    pub instruction: &'a str,
}

impl<'a, T: Real> AttentionRequest<'a, T> {
    pub fn new(images: &'a [MultiChannelImage<T>], instruction: &'a str) -> Result<Self, AttentionError> {
        let r = Self { images, instruction };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), AttentionError> {
        let first = self
            .images
            .first()
            .ok_or_else(|| AttentionError::InvalidRequest("no images".into()))?;
        if let Some(i) = self
            .images
            .iter()
            .position(|im| (im.width, im.height) != (first.width, first.height))
        {
            return Err(AttentionError::InvalidRequest(format!(
                "image {i} is {}x{}, image 0 is {}x{}",
                self.images[i].width, self.images[i].height, first.width, first.height
            )));
        }
        Ok(())
    }

    pub fn image_size(&self) -> (usize, usize) {
        (self.images[0].width, self.images[0].height)
    }
}

/// Source of one heatmap per requested image.
pub trait HeatmapProvider<T: Real>: Send + Sync {
    fn heatmaps(&self, request: &AttentionRequest<'_, T>) -> Result<Vec<Heatmap>, AttentionError>;

    fn name(&self) -> &str;
}

impl<T: Real, P: HeatmapProvider<T> + ?Sized> HeatmapProvider<T> for Box<P> {
    fn heatmaps(&self, request: &AttentionRequest<'_, T>) -> Result<Vec<Heatmap>, AttentionError> {
        (**self).heatmaps(request)
    }

    fn name(&self) -> &str {
        (**self).name()
    }
}

impl<T: Real, P: HeatmapProvider<T> + ?Sized> HeatmapProvider<T> for &P {
    fn heatmaps(&self, request: &AttentionRequest<'_, T>) -> Result<Vec<Heatmap>, AttentionError> {
        (**self).heatmaps(request)
    }

    fn name(&self) -> &str {
        (**self).name()
    }
}

/// Tries `primary`, and answers from `fallback` when it fails.
pub struct FallbackProvider<P, F> {
    pub primary: P,
    pub fallback: F,
}

impl<T: Real, P: HeatmapProvider<T>, F: HeatmapProvider<T>> HeatmapProvider<T> for FallbackProvider<P, F> {
    fn heatmaps(&self, request: &AttentionRequest<'_, T>) -> Result<Vec<Heatmap>, AttentionError> {
        self.primary
            .heatmaps(request)
            .or_else(|_| self.fallback.heatmaps(request))
    }

    fn name(&self) -> &str {
        self.primary.name()
    }
}

/// Checks a provider's answer against the request: count, resolution and
/// value invariants. Raw maps are normalized.
pub fn check_response<T: Real>(
    request: &AttentionRequest<'_, T>,
    maps: Vec<Heatmap>,
) -> Result<Vec<Heatmap>, AttentionError> {
    if maps.len() != request.images.len() {
        return Err(AttentionError::CountMismatch {
            expected: request.images.len(),
            got: maps.len(),
        });
    }
    let expected = request.image_size();
    maps.into_iter()
        .enumerate()
        .map(|(index, m)| {
            if (m.width, m.height) != expected {
                return Err(AttentionError::ShapeMismatch {
                    index,
                    expected,
                    got: (m.width, m.height),
                });
            }
            m.validate(index)?;
            match m.normalization {
                Normalization::SumToOne => Ok(m),
                Normalization::Raw => normalize(&m),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalize_constant_map() {
        let h = Heatmap::new(4, 5, vec![3.0; 20], Normalization::Raw).unwrap();
        let n = normalize(&h).unwrap();
        assert!(n.values.iter().all(|v| *v == 1.0 / 20.0));
        assert_eq!(n.normalization, Normalization::SumToOne);
    }

    #[test]
    fn normalize_zero_map_fails() {
        let h = Heatmap::new(2, 2, vec![0.0; 4], Normalization::Raw).unwrap();
        assert!(matches!(normalize(&h), Err(AttentionError::ZeroMass)));
    }

    #[test]
    fn normalized_map_is_unchanged() {
        let h = Heatmap::uniform(7, 3);
        let n = normalize(&h).unwrap();
        for (a, b) in h.values.iter().zip(&n.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn invariants_are_checked() {
        assert!(Heatmap::new(2, 2, vec![0.25, 0.25, -0.1, 0.6], Normalization::Raw).is_err());
        assert!(Heatmap::new(2, 2, vec![0.25, 0.25, f32::NAN, 0.25], Normalization::Raw).is_err());
        assert!(Heatmap::new(2, 2, vec![0.5; 4], Normalization::SumToOne).is_err());
        assert!(Heatmap::new(2, 2, vec![0.5; 3], Normalization::Raw).is_err());
    }

    #[test]
    fn bilinear_sampling() {
        let h = Heatmap::new(2, 1, vec![0.0, 1.0], Normalization::Raw).unwrap();
        assert_eq!(h.sample_bilinear(0.5, 0.5), Some(0.0));
        assert_eq!(h.sample_bilinear(1.5, 0.5), Some(1.0));
        assert_eq!(h.sample_bilinear(1.0, 0.5), Some(0.5));
        assert_eq!(h.sample_bilinear(0.2, 0.5), Some(0.0));
        assert_eq!(h.sample_bilinear(2.0, 0.5), None);
        assert_eq!(h.sample_bilinear(-0.1, 0.5), None);
        assert_eq!(h.sample_nearest(1.2, 0.9), Some(1.0));
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent_and_keeps_argmax(values in prop::collection::vec(0.001f32..100.0, 1..64)) {
            let n = values.len();
            let h = Heatmap::new(n, 1, values, Normalization::Raw).unwrap();
            let once = normalize(&h).unwrap();
            let twice = normalize(&once).unwrap();
            prop_assert_eq!(&once, &twice);
            prop_assert_eq!(once.argmax(), h.argmax());
            prop_assert!((once.mass() - 1.0).abs() <= MASS_TOLERANCE);
        }
    }
}
