//! JSON shapes exchanged with a remote heatmap service.
//!
//! `POST <endpoint>/heatmap` with a [`WireRequest`]; the service answers
//! with a [`WireResponse`] holding one map per image, in request order.
//! Binary payloads are standard base64: RGB as binary PPM (P6), depth and
//! heatmap values as row-major little-endian f32.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::{AttentionError, AttentionRequest, Heatmap, Normalization};
use crate::render::{encode_f32le, encode_rgb_ppm};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireImage {
    pub width: usize,
    pub height: usize,
    pub rgb_ppm_b64: String,
    pub depth_f32_b64: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireRequest {
    pub instruction: String,
    pub images: Vec<WireImage>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireHeatmap {
    pub width: usize,
    pub height: usize,
    pub values_f32_b64: String,
    #[serde(default)]
    pub normalization: Normalization,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireResponse {
    pub heatmaps: Vec<WireHeatmap>,
}

impl WireRequest {
    pub fn encode<T: Real>(request: &AttentionRequest<'_, T>) -> Self {
        Self {
            instruction: request.instruction.to_owned(),
            images: request
                .images
                .iter()
                .map(|im| WireImage {
                    width: im.width,
                    height: im.height,
                    rgb_ppm_b64: STANDARD.encode(encode_rgb_ppm(im)),
                    depth_f32_b64: STANDARD.encode(encode_f32le(&im.depth_channel())),
                })
                .collect(),
        }
    }
}

impl WireImage {
    /// Decodes the depth channel; invalid pixels carry `+inf`.
    pub fn depth(&self) -> Result<Vec<f32>, AttentionError> {
        let v = decode_f32le(&self.depth_f32_b64)?;
        if v.len() != self.width * self.height {
            return Err(AttentionError::MalformedPayload(format!(
                "depth has {} values for a {}x{} image",
                v.len(),
                self.width,
                self.height
            )));
        }
        Ok(v)
    }
}

impl WireHeatmap {
    pub fn from_heatmap(h: &Heatmap) -> Self {
        let bytes: Vec<u8> = h.values.iter().flat_map(|v| v.to_le_bytes()).collect();
        Self {
            width: h.width,
            height: h.height,
            values_f32_b64: STANDARD.encode(bytes),
            normalization: h.normalization,
        }
    }

    /// Decodes without checking values; see [`super::check_response`].
    pub fn decode(&self) -> Result<Heatmap, AttentionError> {
        let values = decode_f32le(&self.values_f32_b64)?;
        if values.len() != self.width * self.height {
            return Err(AttentionError::MalformedPayload(format!(
                "{} values for a declared {}x{} map",
                values.len(),
                self.width,
                self.height
            )));
        }
        Ok(Heatmap {
            width: self.width,
            height: self.height,
            values,
            normalization: self.normalization,
        })
    }
}

fn decode_f32le(b64: &str) -> Result<Vec<f32>, AttentionError> {
    let bytes = STANDARD
        .decode(b64)
        .map_err(|e| AttentionError::MalformedPayload(format!("bad base64: {e}")))?;
    if bytes.len() % 4 != 0 {
        return Err(AttentionError::MalformedPayload(format!(
            "{} bytes is not a whole number of f32 values",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heatmap_round_trip() {
        let h = Heatmap::new(3, 2, vec![0.0, 1.5, 2.0, 0.25, 7.0, 1e-9], Normalization::Raw).unwrap();
        let w = WireHeatmap::from_heatmap(&h);
        let json = serde_json::to_string(&w).unwrap();
        let back: WireHeatmap = serde_json::from_str(&json).unwrap();
        assert_eq!(back.decode().unwrap(), h);
    }

    #[test]
    fn normalization_defaults_to_raw() {
        let w: WireHeatmap = serde_json::from_str(r#"{"width":1,"height":1,"values_f32_b64":"AACAPw=="}"#).unwrap();
        assert_eq!(w.normalization, Normalization::Raw);
        assert_eq!(w.decode().unwrap().values, vec![1.0]);
    }

    #[test]
    fn malformed_payloads() {
        let mut w = WireHeatmap::from_heatmap(&Heatmap::uniform(2, 2));
        w.values_f32_b64.push('!');
        assert!(matches!(w.decode(), Err(AttentionError::MalformedPayload(_))));
        let w = WireHeatmap {
            width: 3,
            ..WireHeatmap::from_heatmap(&Heatmap::uniform(2, 2))
        };
        assert!(matches!(w.decode(), Err(AttentionError::MalformedPayload(_))));
    }
}
