//! HTTP client for an external heatmap service.

use std::io::Read;
use std::time::Duration;

use super::wire::{WireRequest, WireResponse};
use super::{check_response, AttentionError, AttentionRequest, Heatmap, HeatmapProvider};
use crate::scalar::Real;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// Responses above this size are rejected as malformed.
const MAX_BODY_BYTES: u64 = 256 << 20;

pub struct RemoteProvider {
    url: String,
    timeout: Duration,
    agent: ureq::Agent,
}

impl RemoteProvider {
    /// `endpoint` is the service base URL; `/heatmap` is appended unless
    /// already present.
    pub fn new(endpoint: &str, timeout: Duration) -> Self {
        let base = endpoint.trim_end_matches('/');
        let url = if base.ends_with("/heatmap") {
            base.to_owned()
        } else {
            format!("{base}/heatmap")
        };
        let agent = ureq::AgentBuilder::new().timeout(timeout).build();
        Self { url, timeout, agent }
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    fn post(&self, body: &WireRequest) -> Result<Vec<u8>, AttentionError> {
        let payload = serde_json::to_vec(body).map_err(|e| AttentionError::MalformedPayload(e.to_string()))?;
        let resp = self
            .agent
            .post(&self.url)
            .set("Content-Type", "application/json")
            .send_bytes(&payload)
            .map_err(|e| self.map_error(e))?;
        if resp.status() != 200 {
            return Err(AttentionError::HttpStatus {
                status: resp.status(),
                body: resp.into_string().unwrap_or_default(),
            });
        }
        let mut bytes = Vec::new();
        resp.into_reader()
            .take(MAX_BODY_BYTES)
            .read_to_end(&mut bytes)
            .map_err(|e| self.io_error(e))?;
        Ok(bytes)
    }

    fn map_error(&self, e: ureq::Error) -> AttentionError {
        match e {
            ureq::Error::Status(status, resp) => AttentionError::HttpStatus {
                status,
                body: resp.into_string().unwrap_or_default(),
            },
            ureq::Error::Transport(t) => {
                let timed_out = std::error::Error::source(&t)
                    .and_then(|s| s.downcast_ref::<std::io::Error>())
                    .is_some_and(is_timeout);
                if timed_out {
                    self.timeout_error()
                } else {
                    AttentionError::Connection {
                        endpoint: self.url.clone(),
                        message: t.to_string(),
                    }
                }
            }
        }
    }

    fn io_error(&self, e: std::io::Error) -> AttentionError {
        if is_timeout(&e) {
            self.timeout_error()
        } else {
            AttentionError::Connection {
                endpoint: self.url.clone(),
                message: e.to_string(),
            }
        }
    }

    fn timeout_error(&self) -> AttentionError {
        AttentionError::Timeout {
            endpoint: self.url.clone(),
            timeout_ms: self.timeout.as_millis() as u64,
        }
    }
}

fn is_timeout(e: &std::io::Error) -> bool {
    matches!(e.kind(), std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock)
}

impl<T: Real> HeatmapProvider<T> for RemoteProvider {
    fn heatmaps(&self, request: &AttentionRequest<'_, T>) -> Result<Vec<Heatmap>, AttentionError> {
        request.validate()?;
        let bytes = self.post(&WireRequest::encode(request))?;
        let resp: WireResponse =
            serde_json::from_slice(&bytes).map_err(|e| AttentionError::MalformedPayload(e.to_string()))?;
        let maps = resp
            .heatmaps
            .iter()
            .map(|w| w.decode())
            .collect::<Result<Vec<_>, _>>()?;
        check_response(request, maps)
    }

    fn name(&self) -> &str {
        "remote"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn url_gets_route_once() {
        assert_eq!(
            RemoteProvider::new("http://h:1/", DEFAULT_TIMEOUT).url(),
            "http://h:1/heatmap"
        );
        assert_eq!(
            RemoteProvider::new("http://h:1/heatmap", DEFAULT_TIMEOUT).url(),
            "http://h:1/heatmap"
        );
    }
}
