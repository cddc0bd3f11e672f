//! Shared fixtures for the integration tests: a minimal HTTP server that
//! answers heatmap requests, and a provider that records what it returns.

#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread;

use activeview_core::attention::wire::{WireHeatmap, WireRequest, WireResponse};
use activeview_core::attention::{AttentionError, AttentionRequest, Heatmap, HeatmapProvider};
use activeview_core::Real;

pub struct Reply {
    pub status: u16,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn ok(maps: &[Heatmap]) -> Self {
        let response = WireResponse {
            heatmaps: maps.iter().map(WireHeatmap::from_heatmap).collect(),
        };
        Self {
            status: 200,
            body: serde_json::to_vec(&response).unwrap(),
        }
    }

    pub fn status(status: u16, body: &str) -> Self {
        Self {
            status,
            body: body.as_bytes().to_vec(),
        }
    }
}

/// Serves `POST /heatmap` on a loopback port until the process exits. The
/// handler sees each decoded request and its 0-based sequence number.
pub struct MockServer {
    pub endpoint: String,
    pub requests: Arc<Mutex<usize>>,
}

impl MockServer {
    pub fn start<F>(handler: F) -> Self
    where
        F: Fn(&WireRequest, usize) -> Reply + Send + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let endpoint = format!("http://{}", listener.local_addr().unwrap());
        let requests = Arc::new(Mutex::new(0usize));
        let counter = Arc::clone(&requests);
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let seq = {
                    let mut n = counter.lock().unwrap();
                    *n += 1;
                    *n - 1
                };
                serve_one(stream, seq, &handler);
            }
        });
        Self { endpoint, requests }
    }

    pub fn request_count(&self) -> usize {
        *self.requests.lock().unwrap()
    }
}

fn serve_one<F: Fn(&WireRequest, usize) -> Reply>(stream: TcpStream, seq: usize, handler: &F) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut length = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 {
            return;
        }
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                length = v.trim().parse().unwrap();
            }
        }
    }
    let mut body = vec![0u8; length];
    reader.read_exact(&mut body).unwrap();
    let reply = match serde_json::from_slice::<WireRequest>(&body) {
        Ok(request) => handler(&request, seq),
        Err(e) => Reply::status(400, &e.to_string()),
    };
    let mut stream = stream;
    let head = format!(
        "HTTP/1.1 {} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        reply.status,
        reply.body.len()
    );
    let _ = stream.write_all(head.as_bytes());
    let _ = stream.write_all(&reply.body);
    let _ = stream.flush();
}

/// Wraps a provider and keeps every batch of maps it returns.
pub struct Recording<P> {
    pub inner: P,
    pub batches: Mutex<Vec<Vec<Heatmap>>>,
}

impl<P> Recording<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner,
            batches: Mutex::new(Vec::new()),
        }
    }

    pub fn take(&self) -> Vec<Vec<Heatmap>> {
        std::mem::take(&mut self.batches.lock().unwrap())
    }
}

impl<T: Real, P: HeatmapProvider<T>> HeatmapProvider<T> for Recording<P> {
    fn heatmaps(&self, request: &AttentionRequest<'_, T>) -> Result<Vec<Heatmap>, AttentionError> {
        let maps = self.inner.heatmaps(request)?;
        self.batches.lock().unwrap().push(maps.clone());
        Ok(maps)
    }

    fn name(&self) -> &str {
        self.inner.name()
    }
}

/// Server that answers the n-th request with the n-th recorded batch.
pub fn replay_server(batches: Vec<Vec<Heatmap>>) -> MockServer {
    MockServer::start(move |request, seq| match batches.get(seq) {
        Some(maps) if maps.len() == request.images.len() => Reply::ok(maps),
        Some(_) => Reply::status(422, "image count does not match the recording"),
        None => Reply::status(410, "no recording left"),
    })
}
