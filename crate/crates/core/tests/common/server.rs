//! Instrumented local image server.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::{Path, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;

use ilforge::fetch::png_header;

#[derive(Default)]
pub struct Counters {
    pub in_flight: AtomicUsize,
    pub max_in_flight: AtomicUsize,
    pub requests: AtomicUsize,
    per_host: Mutex<HashMap<String, (usize, usize)>>,
    flaky: Mutex<HashMap<String, usize>>,
}

impl Counters {
    /// Highest number of concurrent requests seen for any single host.
    pub fn max_per_host(&self) -> usize {
        self.per_host.lock().unwrap().values().map(|(_, max)| *max).max().unwrap_or(0)
    }
}

struct Tracked(Arc<Counters>, String);

impl Tracked {
    fn enter(c: &Arc<Counters>, headers: &HeaderMap) -> Self {
        let host = headers.get("host").and_then(|h| h.to_str().ok()).unwrap_or("").to_string();
        c.requests.fetch_add(1, Ordering::SeqCst);
        let now = c.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        c.max_in_flight.fetch_max(now, Ordering::SeqCst);
        let mut hosts = c.per_host.lock().unwrap();
        let entry = hosts.entry(host.clone()).or_default();
        entry.0 += 1;
        entry.1 = entry.1.max(entry.0);
        Tracked(Arc::clone(c), host)
    }
}

impl Drop for Tracked {
    fn drop(&mut self) {
        self.0.in_flight.fetch_sub(1, Ordering::SeqCst);
        self.0.per_host.lock().unwrap().get_mut(&self.1).unwrap().0 -= 1;
    }
}

fn png(w: u32, h: u32) -> Response {
    ([("content-type", "image/png")], png_header(w, h)).into_response()
}

/// `/img/<n>` serves a 300×300 PNG for n < 55 and 404 otherwise.
async fn img(State(c): State<Arc<Counters>>, headers: HeaderMap, Path(n): Path<usize>) -> Response {
    let _t = Tracked::enter(&c, &headers);
    tokio::time::sleep(Duration::from_millis(25)).await;
    if n < 55 {
        png(300, 300)
    } else {
        StatusCode::NOT_FOUND.into_response()
    }
}

async fn sized(State(c): State<Arc<Counters>>, headers: HeaderMap, Path((w, h)): Path<(u32, u32)>) -> Response {
    let _t = Tracked::enter(&c, &headers);
    png(w, h)
}

/// Fails with 503 twice per key, then succeeds.
async fn flaky(State(c): State<Arc<Counters>>, headers: HeaderMap, Path(key): Path<String>) -> Response {
    let _t = Tracked::enter(&c, &headers);
    let seen = {
        let mut map = c.flaky.lock().unwrap();
        let n = map.entry(key).or_default();
        *n += 1;
        *n
    };
    if seen <= 2 {
        StatusCode::SERVICE_UNAVAILABLE.into_response()
    } else {
        png(640, 480)
    }
}

async fn slow(State(c): State<Arc<Counters>>, headers: HeaderMap) -> Response {
    let _t = Tracked::enter(&c, &headers);
    tokio::time::sleep(Duration::from_secs(5)).await;
    png(300, 300)
}

async fn big(State(c): State<Arc<Counters>>, headers: HeaderMap) -> Response {
    let _t = Tracked::enter(&c, &headers);
    let mut body = png_header(300, 300);
    body.resize(21 * 1024 * 1024, 0);
    ([("content-type", "image/png")], body).into_response()
}

/// A JPEG cut off before its frame header.
async fn truncated(State(c): State<Arc<Counters>>, headers: HeaderMap) -> Response {
    let _t = Tracked::enter(&c, &headers);
    ([("content-type", "image/jpeg")], vec![0xFF, 0xD8, 0xFF, 0xE0, 0x00, 0x10, b'J', b'F', b'I', b'F', 0]).into_response()
}

pub struct Server {
    pub port: u16,
    pub counters: Arc<Counters>,
}

impl Server {
    /// Serves on all interfaces so that every `127.0.0.x` is a distinct host.
    pub fn start() -> Self {
        let counters = Arc::new(Counters::default());
        let state = Arc::clone(&counters);
        let (tx, rx) = std::sync::mpsc::channel();
        std::thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
            rt.block_on(async move {
                let app = Router::new()
                    .route("/img/:n", get(img))
                    .route("/flaky/:key", get(flaky))
                    .route("/sized/:w/:h", get(sized))
                    .route("/slow", get(slow))
                    .route("/big", get(big))
                    .route("/truncated.jpg", get(truncated))
                    .with_state(state);
                let listener = tokio::net::TcpListener::bind(SocketAddr::from(([0, 0, 0, 0], 0))).await.unwrap();
                tx.send(listener.local_addr().unwrap().port()).unwrap();
                axum::serve(listener, app).await.unwrap();
            });
        });
        Self {
            port: rx.recv().unwrap(),
            counters,
        }
    }

    pub fn url(&self, host: u8, path: &str) -> String {
        format!("http://127.0.0.{host}:{}{path}", self.port)
    }
}

/// 100 image URLs spread over 25 loopback hosts, 55 of which exist.
pub fn contract_tasks(server: &Server) -> Vec<ilforge::fetch::FetchTask> {
    (0..100)
        .map(|i| ilforge::fetch::FetchTask {
            src_url: server.url((i % 25 + 1) as u8, &format!("/img/{i}")),
            doc_id: format!("doc{}", i / 5),
            segment_index: i % 5,
        })
        .collect()
}

/// Runs the 55-of-100 fetch; returns the report, the peak number of
/// concurrent requests and the peak per host.
pub fn run_contract(config: &ilforge::fetch::FetchConfig) -> (ilforge::fetch::FetchReport, usize, usize) {
    let server = Server::start();
    let report = ilforge::fetch::fetch_batch_blocking(contract_tasks(&server), config);
    let max = server.counters.max_in_flight.load(Ordering::SeqCst);
    (report, max, server.counters.max_per_host())
}
