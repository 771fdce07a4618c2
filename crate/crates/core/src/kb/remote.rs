use std::fmt;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{ClockTime, KbError, KbExecutor, RouteQuery, RouteResult, MAX_RESULTS};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    #[error("transport: {0}")]
    Unavailable(String),
    #[error("response body: {0}")]
    Body(String),
}

/// Minimal JSON-over-HTTP POST abstraction so the backend can be driven by
/// recorded exchanges in tests.
pub trait HttpTransport: Send + Sync + fmt::Debug {
    fn post_json(&self, url: &str, body: &Value) -> Result<Value, TransportError>;
}

#[derive(Debug)]
pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder().timeout_global(Some(timeout)).build();
        Self { agent: config.into() }
    }
}

impl Default for UreqTransport {
    fn default() -> Self {
        Self::new(Duration::from_secs(10))
    }
}

impl HttpTransport for UreqTransport {
    fn post_json(&self, url: &str, body: &Value) -> Result<Value, TransportError> {
        let mut resp = self
            .agent
            .post(url)
            .header("content-type", "application/json")
            .send(body.to_string())
            .map_err(|e| TransportError::Unavailable(e.to_string()))?;
        let text = resp.body_mut().read_to_string().map_err(|e| TransportError::Body(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| TransportError::Body(e.to_string()))
    }
}

/// One recorded request and the response (or transport failure) it produced.
/// The `key` field of the request is ignored when matching.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayExchange {
    pub request: Value,
    #[serde(default)]
    pub response: Option<Value>,
    #[serde(default)]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Default)]
pub struct ReplayTransport {
    exchanges: Vec<ReplayExchange>,
}

fn without_key(v: &Value) -> Value {
    let mut v = v.clone();
    if let Some(obj) = v.as_object_mut() {
        obj.remove("key");
    }
    v
}

impl ReplayTransport {
    pub fn new(exchanges: Vec<ReplayExchange>) -> Self {
        Self { exchanges }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, KbError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| KbError::BackendUnavailable(format!("{}: {e}", path.as_ref().display())))?;
        let exchanges = serde_json::from_str(&text).map_err(|e| KbError::BadResponse(e.to_string()))?;
        Ok(Self { exchanges })
    }
}

impl HttpTransport for ReplayTransport {
    fn post_json(&self, _url: &str, body: &Value) -> Result<Value, TransportError> {
        let wanted = without_key(body);
        let ex = self
            .exchanges
            .iter()
            .find(|e| without_key(&e.request) == wanted)
            .ok_or_else(|| TransportError::Unavailable(format!("no recorded exchange for {wanted}")))?;
        match (&ex.response, &ex.error) {
            (_, Some(err)) => Err(TransportError::Unavailable(err.clone())),
            (Some(resp), None) => Ok(resp.clone()),
            (None, None) => Err(TransportError::Body("empty recorded exchange".into())),
        }
    }
}

/// Client for a directions service answering transit queries in the
/// `routes / legs / steps / transit_details` response shape.
#[derive(Debug, Clone)]
pub struct RemoteBackend {
    url: String,
    key: String,
    /// Epoch seconds of local midnight for the service day.
    day_start_epoch: i64,
    utc_offset_secs: i64,
    transport: Arc<dyn HttpTransport>,
}

impl RemoteBackend {
    pub fn new(url: &str, key: &str, day_start_epoch: i64, utc_offset_secs: i64, transport: Arc<dyn HttpTransport>) -> Self {
        Self { url: url.to_string(), key: key.to_string(), day_start_epoch, utc_offset_secs, transport }
    }

    pub fn request_body(&self, q: &RouteQuery) -> Value {
        json!({
            "origin": q.departure,
            "destination": q.arrival,
            "departure_time": self.day_start_epoch + q.departure_time().minutes() as i64 * 60,
            "mode": "TRANSIT",
            "key": self.key,
        })
    }

    fn clock(&self, epoch: i64) -> ClockTime {
        let secs = (epoch + self.utc_offset_secs).rem_euclid(86_400);
        ClockTime::from_minutes((secs / 60) as u16).expect("minute of day")
    }

    fn parse(&self, q: &RouteQuery, resp: &Value) -> Result<Vec<RouteResult>, KbError> {
        let bad = |what: &str| KbError::BadResponse(what.to_string());
        match resp.get("status").and_then(Value::as_str).ok_or_else(|| bad("missing status"))? {
            "OK" => {}
            "ZERO_RESULTS" => return Ok(Vec::new()),
            "NOT_FOUND" => return Err(KbError::UnknownPlace(format!("{} / {}", q.departure, q.arrival))),
            other => return Err(KbError::BackendUnavailable(format!("status {other}"))),
        }
        let routes = resp.get("routes").and_then(Value::as_array).ok_or_else(|| bad("missing routes"))?;
        let mut out = Vec::new();
        for route in routes {
            let steps = route
                .pointer("/legs/0/steps")
                .and_then(Value::as_array)
                .ok_or_else(|| bad("route without legs/steps"))?;
            let Some(td) = steps
                .iter()
                .find(|s| s.get("travel_mode").and_then(Value::as_str) == Some("TRANSIT"))
                .and_then(|s| s.get("transit_details"))
            else {
                continue;
            };
            let s = |p: &str| td.pointer(p).and_then(Value::as_str).map(str::to_string).ok_or_else(|| bad(p));
            let t = |p: &str| td.pointer(p).and_then(Value::as_i64).ok_or_else(|| bad(p));
            out.push(RouteResult {
                line: s("/line/short_name")?,
                depart_stop: s("/departure_stop/name")?,
                arrive_stop: s("/arrival_stop/name")?,
                depart_time: self.clock(t("/departure_time/value")?),
                arrive_time: self.clock(t("/arrival_time/value")?),
            });
        }
        out.sort_by_key(|r| r.depart_time);
        out.truncate(MAX_RESULTS);
        Ok(out)
    }
}

impl KbExecutor for RemoteBackend {
    fn query(&self, q: &RouteQuery) -> Result<Vec<RouteResult>, KbError> {
        q.validate()?;
        let resp = self.transport.post_json(&self.url, &self.request_body(q)).map_err(|e| match e {
            TransportError::Unavailable(m) => KbError::BackendUnavailable(m),
            TransportError::Body(m) => KbError::BadResponse(m),
        })?;
        self.parse(q, &resp)
    }
}
