//! Live capture through a headless browser's debugging protocol.
//!
//! The endpoint is the browser's remote-debugging HTTP address
//! (`host:port`). A fresh page target is opened per capture, so concurrent
//! captures never share a page.

use std::io::ErrorKind;
use std::net::{SocketAddr, TcpStream, ToSocketAddrs};
use std::time::{Duration, Instant};

use serde_json::{json, Value};
use tungstenite::{Message, WebSocket};

use super::{convert_trace_events, CaptureRequest, CollectError, DeviceKind};
use crate::netsim::apply_throttle;
use crate::Trace;

pub const ENDPOINT_ENV: &str = "AUDIT_BROWSER_ENDPOINT";

const TRACE_CATEGORIES: &str = "-*,toplevel,blink.user_timing,loading,devtools.timeline,\
disabled-by-default-devtools.timeline,disabled-by-default-devtools.timeline.frame,\
rail,netlog,blink.resource";

/// Time spent recording after the load event so late tasks are captured.
pub const DEFAULT_SETTLE_MS: u64 = 3000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BrowserEndpoint {
    pub host: String,
    pub port: u16,
}

impl BrowserEndpoint {
    /// Accepts `host:port` or `http://host:port[/]`.
    pub fn parse(s: &str) -> Result<Self, CollectError> {
        let bad = || CollectError::InvalidRequest(format!("bad browser endpoint `{s}`"));
        let rest = s.trim();
        let rest = rest
            .strip_prefix("http://")
            .or_else(|| rest.strip_prefix("ws://"))
            .unwrap_or(rest);
        let rest = rest.split('/').next().unwrap_or("");
        let (host, port) = rest.rsplit_once(':').ok_or_else(bad)?;
        if host.is_empty() {
            return Err(bad());
        }
        Ok(Self {
            host: host.to_string(),
            port: port.parse().map_err(|_| bad())?,
        })
    }

    pub fn from_env() -> Option<Result<Self, CollectError>> {
        std::env::var(ENDPOINT_ENV).ok().map(|v| Self::parse(&v))
    }

    fn addr(&self) -> String {
        format!("{}:{}", self.host, self.port)
    }

    fn http_url(&self, path: &str) -> String {
        format!("http://{}{}", self.addr(), path)
    }

    fn resolve(&self) -> Result<SocketAddr, CollectError> {
        self.addr()
            .to_socket_addrs()
            .ok()
            .and_then(|mut a| a.next())
            .ok_or_else(|| CollectError::Unreachable(self.addr()))
    }
}

struct Deadline(Instant);

impl Deadline {
    fn remaining(&self) -> Option<Duration> {
        self.0.checked_duration_since(Instant::now()).filter(|d| !d.is_zero())
    }
}

struct Session {
    socket: WebSocket<TcpStream>,
    next_id: u64,
    events: Vec<Value>,
    timeout_ms: u64,
}

impl Session {
    fn send(&mut self, method: &str, params: Value) -> Result<u64, CollectError> {
        self.next_id += 1;
        let msg = json!({"id": self.next_id, "method": method, "params": params});
        self.socket
            .send(Message::text(msg.to_string()))
            .map_err(|e| CollectError::Protocol(e.to_string()))?;
        Ok(self.next_id)
    }

    /// Next protocol message, or `None` when the read timed out.
    fn recv(&mut self) -> Result<Option<Value>, CollectError> {
        match self.socket.read() {
            Ok(Message::Text(text)) => serde_json::from_str(text.as_str())
                .map(Some)
                .map_err(|e| CollectError::Protocol(e.to_string())),
            Ok(_) => Ok(None),
            Err(tungstenite::Error::Io(e)) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {
                Ok(None)
            }
            Err(e) => Err(CollectError::Protocol(e.to_string())),
        }
    }

    /// Reads until `done` accepts a message, buffering events on the way.
    fn wait_until(&mut self, deadline: &Deadline, mut done: impl FnMut(&Value) -> bool) -> Result<Value, CollectError> {
        loop {
            if deadline.remaining().is_none() {
                return Err(CollectError::NavigationTimeout(self.timeout_ms));
            }
            if let Some(msg) = self.recv()? {
                if done(&msg) {
                    return Ok(msg);
                }
                if msg.get("method").is_some() {
                    self.events.push(msg);
                }
            }
        }
    }

    fn call(&mut self, deadline: &Deadline, method: &str, params: Value) -> Result<Value, CollectError> {
        let id = self.send(method, params)?;
        let reply = self.wait_until(deadline, |m| m.get("id").and_then(Value::as_u64) == Some(id))?;
        if let Some(err) = reply.get("error") {
            return Err(CollectError::Protocol(format!("{method}: {err}")));
        }
        Ok(reply.get("result").cloned().unwrap_or(Value::Null))
    }
}

fn open_target(endpoint: &BrowserEndpoint, timeout: Duration) -> Result<(String, String), CollectError> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .build()
        .into();
    let url = endpoint.http_url("/json/new?about:blank");
    let mut resp = agent
        .put(&url)
        .send_empty()
        .map_err(|e| CollectError::Protocol(format!("opening page target: {e}")))?;
    let body = resp
        .body_mut()
        .read_to_string()
        .map_err(|e| CollectError::Protocol(format!("target description: {e}")))?;
    let target: Value =
        serde_json::from_str(&body).map_err(|e| CollectError::Protocol(format!("target description: {e}")))?;
    let ws = target
        .get("webSocketDebuggerUrl")
        .and_then(Value::as_str)
        .ok_or_else(|| CollectError::Protocol("target has no webSocketDebuggerUrl".into()))?;
    let id = target.get("id").and_then(Value::as_str).unwrap_or_default();
    Ok((id.to_string(), ws.to_string()))
}

fn close_target(endpoint: &BrowserEndpoint, id: &str) {
    if id.is_empty() {
        return;
    }
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_secs(2)))
        .build()
        .into();
    let _ = agent.get(&endpoint.http_url(&format!("/json/close/{id}"))).call();
}

/// Records an unthrottled trace of one navigation.
pub fn capture_raw(req: &CaptureRequest, endpoint: &BrowserEndpoint, settle_ms: u64) -> Result<Trace, CollectError> {
    req.check()?;
    let deadline = Deadline(Instant::now() + Duration::from_millis(req.timeout_ms));
    let addr = endpoint.resolve()?;
    let connect_budget = deadline.remaining().unwrap_or_default().min(Duration::from_secs(5));
    TcpStream::connect_timeout(&addr, connect_budget).map_err(|_| CollectError::Unreachable(endpoint.addr()))?;

    let (target_id, ws_url) = open_target(endpoint, connect_budget)?;
    let result = record(req, endpoint, addr, &ws_url, &deadline, settle_ms);
    close_target(endpoint, &target_id);
    convert_trace_events(&result?)
}

fn record(
    req: &CaptureRequest,
    endpoint: &BrowserEndpoint,
    addr: SocketAddr,
    ws_url: &str,
    deadline: &Deadline,
    settle_ms: u64,
) -> Result<Vec<Value>, CollectError> {
    let stream = TcpStream::connect_timeout(&addr, Duration::from_secs(5))
        .map_err(|_| CollectError::Unreachable(endpoint.addr()))?;
    stream
        .set_read_timeout(Some(Duration::from_millis(200)))
        .map_err(|e| CollectError::Protocol(e.to_string()))?;
    let (socket, _) = tungstenite::client(ws_url, stream).map_err(|e| CollectError::Protocol(e.to_string()))?;
    let mut s = Session {
        socket,
        next_id: 0,
        events: Vec::new(),
        timeout_ms: req.timeout_ms,
    };

    let mobile = req.mode.kind == DeviceKind::Mobile;
    s.call(deadline, "Page.enable", json!({}))?;
    s.call(
        deadline,
        "Emulation.setDeviceMetricsOverride",
        json!({
            "width": req.mode.viewport.width_px,
            "height": req.mode.viewport.height_px,
            "deviceScaleFactor": if mobile { 2.625 } else { 1.0 },
            "mobile": mobile,
        }),
    )?;
    s.call(
        deadline,
        "Network.setUserAgentOverride",
        json!({"userAgent": req.mode.user_agent()}),
    )?;
    s.call(
        deadline,
        "Tracing.start",
        json!({"categories": TRACE_CATEGORIES, "transferMode": "ReportEvents"}),
    )?;
    let nav = s.call(deadline, "Page.navigate", json!({"url": req.url}))?;
    if let Some(err) = nav.get("errorText").and_then(Value::as_str) {
        return Err(CollectError::Protocol(format!("navigation failed: {err}")));
    }
    if !s.events.iter().any(|e| e["method"] == "Page.loadEventFired") {
        s.wait_until(deadline, |m| m["method"] == "Page.loadEventFired")?;
    }

    let settle_until = Instant::now() + Duration::from_millis(settle_ms);
    while Instant::now() < settle_until && deadline.remaining().is_some() {
        if let Some(msg) = s.recv()? {
            s.events.push(msg);
        }
    }

    // the trace dump is allowed to outlive the navigation budget a little
    let dump_deadline = Deadline(Instant::now() + Duration::from_secs(30));
    s.call(&dump_deadline, "Tracing.end", json!({}))?;
    s.wait_until(&dump_deadline, |m| m["method"] == "Tracing.tracingComplete")?;
    let _ = s.socket.close(None);

    let mut trace_events = Vec::new();
    for e in s.events.drain(..) {
        if e["method"] == "Tracing.dataCollected" {
            if let Some(Value::Array(values)) = e.get("params").and_then(|p| p.get("value")) {
                trace_events.extend(values.iter().cloned());
            }
        }
    }
    Ok(trace_events)
}

/// Captures a page load and applies the request's throttle profile, using the
/// device mode's CPU multiplier.
pub fn capture_live(req: &CaptureRequest, endpoint: &BrowserEndpoint) -> Result<Trace, CollectError> {
    let raw = capture_raw(req, endpoint, DEFAULT_SETTLE_MS)?;
    let profile = req.throttle.with_cpu_multiplier(req.mode.cpu_multiplier);
    apply_throttle(&raw, &profile).map_err(|e| CollectError::Conversion(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collector::DeviceMode;
    use crate::Profile;

    #[test]
    fn endpoint_parsing() {
        let e = BrowserEndpoint::parse("http://127.0.0.1:9222/").unwrap();
        assert_eq!((e.host.as_str(), e.port), ("127.0.0.1", 9222));
        let e = BrowserEndpoint::parse("localhost:9333").unwrap();
        assert_eq!(e.port, 9333);
        assert!(BrowserEndpoint::parse("localhost").is_err());
        assert!(BrowserEndpoint::parse(":80").is_err());
    }

    #[test]
    fn unreachable_endpoint_fails_fast() {
        // bind then drop to get a port nobody listens on
        let port = {
            let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
            l.local_addr().unwrap().port()
        };
        let endpoint = BrowserEndpoint {
            host: "127.0.0.1".into(),
            port,
        };
        let req = CaptureRequest {
            url: "http://example.test/".into(),
            mode: DeviceMode::mobile(),
            throttle: Profile::simulated_4g(),
            timeout_ms: 2_000,
        };
        let started = Instant::now();
        let err = capture_live(&req, &endpoint).unwrap_err();
        assert!(matches!(err, CollectError::Unreachable(_)), "{err}");
        assert!(started.elapsed() < Duration::from_millis(2_000));
    }
}
