//! Model backends: the generation contract, a scripted fixture backend and
//! an HTTP client for a locally deployed inference server.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use curio_core::frames::FrameSamplingPlan;
use curio_core::{video_key, BackendDescriptor};

use crate::error::{Error, Result};
use crate::io::read_text;

/// Prompt slot; fixture files are keyed by these names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptSlot {
    Transcription,
    Label,
    Title,
    Artist,
    Subject,
    Summary,
    Description,
    Scene,
}

impl PromptSlot {
    pub const ALL: [PromptSlot; 8] = [
        PromptSlot::Transcription,
        PromptSlot::Label,
        PromptSlot::Title,
        PromptSlot::Artist,
        PromptSlot::Subject,
        PromptSlot::Summary,
        PromptSlot::Description,
        PromptSlot::Scene,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PromptSlot::Transcription => "transcription",
            PromptSlot::Label => "label",
            PromptSlot::Title => "title",
            PromptSlot::Artist => "artist",
            PromptSlot::Subject => "subject",
            PromptSlot::Summary => "summary",
            PromptSlot::Description => "description",
            PromptSlot::Scene => "scene",
        }
    }
}

impl fmt::Display for PromptSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub max_tokens: u32,
    pub temperature: f64,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams {
            max_tokens: 256,
            temperature: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRequest {
    pub media_ref: String,
    pub frame_plan: Option<FrameSamplingPlan>,
    pub slot: PromptSlot,
    pub prompt: String,
    pub params: GenerationParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationResponse {
    pub text: String,
    pub backend: BackendDescriptor,
    pub latency: Duration,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BackendError {
    #[error("no fixture for media `{media}`, slot `{slot}`")]
    FixtureMissing { media: String, slot: PromptSlot },
    #[error("connection failed: {0}")]
    Connection(String),
    #[error("request timed out")]
    Timeout,
    #[error("server returned {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    Protocol(String),
}

impl BackendError {
    /// Connection failures, timeouts and server-side (5xx) errors may
    /// succeed on retry; everything else is fatal.
    pub fn is_retriable(&self) -> bool {
        match self {
            BackendError::Connection(_) | BackendError::Timeout => true,
            BackendError::Status { status, .. } => *status >= 500,
            BackendError::FixtureMissing { .. } | BackendError::Protocol(_) => false,
        }
    }
}

pub trait ModelBackend: Send + Sync {
    fn descriptor(&self) -> &BackendDescriptor;

    /// Concurrent requests this backend accepts; `None` is unlimited.
    fn max_in_flight(&self) -> Option<usize>;

    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, BackendError>;
}

/// Scripted responses keyed by video key and prompt slot.
///
/// File format: `{ "<video key>": { "<slot>": "<text>", ... }, ... }` with an
/// optional `"_backend"` entry holding the descriptor.
#[derive(Debug)]
pub struct FixtureBackend {
    descriptor: BackendDescriptor,
    responses: BTreeMap<String, BTreeMap<PromptSlot, String>>,
    calls: Mutex<Vec<(String, PromptSlot)>>,
}

const DESCRIPTOR_KEY: &str = "_backend";

impl FixtureBackend {
    pub fn new(descriptor: BackendDescriptor, responses: BTreeMap<String, BTreeMap<PromptSlot, String>>) -> Self {
        FixtureBackend {
            descriptor,
            responses,
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let mut raw: BTreeMap<String, serde_json::Value> =
            serde_json::from_str(text).map_err(|e| Error::parse(path, e))?;
        let descriptor = match raw.remove(DESCRIPTOR_KEY) {
            Some(v) => serde_json::from_value(v).map_err(|e| Error::parse(path, format!("{DESCRIPTOR_KEY}: {e}")))?,
            None => {
                let name = path.file_stem().map_or("fixture".into(), |s| s.to_string_lossy().into_owned());
                BackendDescriptor::new(&name, "fixture")
            }
        };
        let mut responses = BTreeMap::new();
        for (media, slots) in raw {
            let slots = serde_json::from_value(slots).map_err(|e| Error::parse(path, format!("{media}: {e}")))?;
            responses.insert(media, slots);
        }
        Ok(Self::new(descriptor, responses))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(path, &read_text(path)?)
    }

    /// Every (video key, slot) requested so far, in call order.
    pub fn calls(&self) -> Vec<(String, PromptSlot)> {
        self.calls.lock().unwrap_or_else(|p| p.into_inner()).clone()
    }

    pub fn clear_calls(&self) {
        self.calls.lock().unwrap_or_else(|p| p.into_inner()).clear();
    }

    pub fn media_keys(&self) -> impl Iterator<Item = &str> {
        self.responses.keys().map(String::as_str)
    }
}

impl ModelBackend for FixtureBackend {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.descriptor
    }

    fn max_in_flight(&self) -> Option<usize> {
        None
    }

    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, BackendError> {
        let start = Instant::now();
        let key = video_key(&request.media_ref);
        self.calls
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .push((key.to_string(), request.slot));
        let text = self
            .responses
            .get(key)
            .and_then(|m| m.get(&request.slot))
            .ok_or_else(|| BackendError::FixtureMissing {
                media: key.to_string(),
                slot: request.slot,
            })?;
        Ok(GenerationResponse {
            text: text.clone(),
            backend: self.descriptor.clone(),
            latency: start.elapsed(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpBackendConfig {
    pub base_url: String,
    pub endpoint: String,
    /// Environment variable holding a bearer token, if any.
    pub token_env: String,
    pub timeout_secs: u64,
    pub max_in_flight: usize,
    pub retries: u32,
    pub descriptor: BackendDescriptor,
}

impl Default for HttpBackendConfig {
    fn default() -> Self {
        HttpBackendConfig {
            base_url: "http://127.0.0.1:8000".into(),
            endpoint: "/generate".into(),
            token_env: "CURIO_BACKEND_TOKEN".into(),
            timeout_secs: 120,
            max_in_flight: 1,
            retries: 2,
            descriptor: BackendDescriptor::new("http", "native-video"),
        }
    }
}

#[derive(Serialize)]
struct WireMedia<'a> {
    path: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    frame_indices: Option<&'a [u64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    width: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    height: Option<u32>,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    prompt: &'a str,
    media: WireMedia<'a>,
    params: &'a GenerationParams,
}

#[derive(Deserialize)]
struct WireResponse {
    text: String,
}

/// POSTs `{prompt, media, params}` as JSON and reads `{text}` back.
pub struct HttpBackend {
    config: HttpBackendConfig,
    url: String,
    token: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(config: HttpBackendConfig) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| BackendError::Connection(e.to_string()))?;
        let token = std::env::var(&config.token_env).ok().filter(|t| !t.is_empty());
        let url = format!(
            "{}/{}",
            config.base_url.trim_end_matches('/'),
            config.endpoint.trim_start_matches('/')
        );
        Ok(HttpBackend {
            config,
            url,
            token,
            client,
        })
    }

    fn attempt(&self, request: &GenerationRequest) -> Result<String, BackendError> {
        let plan = request.frame_plan.as_ref();
        let body = WireRequest {
            prompt: &request.prompt,
            media: WireMedia {
                path: &request.media_ref,
                frame_indices: plan.map(|p| p.frame_indices.as_slice()),
                width: plan.map(|p| p.scaled_dimensions.0),
                height: plan.map(|p| p.scaled_dimensions.1),
            },
            params: &request.params,
        };
        let mut req = self.client.post(&self.url).json(&body);
        if let Some(token) = &self.token {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                BackendError::Timeout
            } else {
                BackendError::Connection(e.to_string())
            }
        })?;
        let status = resp.status();
        if !status.is_success() {
            let body = resp.text().unwrap_or_default();
            return Err(BackendError::Status {
                status: status.as_u16(),
                body,
            });
        }
        let wire: WireResponse = resp.json().map_err(|e| {
            if e.is_timeout() {
                BackendError::Timeout
            } else {
                BackendError::Protocol(e.to_string())
            }
        })?;
        Ok(wire.text)
    }
}

impl ModelBackend for HttpBackend {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.config.descriptor
    }

    fn max_in_flight(&self) -> Option<usize> {
        Some(self.config.max_in_flight.max(1))
    }

    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, BackendError> {
        let start = Instant::now();
        let mut attempt = 0;
        loop {
            match self.attempt(request) {
                Ok(text) => {
                    return Ok(GenerationResponse {
                        text,
                        backend: self.config.descriptor.clone(),
                        latency: start.elapsed(),
                    })
                }
                Err(e) if e.is_retriable() && attempt < self.config.retries => {
                    attempt += 1;
                    log::warn!("{} {}: {e}; retry {attempt}", request.media_ref, request.slot);
                    std::thread::sleep(Duration::from_millis(200 * attempt as u64));
                }
                Err(e) => return Err(e),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(media: &str, slot: PromptSlot) -> GenerationRequest {
        GenerationRequest {
            media_ref: media.into(),
            frame_plan: None,
            slot,
            prompt: "p".into(),
            params: GenerationParams::default(),
        }
    }

    #[test]
    fn fixture_lookup_and_stamping() {
        let b = FixtureBackend::parse(
            Path::new("vl2.json"),
            r#"{"_backend":{"name":"VL2-FT","modality_support":["video"],"quantised":true,"input_format_tag":"native-video"},
               "04_POTM":{"artist":"Michelangelo"}}"#,
        )
        .unwrap();
        let r = b.generate(&req("clips/04_POTM.mp4", PromptSlot::Artist)).unwrap();
        assert_eq!(r.text, "Michelangelo");
        assert_eq!(r.backend.input_format_tag, "native-video");
        assert_eq!(
            b.generate(&req("04_POTM.mp4", PromptSlot::Title)),
            Err(BackendError::FixtureMissing { media: "04_POTM".into(), slot: PromptSlot::Title })
        );
        assert!(b.generate(&req("nope.mp4", PromptSlot::Title)).is_err());
        assert_eq!(b.calls().len(), 3);
    }

    #[test]
    fn default_descriptor_from_file_name() {
        let b = FixtureBackend::parse(Path::new("dir/q2vl-zs.json"), "{}").unwrap();
        assert_eq!(b.descriptor().name, "q2vl-zs");
        assert!(FixtureBackend::parse(Path::new("x.json"), r#"{"a":{"bogus":"x"}}"#).is_err());
    }

    #[test]
    fn error_classes() {
        assert!(BackendError::Timeout.is_retriable());
        assert!(BackendError::Connection("refused".into()).is_retriable());
        assert!(BackendError::Status { status: 503, body: String::new() }.is_retriable());
        assert!(!BackendError::Status { status: 400, body: String::new() }.is_retriable());
        assert!(!BackendError::Protocol("x".into()).is_retriable());
    }
}
