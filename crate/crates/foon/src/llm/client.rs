//! Where generated text actually comes from: a live endpoint, a
//! directory of recordings, or a script. Record once against the real
//! service, then replay forever; the pipeline cannot tell the difference.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{GenerationRequest, GenerationResponse, LlmError};

/// Anything that can answer a sampling request. Implementations must be
/// safe to call from several threads at once.
pub trait GenerationClient: Sync {
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, LlmError>;
}

/// One recording: the request that was made and what came back.
#[derive(Serialize, Deserialize)]
struct Recording {
    request: GenerationRequest,
    response: GenerationResponse,
}

/// Replays recorded responses from a directory, addressed by request
/// digest. Unknown requests fail loudly instead of inventing text.
pub struct ReplayClient {
    dir: PathBuf,
}

impl ReplayClient {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ReplayClient { dir: dir.into() }
    }

    fn path_for(&self, request: &GenerationRequest) -> PathBuf {
        self.dir.join(format!("{}.json", request.digest()))
    }
}

impl GenerationClient for ReplayClient {
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, LlmError> {
        let path = self.path_for(request);
        let text = match std::fs::read_to_string(&path) {
            Ok(text) => text,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(LlmError::ReplayMiss {
                    digest: request.digest(),
                    model: request.model.clone(),
                })
            }
            Err(e) => return Err(e.into()),
        };
        let recording: Recording = serde_json::from_str(&text)?;
        Ok(recording.response)
    }
}

/// Wraps another client and writes every exchange into a replay
/// directory, one pretty-printed JSON file per request digest.
pub struct RecordingClient<C> {
    inner: C,
    dir: PathBuf,
    write_lock: Mutex<()>,
}

impl<C: GenerationClient> RecordingClient<C> {
    pub fn new(inner: C, dir: impl Into<PathBuf>) -> Self {
        RecordingClient {
            inner,
            dir: dir.into(),
            write_lock: Mutex::new(()),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

impl<C: GenerationClient> GenerationClient for RecordingClient<C> {
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, LlmError> {
        let response = self.inner.generate(request)?;
        let recording = Recording {
            request: request.clone(),
            response: response.clone(),
        };
        let text = serde_json::to_string_pretty(&recording)?;
        let _guard = self.write_lock.lock().expect("recording lock poisoned");
        std::fs::create_dir_all(&self.dir)?;
        std::fs::write(self.dir.join(format!("{}.json", request.digest())), text)?;
        Ok(response)
    }
}

/// Talks to a generation service over HTTP. The request body is the
/// [`GenerationRequest`] as JSON; the expected reply is a
/// [`GenerationResponse`] as JSON. The API key is read from the named
/// environment variable on every call and sent as a bearer token.
pub struct EndpointClient {
    url: String,
    api_key_env: String,
    http: reqwest::blocking::Client,
}

impl EndpointClient {
    pub fn new(url: impl Into<String>, api_key_env: impl Into<String>) -> Self {
        EndpointClient {
            url: url.into(),
            api_key_env: api_key_env.into(),
            http: reqwest::blocking::Client::new(),
        }
    }
}

impl GenerationClient for EndpointClient {
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, LlmError> {
        let key = std::env::var(&self.api_key_env)
            .map_err(|_| LlmError::MissingApiKey(self.api_key_env.clone()))?;
        let reply = self
            .http
            .post(&self.url)
            .bearer_auth(key)
            .json(request)
            .send()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        let status = reply.status();
        if !status.is_success() {
            let body = reply.text().unwrap_or_default();
            return Err(LlmError::Transport(format!(
                "endpoint returned {status}: {}",
                body.chars().take(200).collect::<String>()
            )));
        }
        reply
            .json::<GenerationResponse>()
            .map_err(|e| LlmError::Transport(format!("malformed endpoint reply: {e}")))
    }
}

/// Canned responses keyed by model and sample index. The stand-in for a
/// live model in tests and when recording fixtures.
#[derive(Default)]
pub struct ScriptedClient {
    responses: BTreeMap<(String, u32), String>,
}

impl ScriptedClient {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn script(&mut self, model: &str, sample_index: u32, text: &str) -> &mut Self {
        self.responses
            .insert((model.to_string(), sample_index), text.to_string());
        self
    }
}

impl GenerationClient for ScriptedClient {
    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, LlmError> {
        let key = (request.model.clone(), request.sample_index);
        match self.responses.get(&key) {
            Some(text) => Ok(GenerationResponse {
                model: request.model.clone(),
                text: text.clone(),
                finish_reason: "stop".to_string(),
            }),
            None => Err(LlmError::Transport(format!(
                "no scripted response for model {} sample {}",
                request.model, request.sample_index
            ))),
        }
    }
}
