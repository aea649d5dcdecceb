use std::path::PathBuf;
use std::thread;
use std::time::Duration;

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};

pub const API_KEY_ENV: &str = "KINGUIDE_PLANNER_KEY";

/// A chat-completion endpoint speaking the common
/// `{"model", "messages"} -> {"choices": [{"message": {"content"}}]}` shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    pub url: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub max_attempts: u32,
    pub backoff_ms: u64,
    pub temperature: f64,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            url: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4".into(),
            api_key_env: API_KEY_ENV.into(),
            timeout_secs: 120,
            max_attempts: 3,
            backoff_ms: 500,
            temperature: 0.7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanSource {
    /// Read a stored completion verbatim.
    Fixture(PathBuf),
    Endpoint(EndpointConfig),
}

/// Returns the raw completion text for `prompt`.
pub fn fetch_plans(prompt: &str, source: &PlanSource) -> Result<String> {
    match source {
        PlanSource::Fixture(path) => {
            if !path.exists() {
                return Err(Error::FixtureMissing(path.clone()));
            }
            std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
        }
        PlanSource::Endpoint(cfg) => fetch_from_endpoint(prompt, cfg),
    }
}

enum Attempt {
    Done(String),
    Retry(String),
    Fail(Error),
}

fn fetch_from_endpoint(prompt: &str, cfg: &EndpointConfig) -> Result<String> {
    let key = std::env::var(&cfg.api_key_env).ok();
    let client = reqwest::blocking::Client::builder()
        .timeout(Duration::from_secs(cfg.timeout_secs))
        .build()
        .map_err(|e| Error::Transport(e.to_string()))?;
    let body = json!({
        "model": cfg.model,
        "temperature": cfg.temperature,
        "messages": [{"role": "user", "content": prompt}],
    });

    let attempts = cfg.max_attempts.max(1);
    let mut last = String::new();
    for attempt in 0..attempts {
        if attempt > 0 {
            let wait = cfg.backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
            debug!("retrying planner request in {wait} ms");
            thread::sleep(Duration::from_millis(wait));
        }
        let mut req = client.post(&cfg.url).json(&body);
        if let Some(k) = &key {
            req = req.bearer_auth(k);
        }
        match send_once(req) {
            Attempt::Done(text) => return Ok(text),
            Attempt::Fail(e) => return Err(e),
            Attempt::Retry(msg) => {
                warn!("planner request attempt {} failed: {msg}", attempt + 1);
                last = msg;
            }
        }
    }
    Err(Error::Transport(format!(
        "gave up after {attempts} attempts: {last}"
    )))
}

fn send_once(req: reqwest::blocking::RequestBuilder) -> Attempt {
    let resp = match req.send() {
        Ok(r) => r,
        Err(e) => return Attempt::Retry(e.to_string()),
    };
    let status = resp.status();
    if status.as_u16() == 401 || status.as_u16() == 403 {
        return Attempt::Fail(Error::Auth(status.as_u16()));
    }
    if status.is_server_error() || status.as_u16() == 429 {
        return Attempt::Retry(format!("status {status}"));
    }
    let text = match resp.text() {
        Ok(t) => t,
        Err(e) => return Attempt::Retry(e.to_string()),
    };
    if !status.is_success() {
        return Attempt::Fail(Error::Transport(format!("status {status}: {text}")));
    }
    if text.trim().is_empty() {
        return Attempt::Fail(Error::Transport("empty response body".into()));
    }
    match extract_content(&text) {
        Some(content) if !content.trim().is_empty() => Attempt::Done(content),
        Some(_) => Attempt::Fail(Error::Transport("empty completion".into())),
        None => Attempt::Fail(Error::Transport("response has no choices[0].message.content".into())),
    }
}

fn extract_content(body: &str) -> Option<String> {
    let v: Value = serde_json::from_str(body).ok()?;
    v.get("choices")?
        .get(0)?
        .get("message")?
        .get("content")?
        .as_str()
        .map(str::to_string)
}
