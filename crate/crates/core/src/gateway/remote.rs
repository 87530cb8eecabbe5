//! Chat-completion HTTP backend with bounded retries.

use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::{json, Value};

use super::{Backend, Completion, GenerationRequest, GenerationResponse};
use crate::config::{BackendConfig, BackendKind};
use crate::error::{GatewayError, Result, SimError};

pub struct RemoteBackend {
    client: Client,
    endpoint: String,
    token: Option<String>,
    max_retries: u32,
    backoff_base: Duration,
    parallelism: usize,
    served: AtomicU64,
}

enum Attempt {
    Done(GenerationResponse),
    Retry(String),
    Fatal(GatewayError),
}

impl RemoteBackend {
    pub fn from_config(cfg: &BackendConfig) -> Result<Self> {
        let endpoint = cfg
            .endpoint
            .clone()
            .filter(|e| !e.is_empty())
            .ok_or_else(|| SimError::InvalidConfig("remote backend requires an endpoint".into()))?;
        let client = Client::builder()
            .timeout(Duration::from_millis(cfg.timeout_ms))
            .build()
            .map_err(|e| SimError::InvalidConfig(format!("http client: {e}")))?;
        let token = std::env::var(&cfg.auth_env).ok().filter(|t| !t.is_empty());
        if token.is_none() {
            log::warn!("environment variable {} is unset; sending requests without a bearer token", cfg.auth_env);
        }
        Ok(Self {
            client,
            endpoint,
            token,
            max_retries: cfg.max_retries,
            backoff_base: Duration::from_millis(cfg.backoff_base_ms),
            parallelism: cfg.batch_parallelism.max(1),
            served: AtomicU64::new(0),
        })
    }

    fn body(req: &GenerationRequest) -> Value {
        json!({
            "model": req.model_tag,
            "messages": [
                {"role": "system", "content": req.system_text},
                {"role": "user", "content": req.user_text},
            ],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        })
    }

    fn attempt(&self, req: &GenerationRequest) -> Attempt {
        let mut call = self.client.post(&self.endpoint).json(&Self::body(req));
        if let Some(t) = &self.token {
            call = call.bearer_auth(t);
        }
        let resp = match call.send() {
            Ok(r) => r,
            Err(e) if e.is_builder() => {
                return Attempt::Fatal(GatewayError::Backend {
                    role: req.role.to_string(),
                    attempts: 1,
                    reason: e.to_string(),
                })
            }
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = resp.status();
        let raw = match resp.text() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        if status.is_server_error() || status == StatusCode::TOO_MANY_REQUESTS {
            return Attempt::Retry(format!("HTTP {status}"));
        }
        if !status.is_success() {
            return Attempt::Fatal(GatewayError::Backend {
                role: req.role.to_string(),
                attempts: 1,
                reason: format!("HTTP {status}: {raw}"),
            });
        }
        match parse_completion(&raw) {
            Some(r) => Attempt::Done(r),
            None => Attempt::Fatal(GatewayError::Parse {
                role: req.role.to_string(),
                reason: "missing choices[0].message.content".into(),
                raw,
            }),
        }
    }
}

fn parse_completion(raw: &str) -> Option<GenerationResponse> {
    let v: Value = serde_json::from_str(raw).ok()?;
    let choice = v.get("choices")?.get(0)?;
    let text = choice.get("message")?.get("content")?.as_str()?.to_string();
    let finish_reason = choice
        .get("finish_reason")
        .and_then(Value::as_str)
        .unwrap_or("stop")
        .to_string();
    Some(GenerationResponse { text, finish_reason })
}

impl Backend for RemoteBackend {
    fn complete(&self, request: &GenerationRequest) -> Completion {
        request.validate()?;
        self.served.fetch_add(1, Ordering::Relaxed);
        let mut last = String::new();
        for attempt in 0..=self.max_retries {
            if attempt > 0 {
                std::thread::sleep(self.backoff_base * 2u32.saturating_pow(attempt - 1));
            }
            match self.attempt(request) {
                Attempt::Done(r) => return Ok(r),
                Attempt::Fatal(GatewayError::Backend { role, reason, .. }) => {
                    return Err(GatewayError::Backend { role, attempts: attempt + 1, reason })
                }
                Attempt::Fatal(e) => {
                    log::error!("{e}");
                    return Err(e);
                }
                Attempt::Retry(why) => {
                    log::warn!("{} request attempt {} failed: {why}", request.role, attempt + 1);
                    last = why;
                }
            }
        }
        Err(GatewayError::Backend {
            role: request.role.to_string(),
            attempts: self.max_retries + 1,
            reason: last,
        })
    }

    /// Runs up to `batch_parallelism` requests at once; results are stored
    /// by request index.
    fn complete_batch(&self, requests: &[GenerationRequest]) -> Vec<Completion> {
        let next = AtomicUsize::new(0);
        let slots: Vec<Mutex<Option<Completion>>> = requests.iter().map(|_| Mutex::new(None)).collect();
        let workers = self.parallelism.min(requests.len());
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= requests.len() {
                        break;
                    }
                    let out = self.complete(&requests[i]);
                    *slots[i].lock().unwrap() = Some(out);
                });
            }
        });
        slots
            .into_iter()
            .map(|m| m.into_inner().unwrap().expect("every slot filled"))
            .collect()
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Remote
    }

    fn request_count(&self) -> u64 {
        self.served.load(Ordering::Relaxed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_chat_completion_payload() {
        let raw = r#"{"choices":[{"message":{"role":"assistant","content":"hi"},"finish_reason":"length"}]}"#;
        let r = parse_completion(raw).unwrap();
        assert_eq!(r.text, "hi");
        assert_eq!(r.finish_reason, "length");
        assert!(parse_completion(r#"{"choices":[]}"#).is_none());
    }

    #[test]
    fn requires_endpoint() {
        let cfg = BackendConfig { kind: BackendKind::Remote, ..BackendConfig::default() };
        assert!(RemoteBackend::from_config(&cfg).is_err());
    }
}
