//! Client for a Perspective-compatible comment-analysis endpoint.

use std::time::Duration;

use reqwest::blocking::Client;
use serde_json::{json, Value};

use crate::error::GatewayError;

const ROLE: &str = "toxicity";

pub struct PerspectiveClient {
    client: Client,
    endpoint: String,
    key: Option<String>,
}

impl PerspectiveClient {
    pub fn new(endpoint: &str, key_env: &str, timeout_ms: u64) -> Result<Self, GatewayError> {
        let client = Client::builder()
            .timeout(Duration::from_millis(timeout_ms))
            .build()
            .map_err(|e| GatewayError::Backend { role: ROLE.into(), attempts: 0, reason: e.to_string() })?;
        Ok(Self {
            client,
            endpoint: endpoint.to_string(),
            key: std::env::var(key_env).ok().filter(|k| !k.is_empty()),
        })
    }

    pub fn request_body(text: &str) -> Value {
        json!({
            "comment": {"text": text},
            "languages": ["en"],
            "requestedAttributes": {"TOXICITY": {}},
        })
    }

    /// `attributeScores.TOXICITY.summaryScore.value`, required in [0,1].
    pub fn parse_response(raw: &str) -> Result<f64, GatewayError> {
        let bad = |reason: &str| GatewayError::Parse { role: ROLE.into(), reason: reason.into(), raw: raw.into() };
        let v: Value = serde_json::from_str(raw).map_err(|e| bad(&e.to_string()))?;
        let score = v["attributeScores"]["TOXICITY"]["summaryScore"]["value"]
            .as_f64()
            .ok_or_else(|| bad("missing summaryScore.value"))?;
        if !(0.0..=1.0).contains(&score) {
            return Err(bad("score outside [0,1]"));
        }
        Ok(score)
    }

    pub fn score(&self, text: &str) -> Result<f64, GatewayError> {
        let mut call = self.client.post(&self.endpoint).json(&Self::request_body(text));
        if let Some(k) = &self.key {
            call = call.query(&[("key", k)]);
        }
        let fail = |reason: String| GatewayError::Backend { role: ROLE.into(), attempts: 1, reason };
        let resp = call.send().map_err(|e| fail(e.to_string()))?;
        let status = resp.status();
        let raw = resp.text().map_err(|e| fail(e.to_string()))?;
        if !status.is_success() {
            return Err(fail(format!("HTTP {status}: {raw}")));
        }
        Self::parse_response(&raw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_format() {
        let body = PerspectiveClient::request_body("hello");
        assert_eq!(body["comment"]["text"], "hello");
        assert!(body["requestedAttributes"]["TOXICITY"].is_object());
        let raw = r#"{"attributeScores":{"TOXICITY":{"summaryScore":{"value":0.42,"type":"PROBABILITY"}}}}"#;
        assert_eq!(PerspectiveClient::parse_response(raw).unwrap(), 0.42);
        assert!(PerspectiveClient::parse_response("{}").is_err());
    }
}
