//! Text-generation and grading backends.
//!
//! Everything that would be written or judged by a language model goes
//! through [`Backend`]. The scripted backend is a pure function of the
//! request; the remote backend speaks the chat-completion wire format.

mod prompts;
mod remote;
mod scripted;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use prompts::{PromptLibrary, Template};
pub use remote::RemoteBackend;
pub use scripted::ScriptedBackend;

use crate::config::{BackendConfig, BackendKind};
use crate::error::{GatewayError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleTag {
    OrdinaryUser,
    Malicious,
    Analyst,
    Strategist,
    LeaderCreate,
    UscEvaluate,
    Amplifier,
    Factcheck,
    GraderSentiment,
    GraderExtremity,
    GraderAqs,
    GraderFallacy,
    GraderEvidence,
    Probe,
    Reflection,
}

impl RoleTag {
    pub const ALL: [RoleTag; 15] = [
        RoleTag::OrdinaryUser,
        RoleTag::Malicious,
        RoleTag::Analyst,
        RoleTag::Strategist,
        RoleTag::LeaderCreate,
        RoleTag::UscEvaluate,
        RoleTag::Amplifier,
        RoleTag::Factcheck,
        RoleTag::GraderSentiment,
        RoleTag::GraderExtremity,
        RoleTag::GraderAqs,
        RoleTag::GraderFallacy,
        RoleTag::GraderEvidence,
        RoleTag::Probe,
        RoleTag::Reflection,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RoleTag::OrdinaryUser => "ordinary_user",
            RoleTag::Malicious => "malicious",
            RoleTag::Analyst => "analyst",
            RoleTag::Strategist => "strategist",
            RoleTag::LeaderCreate => "leader_create",
            RoleTag::UscEvaluate => "usc_evaluate",
            RoleTag::Amplifier => "amplifier",
            RoleTag::Factcheck => "factcheck",
            RoleTag::GraderSentiment => "grader_sentiment",
            RoleTag::GraderExtremity => "grader_extremity",
            RoleTag::GraderAqs => "grader_aqs",
            RoleTag::GraderFallacy => "grader_fallacy",
            RoleTag::GraderEvidence => "grader_evidence",
            RoleTag::Probe => "probe",
            RoleTag::Reflection => "reflection",
        }
    }

    pub fn is_grader(self) -> bool {
        matches!(
            self,
            RoleTag::GraderSentiment
                | RoleTag::GraderExtremity
                | RoleTag::GraderAqs
                | RoleTag::GraderFallacy
                | RoleTag::GraderEvidence
        )
    }
}

impl fmt::Display for RoleTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub role: RoleTag,
    /// Identifier of the requesting agent; batch results are applied in
    /// this order.
    pub agent_id: String,
    pub system_text: String,
    pub user_text: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub model_tag: String,
    /// Structured side channel read by the scripted backend only; never
    /// sent over the wire.
    #[serde(default)]
    pub hints: BTreeMap<String, String>,
}

impl GenerationRequest {
    pub fn new(role: RoleTag, agent_id: impl Into<String>, system_text: String, user_text: String) -> Self {
        Self {
            role,
            agent_id: agent_id.into(),
            system_text,
            user_text,
            temperature: 0.0,
            max_tokens: 512,
            model_tag: String::new(),
            hints: BTreeMap::new(),
        }
    }

    pub fn hint(mut self, key: &str, value: impl ToString) -> Self {
        self.hints.insert(key.to_string(), value.to_string());
        self
    }

    pub fn hint_f64(&self, key: &str) -> Option<f64> {
        self.hints.get(key).and_then(|v| v.parse().ok())
    }

    /// Digest of everything that determines a scripted response.
    pub fn digest(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(self.role.as_str().as_bytes());
        for part in [&self.agent_id, &self.system_text, &self.user_text, &self.model_tag] {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part.as_bytes());
        }
        h.update(self.temperature.to_le_bytes());
        for (k, v) in &self.hints {
            h.update((k.len() as u64).to_le_bytes());
            h.update(k.as_bytes());
            h.update((v.len() as u64).to_le_bytes());
            h.update(v.as_bytes());
        }
        h.finalize().into()
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        let reject = |reason: &str| {
            Err(GatewayError::Validation {
                role: self.role.to_string(),
                reason: reason.to_string(),
            })
        };
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return reject("temperature must be finite and >= 0");
        }
        if self.role.is_grader() && self.temperature != 0.0 {
            return reject("grader requests must use temperature 0");
        }
        if self.max_tokens == 0 {
            return reject("max_tokens must be >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationResponse {
    pub text: String,
    pub finish_reason: String,
}

pub type Completion = Result<GenerationResponse, GatewayError>;

pub trait Backend: Send + Sync {
    fn complete(&self, request: &GenerationRequest) -> Completion;

    /// Responses in request order. Failures are isolated per entry.
    fn complete_batch(&self, requests: &[GenerationRequest]) -> Vec<Completion> {
        requests.iter().map(|r| self.complete(r)).collect()
    }

    fn kind(&self) -> BackendKind;

    /// Requests served so far, retries excluded.
    fn request_count(&self) -> u64;
}

pub fn build_backend(cfg: &BackendConfig) -> Result<Box<dyn Backend>> {
    cfg.validate()?;
    Ok(match cfg.kind {
        BackendKind::Scripted => Box::new(ScriptedBackend::new()),
        BackendKind::Remote => Box::new(RemoteBackend::from_config(cfg)?),
    })
}

/// Strips a Markdown code fence and returns the first JSON object in `text`.
pub fn extract_json(text: &str) -> Option<serde_json::Value> {
    let start = text.find('{')?;
    let end = text.rfind('}')?;
    if end < start {
        return None;
    }
    serde_json::from_str(&text[start..=end]).ok()
}

/// Parses the JSON object in a response or returns a parse error carrying
/// the raw payload.
pub fn parse_json(role: RoleTag, resp: &GenerationResponse) -> Result<serde_json::Value, GatewayError> {
    extract_json(&resp.text).ok_or_else(|| GatewayError::Parse {
        role: role.to_string(),
        reason: "no JSON object in response".into(),
        raw: resp.text.clone(),
    })
}

/// One paragraph summarising a user's recent activity. An empty memory
/// list yields a fixed sentence without a backend call.
pub fn memory_reflection(
    backend: &dyn Backend,
    prompts: &PromptLibrary,
    user_id: &str,
    persona: &str,
    memories: &[String],
    temperature: f64,
    model_tag: &str,
) -> Result<String, GatewayError> {
    if memories.is_empty() {
        return Ok(scripted::NO_PATTERNS.to_string());
    }
    let listing: String = memories
        .iter()
        .enumerate()
        .map(|(i, m)| format!("{}. {}\n", i + 1, m))
        .collect();
    let mut vars = BTreeMap::new();
    vars.insert("persona", persona.to_string());
    vars.insert("memories", listing);
    let (system, user) = prompts.render(RoleTag::Reflection, &vars)?;
    let mut req = GenerationRequest::new(RoleTag::Reflection, user_id, system, user)
        .hint("memory_count", memories.len());
    req.temperature = temperature;
    req.model_tag = model_tag.to_string();
    let text = backend.complete(&req)?.text;
    Ok(text.trim().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grader(temp: f64) -> GenerationRequest {
        let mut r = GenerationRequest::new(RoleTag::GraderSentiment, "g", "s".into(), "u".into());
        r.temperature = temp;
        r
    }

    #[test]
    fn grader_temperature_gate() {
        assert!(grader(0.0).validate().is_ok());
        let err = grader(0.7).validate().unwrap_err();
        assert!(matches!(err, GatewayError::Validation { .. }));
    }

    #[test]
    fn role_tags_round_trip_through_serde() {
        for r in RoleTag::ALL {
            let s = serde_json::to_string(&r).unwrap();
            assert_eq!(s, format!("\"{}\"", r.as_str()));
        }
    }

    #[test]
    fn digest_covers_hints() {
        let a = grader(0.0);
        let b = grader(0.0).hint("stance", 0.5);
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest(), grader(0.0).digest());
    }

    #[test]
    fn json_extraction() {
        let v = extract_json("```json\n{\"label\": \"Neutral\"}\n```").unwrap();
        assert_eq!(v["label"], "Neutral");
        assert!(extract_json("no object").is_none());
    }

    #[test]
    fn empty_reflection_skips_backend() {
        let b = ScriptedBackend::new();
        let text = memory_reflection(&b, &PromptLibrary::bundled(), "u1", "p", &[], 0.7, "m").unwrap();
        assert_eq!(text, scripted::NO_PATTERNS);
        assert_eq!(b.request_count(), 0);
    }
}
