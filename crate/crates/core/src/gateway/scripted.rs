//! Deterministic template backend.
//!
//! Output depends only on the request. Numeric intent travels in
//! `GenerationRequest::hints`; the digest of the whole request picks among
//! phrasings so that equal requests give equal text.

use std::sync::atomic::{AtomicU64, Ordering};

use serde_json::json;

use super::{Backend, Completion, GenerationRequest, GenerationResponse, RoleTag};
use crate::config::BackendKind;
use crate::metrics::labels::{ExtremityLabel, SentimentLabel};

pub(crate) const NO_PATTERNS: &str =
    "Looking back, there are no notable patterns in my recent activity yet.";

#[derive(Debug, Default)]
pub struct ScriptedBackend {
    served: AtomicU64,
}

impl ScriptedBackend {
    pub fn new() -> Self {
        Self::default()
    }
}

struct Picker {
    bytes: [u8; 32],
    at: usize,
}

impl Picker {
    fn pick<'a>(&mut self, options: &[&'a str]) -> &'a str {
        let b = self.bytes[self.at % 32] as usize;
        self.at += 1;
        options[b % options.len()]
    }
}

const HOSTILE: &[&str] = &[
    "This is a disgrace and everyone involved should be ashamed.",
    "Total scam. They lied to us again about {topic}.",
    "Corrupt from top to bottom, I am furious about {topic}.",
    "Pathetic. Anyone defending this on {topic} is part of the problem.",
];
const SKEPTICAL: &[&str] = &[
    "I don't buy the official line on {topic}; something doesn't add up.",
    "Hard to trust anything said about {topic} these days.",
    "Not convinced. The story on {topic} keeps changing.",
    "I have real doubts about how {topic} is being handled.",
];
const NEUTRAL: &[&str] = &[
    "Curious to see more details on {topic} before deciding.",
    "There are reasonable points on both sides of {topic}.",
    "Does anyone have the full numbers on {topic}?",
    "Waiting for more information about {topic}.",
];
const SUPPORTIVE: &[&str] = &[
    "Good to see some progress on {topic}.",
    "This seems like a sensible step for {topic}.",
    "I'm cautiously optimistic about {topic}.",
    "Glad people are taking {topic} seriously.",
];
const MALICIOUS: &[&str] = &[
    "Wake up, sheep! The {topic} story is a hoax pushed by liars.",
    "Corrupt traitors are lying about {topic} and you're swallowing the propaganda.",
    "Disgusting. Every official talking about {topic} is a fraud.",
    "This {topic} garbage is rigged and the cowards behind it know it.",
    "Burn it all down, the {topic} cover-up is pure poison.",
    "Only idiots believe the {topic} propaganda. Total betrayal.",
];
const AMPLIFIER: &[&str] = &[
    "Speaking as one of the {role} here, this is the most useful take on {topic} in the thread.",
    "Agree with this. As one of the {role} I'd add that the details on {topic} matter more than the headlines.",
    "Thanks for laying this out calmly. Plenty of the {role} I know see {topic} the same way.",
    "This matches what I've seen. The {role} in my circle appreciate a level-headed view on {topic}.",
];
const LEADER: &[&str] = &[
    "Let's slow down on {topic} and look at what is actually known.",
    "Lots of strong feelings about {topic} here, which is understandable. Here is what the record shows.",
    "Before we assume the worst about {topic}, it is worth checking the facts.",
];

fn fill(template: &str, req: &GenerationRequest) -> String {
    let topic = req.hints.get("topic").map(String::as_str).unwrap_or("this");
    let role = req.hints.get("role_identity").map(String::as_str).unwrap_or("regular readers");
    template.replace("{topic}", topic).replace("{role}", &role.replace('_', " "))
}

fn evidence_suffix(req: &GenerationRequest) -> String {
    match (req.hints.get("evidence").map(String::as_str), req.hints.get("evidence_id")) {
        (Some("true"), Some(id)) => format!(" Source: https://evidence.example.org/{id}"),
        _ => String::new(),
    }
}

fn generate(req: &GenerationRequest) -> String {
    let mut pick = Picker { bytes: req.digest(), at: 0 };
    let stance = req.hint_f64("stance").unwrap_or(0.0);
    let sentiment = req.hint_f64("sentiment").unwrap_or(0.5);
    match req.role {
        RoleTag::OrdinaryUser => {
            let bank = if stance <= -0.6 {
                HOSTILE
            } else if stance <= -0.2 {
                SKEPTICAL
            } else if stance < 0.2 {
                NEUTRAL
            } else {
                SUPPORTIVE
            };
            fill(pick.pick(bank), req)
        }
        RoleTag::Malicious => fill(pick.pick(MALICIOUS), req),
        RoleTag::Amplifier => format!("{}{}", fill(pick.pick(AMPLIFIER), req), evidence_suffix(req)),
        RoleTag::LeaderCreate => {
            let claim = req.hints.get("claim").cloned().unwrap_or_default();
            let angle = req.hints.get("angle").map(String::as_str).unwrap_or("evidence");
            let opener = fill(pick.pick(LEADER), req);
            let body = match (angle, claim.is_empty()) {
                (_, true) => "Disagreement is fine, but let's keep it to what can be checked.".to_string(),
                ("evidence", false) => claim.clone(),
                ("empathy", false) => format!("Many of us share the worry. Still, {}", lower_first(&claim)),
                (_, false) => format!("Most of us want the same outcome, and {}", lower_first(&claim)),
            };
            format!("{opener} {body}{}", evidence_suffix(req))
        }
        RoleTag::Analyst => {
            let view = req
                .hints
                .get("core_viewpoint")
                .cloned()
                .unwrap_or_else(|| "The thread is split over the post's claims.".into());
            json!({ "core_viewpoint": view }).to_string()
        }
        RoleTag::Strategist => json!({
            "leader_instruction": {
                "tone": "calm",
                "style": "evidence-led",
                "key_points": [req.hints.get("claim").cloned().unwrap_or_default()],
                "target_audience": "undecided readers",
                "content_length": "short"
            }
        })
        .to_string(),
        RoleTag::UscEvaluate => {
            let get = |k: &str| req.hint_f64(k).unwrap_or(3.0).clamp(1.0, 5.0) as i64;
            json!({
                "persuasiveness": get("persuasiveness"),
                "logic": get("logic"),
                "readability": get("readability"),
                "relevance": get("relevance"),
                "impact": get("impact"),
            })
            .to_string()
        }
        RoleTag::Factcheck => {
            let (label, conf) = match req.hints.get("polarity").map(String::as_str) {
                Some("adversarial") => ("false", req.hint_f64("confidence").unwrap_or(0.9)),
                Some("clarification") => ("true", 0.95),
                _ => ("unverified", 0.5),
            };
            json!({
                "label": label,
                "confidence": conf,
                "explanation": format!("Scripted verdict for a {} item.", req.hints.get("polarity").map(String::as_str).unwrap_or("benign")),
                "sources": ["scripted-oracle"],
            })
            .to_string()
        }
        RoleTag::GraderSentiment => json!({ "label": SentimentLabel::from_unit(sentiment).as_str() }).to_string(),
        RoleTag::GraderExtremity => json!({ "label": ExtremityLabel::from_unit(stance.abs()).as_str() }).to_string(),
        RoleTag::GraderAqs => json!({ "score": req.hint_f64("aqs").unwrap_or(0.5) }).to_string(),
        RoleTag::GraderFallacy => {
            let fallacious = req.hints.get("fallacious").map(String::as_str) == Some("true");
            json!({
                "fallacious": if fallacious { "Yes" } else { "No" },
                "type": if fallacious { "Appeal to Emotion / Emotional Language" } else { "" },
            })
            .to_string()
        }
        RoleTag::GraderEvidence => {
            let yes = req.hints.get("evidence").map(String::as_str) == Some("true");
            json!({ "evidence": if yes { "Yes" } else { "No" } }).to_string()
        }
        RoleTag::Probe => {
            let lean = if stance < -0.2 {
                "I remain skeptical of the post and the people behind it"
            } else if stance > 0.2 {
                "I mostly accept the post at face value"
            } else {
                "I am undecided about the post"
            };
            let mood = if sentiment < 0.35 {
                "It leaves me frustrated."
            } else if sentiment > 0.65 {
                "I feel fairly positive overall."
            } else {
                "My feelings about it are mixed."
            };
            json!({ "stance": stance, "sentiment": sentiment, "rationale": format!("{lean}. {mood}") }).to_string()
        }
        RoleTag::Reflection => {
            let n = req.hints.get("memory_count").map(String::as_str).unwrap_or("0");
            if n == "0" {
                NO_PATTERNS.to_string()
            } else {
                format!(
                    "Looking back over my last {n} interactions, I mostly react to the most-liked comments \
                     and I engage more when a thread feels heated. I want to read further before replying."
                )
            }
        }
    }
}

fn lower_first(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_lowercase().chain(c).collect(),
        None => String::new(),
    }
}

impl Backend for ScriptedBackend {
    fn complete(&self, request: &GenerationRequest) -> Completion {
        request.validate()?;
        self.served.fetch_add(1, Ordering::Relaxed);
        Ok(GenerationResponse {
            text: generate(request),
            finish_reason: "stop".into(),
        })
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Scripted
    }

    fn request_count(&self) -> u64 {
        self.served.load(Ordering::Relaxed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Lexicon;

    fn req(role: RoleTag) -> GenerationRequest {
        GenerationRequest::new(role, "a1", "sys".into(), "user".into()).hint("topic", "energy")
    }

    #[test]
    fn pure_function_of_request() {
        let b = ScriptedBackend::new();
        for role in RoleTag::ALL {
            let r = req(role).hint("stance", -0.9);
            assert_eq!(b.complete(&r).unwrap(), b.complete(&r).unwrap(), "{role}");
        }
        assert_eq!(b.request_count(), 2 * RoleTag::ALL.len() as u64);
    }

    #[test]
    fn batch_equals_sequential() {
        let b = ScriptedBackend::new();
        let reqs: Vec<_> = (0..8).map(|i| req(RoleTag::Amplifier).hint("i", i)).collect();
        let seq: Vec<_> = reqs.iter().map(|r| b.complete(r).unwrap()).collect();
        let batch: Vec<_> = b.complete_batch(&reqs).into_iter().map(Result::unwrap).collect();
        assert_eq!(seq, batch);
    }

    #[test]
    fn malicious_text_always_hits_lexicon() {
        let lex = Lexicon::bundled();
        let b = ScriptedBackend::new();
        for i in 0..40 {
            let t = b.complete(&req(RoleTag::Malicious).hint("i", i)).unwrap().text;
            assert!(lex.flags(&t), "{t}");
        }
    }

    #[test]
    fn amplifier_text_is_clean() {
        let lex = Lexicon::bundled();
        let b = ScriptedBackend::new();
        for i in 0..40 {
            let t = b.complete(&req(RoleTag::Amplifier).hint("i", i)).unwrap().text;
            assert!(!lex.flags(&t), "{t}");
        }
    }

    #[test]
    fn rejects_hot_grader() {
        let b = ScriptedBackend::new();
        let mut r = req(RoleTag::GraderAqs);
        r.temperature = 0.2;
        assert!(b.complete(&r).is_err());
    }
}
