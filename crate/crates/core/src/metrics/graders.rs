//! Per-comment graders.
//!
//! A grade holds one optional value per metric; `None` marks a missing
//! grade, which snapshot means skip.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::labels::{self, ExtremityLabel, SentimentLabel};
use super::lexicon::Lexicon;
use super::perspective::PerspectiveClient;
use crate::error::GatewayError;
use crate::gateway::{parse_json, Backend, GenerationRequest, PromptLibrary, RoleTag};
use crate::social::Comment;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CommentGrade {
    pub sentiment: Option<f64>,
    pub toxicity: Option<f64>,
    pub extremity: Option<f64>,
    pub aqs: Option<f64>,
    pub fallacious: Option<bool>,
    pub evidence: Option<bool>,
}

pub trait Grader: Send + Sync {
    /// Grades in input order.
    fn grade_batch(&self, comments: &[&Comment]) -> Vec<CommentGrade>;
}

/// `clamp(0.3 + 0.3·evidence + 0.2·(1−|stance|) + 0.2·sentiment·(1−toxicity))`.
pub fn aqs_rubric(evidence: bool, stance: f64, sentiment: f64, toxicity: f64) -> f64 {
    let ev = if evidence { 1.0 } else { 0.0 };
    (0.3 + 0.3 * ev + 0.2 * (1.0 - stance.abs()) + 0.2 * sentiment * (1.0 - toxicity)).clamp(0.0, 1.0)
}

pub const SCRIPTED_FALLACY: &str = "Appeal to Emotion / Emotional Language";

/// Fallacious iff toxic, or very extreme without evidence.
pub fn fallacy_rule(toxicity: f64, stance: f64, evidence: bool) -> Option<&'static str> {
    (toxicity > 0.5 || (stance.abs() > 0.8 && !evidence)).then_some(SCRIPTED_FALLACY)
}

fn evidence_patterns() -> &'static [Regex] {
    static RE: OnceLock<Vec<Regex>> = OnceLock::new();
    RE.get_or_init(|| {
        [
            // Explicit link.
            r"(?i)\bhttps?://[^\s]+|\bwww\.[a-z0-9-]+\.[a-z]{2,}",
            // Attribution to a named source.
            r"\b(?:[Aa]ccording to|[Rr]eported by|[Pp]ublished by|[Dd]ata from|[Ff]igures from)\s+(?:the\s+)?[A-Z][A-Za-z]+",
            // Acronym organisation with a document noun.
            r"\b[A-Z]{2,}\b(?:'s)?\s+(?:\d{4}\s+)?(?:report|study|survey|dataset|data|audit|bulletin|filing)\b",
            // Bill, statute or case identifiers.
            r"\b(?:H\.?R\.?|S\.?B\.?|A\.?B\.?|Bill|Act|Case|Docket)\s*(?:No\.?\s*)?\d+",
            r"\b[A-Z][a-z]+ v\.? [A-Z][a-z]+",
            // Quote attributed to a named speaker.
            r#""[^"]{4,}"\s*,?\s*(?:said|says|wrote|stated|testified)\s+[A-Z][a-z]+"#,
            r#"\b[A-Z][a-z]+ [A-Z][a-z]+ (?:said|says|wrote|stated|testified)[,:]?\s*""#,
        ]
        .iter()
        .map(|p| Regex::new(p).expect("valid pattern"))
        .collect()
    })
}

/// Whether the text carries at least one checkable pointer.
pub fn detect_evidence(text: &str) -> bool {
    evidence_patterns().iter().any(|re| re.is_match(text))
}

#[derive(Debug, Clone)]
pub enum ToxicitySource {
    /// Read the comment's stored toxicity.
    Attribute,
    /// Lexicon hit fraction over the comment text.
    Lexicon(Lexicon),
}

/// Grades from stored attributes. Sentiment and extremity are snapped to
/// their five-class labels before mapping to scores.
#[derive(Debug, Clone)]
pub struct ScriptedGrader {
    pub toxicity: ToxicitySource,
}

impl Default for ScriptedGrader {
    fn default() -> Self {
        Self {
            toxicity: ToxicitySource::Attribute,
        }
    }
}

impl ScriptedGrader {
    pub fn grade(&self, c: &Comment) -> CommentGrade {
        let toxicity = match &self.toxicity {
            ToxicitySource::Attribute => c.toxicity,
            ToxicitySource::Lexicon(lex) => lex.toxicity(&c.text),
        };
        CommentGrade {
            sentiment: Some(SentimentLabel::from_unit(c.sentiment).score()),
            toxicity: Some(toxicity.clamp(0.0, 1.0)),
            extremity: Some(ExtremityLabel::from_unit(c.stance.abs()).score()),
            aqs: Some(aqs_rubric(c.evidence, c.stance, c.sentiment, c.toxicity)),
            fallacious: Some(fallacy_rule(c.toxicity, c.stance, c.evidence).is_some()),
            evidence: Some(c.evidence),
        }
    }
}

impl Grader for ScriptedGrader {
    fn grade_batch(&self, comments: &[&Comment]) -> Vec<CommentGrade> {
        comments.iter().map(|c| self.grade(c)).collect()
    }
}

/// Grades comment text through the gateway at temperature 0. Results are
/// cached by text so a comment is graded once per run.
pub struct RemoteGrader<'a> {
    backend: &'a dyn Backend,
    prompts: &'a PromptLibrary,
    model_tag: String,
    max_tokens: u32,
    toxicity: Option<PerspectiveClient>,
    lexicon: Lexicon,
    cache: Mutex<HashMap<String, CommentGrade>>,
}

const GRADER_ROLES: [RoleTag; 5] = [
    RoleTag::GraderSentiment,
    RoleTag::GraderExtremity,
    RoleTag::GraderAqs,
    RoleTag::GraderFallacy,
    RoleTag::GraderEvidence,
];

impl<'a> RemoteGrader<'a> {
    pub fn new(
        backend: &'a dyn Backend,
        prompts: &'a PromptLibrary,
        model_tag: &str,
        max_tokens: u32,
        toxicity: Option<PerspectiveClient>,
    ) -> Self {
        Self {
            backend,
            prompts,
            model_tag: model_tag.to_string(),
            max_tokens,
            toxicity,
            lexicon: Lexicon::bundled(),
            cache: Mutex::new(HashMap::new()),
        }
    }

    fn request(&self, role: RoleTag, c: &Comment) -> Result<GenerationRequest, GatewayError> {
        let mut vars = std::collections::BTreeMap::new();
        vars.insert("text", c.text.clone());
        vars.insert("topic", c.post_id.clone());
        vars.insert("fallacy_types", labels::FALLACY_TYPES.join("\n"));
        let (system, user) = self.prompts.render(role, &vars)?;
        let mut req = GenerationRequest::new(role, c.id.clone(), system, user)
            .hint("stance", c.stance)
            .hint("sentiment", c.sentiment)
            .hint("evidence", c.evidence)
            .hint("aqs", aqs_rubric(c.evidence, c.stance, c.sentiment, c.toxicity))
            .hint("fallacious", fallacy_rule(c.toxicity, c.stance, c.evidence).is_some());
        req.temperature = 0.0;
        req.max_tokens = self.max_tokens;
        req.model_tag = self.model_tag.clone();
        Ok(req)
    }

    fn toxicity_of(&self, text: &str) -> Option<f64> {
        match &self.toxicity {
            Some(client) => match client.score(text) {
                Ok(v) => Some(v),
                Err(e) => {
                    log::warn!("toxicity scorer failed: {e}");
                    None
                }
            },
            None => Some(self.lexicon.toxicity(text)),
        }
    }

    fn grade_fresh(&self, comments: &[&Comment]) -> Vec<CommentGrade> {
        let mut requests = Vec::with_capacity(comments.len() * GRADER_ROLES.len());
        let mut valid = Vec::with_capacity(requests.capacity());
        for c in comments {
            for role in GRADER_ROLES {
                match self.request(role, c) {
                    Ok(r) => {
                        requests.push(r);
                        valid.push(true);
                    }
                    Err(e) => {
                        log::warn!("{e}");
                        valid.push(false);
                    }
                }
            }
        }
        let mut responses = self.backend.complete_batch(&requests).into_iter();
        let mut out = Vec::with_capacity(comments.len());
        let mut flags = valid.into_iter();
        for c in comments {
            let mut g = CommentGrade {
                toxicity: self.toxicity_of(&c.text),
                ..CommentGrade::default()
            };
            for role in GRADER_ROLES {
                if !flags.next().unwrap_or(false) {
                    continue;
                }
                let Some(resp) = responses.next() else { continue };
                let parsed = resp.and_then(|r| parse_json(role, &r));
                let v = match parsed {
                    Ok(v) => v,
                    Err(e) => {
                        log::warn!("grade missing for {}: {e}", c.id);
                        continue;
                    }
                };
                apply_grade(&mut g, role, &v);
            }
            out.push(g);
        }
        out
    }
}

fn yes_no(v: &Value) -> Option<bool> {
    match v.as_str()?.trim().to_ascii_lowercase().as_str() {
        "yes" | "true" => Some(true),
        "no" | "false" => Some(false),
        _ => None,
    }
}

/// Folds one grader response into the grade; invalid outputs stay missing.
pub fn apply_grade(g: &mut CommentGrade, role: RoleTag, v: &Value) {
    match role {
        RoleTag::GraderSentiment => g.sentiment = v["label"].as_str().and_then(labels::sentiment_score),
        RoleTag::GraderExtremity => g.extremity = v["label"].as_str().and_then(labels::extremity_score),
        RoleTag::GraderAqs => g.aqs = v["score"].as_f64().filter(|s| (0.0..=1.0).contains(s)),
        RoleTag::GraderFallacy => {
            g.fallacious = match yes_no(&v["fallacious"]) {
                Some(true) => v["type"].as_str().filter(|t| labels::is_fallacy_type(t)).map(|_| true),
                other => other,
            }
        }
        RoleTag::GraderEvidence => g.evidence = yes_no(&v["evidence"]),
        _ => {}
    }
}

impl Grader for RemoteGrader<'_> {
    fn grade_batch(&self, comments: &[&Comment]) -> Vec<CommentGrade> {
        let todo: Vec<&Comment> = {
            let cache = self.cache.lock().unwrap();
            let mut seen = std::collections::HashSet::new();
            comments
                .iter()
                .copied()
                .filter(|c| !cache.contains_key(&c.text) && seen.insert(c.text.as_str()))
                .collect()
        };
        if !todo.is_empty() {
            let fresh = self.grade_fresh(&todo);
            let mut cache = self.cache.lock().unwrap();
            for (c, g) in todo.iter().zip(fresh) {
                cache.insert(c.text.clone(), g);
            }
        }
        let cache = self.cache.lock().unwrap();
        comments.iter().map(|c| cache[&c.text]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::social::AgentType;

    fn comment(stance: f64, sentiment: f64, toxicity: f64, evidence: bool) -> Comment {
        Comment {
            id: "c1".into(),
            post_id: "p1".into(),
            author_id: "u1".into(),
            agent_type: AgentType::Normal,
            time_step: 1,
            text: "plain text".into(),
            stance,
            sentiment,
            toxicity,
            evidence,
            likes: 0,
        }
    }

    #[test]
    fn aqs_rubric_corners() {
        assert!((aqs_rubric(true, 0.0, 1.0, 0.0) - 1.0).abs() < 1e-12);
        assert!((aqs_rubric(false, 1.0, 0.0, 0.0) - 0.3).abs() < 1e-12);
        assert!((aqs_rubric(false, -1.0, 0.0, 1.0) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn fallacy_rule_cases() {
        assert!(fallacy_rule(0.6, 0.0, true).is_some());
        assert!(fallacy_rule(0.1, 0.9, true).is_none());
        assert!(fallacy_rule(0.1, -0.9, false).is_some());
        assert!(labels::is_fallacy_type(SCRIPTED_FALLACY));
    }

    #[test]
    fn evidence_detection() {
        assert!(detect_evidence("see https://example.org/study"));
        assert!(!detect_evidence("experts agree this is bad"));
        assert!(detect_evidence("According to the CDC 2021 report, cases fell."));
        assert!(detect_evidence("The WHO report covers this."));
        assert!(detect_evidence("Read H.R. 1234 before commenting."));
        assert!(detect_evidence("\"We will not raise rates\", said Martinez at the hearing."));
        assert!(!detect_evidence("studies show it works, trust me"));
    }

    #[test]
    fn scripted_passthrough() {
        let g = ScriptedGrader::default().grade(&comment(-0.9, 0.1, 0.7, false));
        assert_eq!(g.toxicity, Some(0.7));
        assert_eq!(g.extremity, Some(1.0));
        assert_eq!(g.sentiment, Some(0.0));
        assert_eq!(g.fallacious, Some(true));
        assert_eq!(g.evidence, Some(false));
    }

    #[test]
    fn lexicon_toxicity_source() {
        let grader = ScriptedGrader { toxicity: ToxicitySource::Lexicon(Lexicon::bundled()) };
        assert_eq!(grader.grade(&comment(0.0, 0.5, 0.9, false)).toxicity, Some(0.0));
    }

    #[test]
    fn invalid_grader_outputs_are_missing() {
        let mut g = CommentGrade::default();
        apply_grade(&mut g, RoleTag::GraderSentiment, &serde_json::json!({"label": "Ecstatic"}));
        apply_grade(&mut g, RoleTag::GraderAqs, &serde_json::json!({"score": 1.7}));
        apply_grade(&mut g, RoleTag::GraderFallacy, &serde_json::json!({"fallacious": "Yes", "type": "Strawman"}));
        assert_eq!(g, CommentGrade::default());
        apply_grade(&mut g, RoleTag::GraderFallacy, &serde_json::json!({"fallacious": "No", "type": ""}));
        assert_eq!(g.fallacious, Some(false));
    }

    #[test]
    fn remote_grader_over_scripted_backend_matches_and_caches() {
        let backend = crate::gateway::ScriptedBackend::new();
        let prompts = PromptLibrary::bundled();
        let grader = RemoteGrader::new(&backend, &prompts, "grader", 64, None);
        let c = comment(-0.9, 0.1, 0.7, false);
        let a = grader.grade_batch(&[&c, &c]);
        assert_eq!(a[0], a[1]);
        assert_eq!(a[0].extremity, Some(1.0));
        assert_eq!(a[0].sentiment, Some(0.0));
        let served = backend.request_count();
        assert_eq!(grader.grade_batch(&[&c]), vec![a[0]]);
        assert_eq!(backend.request_count(), served);
    }
}
