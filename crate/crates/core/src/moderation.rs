//! Delayed fact-check moderation.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::World;
use crate::error::GatewayError;
use crate::gateway::{parse_json, Backend, GenerationRequest, PromptLibrary, RoleTag};
use crate::rng::RngRoot;
use crate::social::{NewsPolarity, Post};
use crate::config::BackendKind;

/// False verdicts above this confidence remove the post.
pub const TAKEDOWN_CONFIDENCE: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictLabel {
    True,
    False,
    Unverified,
}

impl VerdictLabel {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "true" => Some(VerdictLabel::True),
            "false" => Some(VerdictLabel::False),
            "unverified" => Some(VerdictLabel::Unverified),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub post_id: String,
    pub label: VerdictLabel,
    pub confidence: f64,
    pub explanation: String,
    pub sources: Vec<String>,
    pub issued_step: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Enforcement {
    /// Hidden from feeds from `from_step` on.
    Takedown { post_id: String, from_step: u32 },
    Label { post_id: String, label: VerdictLabel },
}

/// Posts whose check is due at `step` and that have no verdict yet. A post
/// whose adjudication failed stays due on later steps.
pub fn schedule_checks(world: &World, step: u32, delay: u32) -> Vec<String> {
    world
        .posts
        .values()
        .filter(|p| p.publish_step + delay <= step && !world.verdicts.contains_key(&p.id))
        .map(|p| p.id.clone())
        .collect()
}

/// Oracle verdict from provenance alone. The false-verdict confidence is
/// drawn from a stream keyed by post id, so engagement never enters.
pub fn scripted_verdict(post: &Post, step: u32, root: &RngRoot) -> Verdict {
    let (label, confidence, explanation) = match post.polarity {
        NewsPolarity::Adversarial => {
            let mut rng = root.stream("moderation", 0, &post.id);
            (VerdictLabel::False, rng.random_range(0.85..=0.99), "Distorted variant of a verified report.")
        }
        NewsPolarity::Clarification => (VerdictLabel::True, 0.95, "Consistent with the verified record."),
        NewsPolarity::Benign => (VerdictLabel::Unverified, 0.5, "No checkable claim beyond routine reporting."),
    };
    Verdict {
        post_id: post.id.clone(),
        label,
        confidence,
        explanation: explanation.into(),
        sources: vec![post.source_label.clone()],
        issued_step: step,
    }
}

pub fn enforcement(verdict: &Verdict) -> Enforcement {
    if verdict.label == VerdictLabel::False && verdict.confidence > TAKEDOWN_CONFIDENCE {
        Enforcement::Takedown {
            post_id: verdict.post_id.clone(),
            from_step: verdict.issued_step + 1,
        }
    } else {
        Enforcement::Label {
            post_id: verdict.post_id.clone(),
            label: verdict.label,
        }
    }
}

pub struct Moderator<'a> {
    pub backend: &'a dyn Backend,
    pub prompts: &'a PromptLibrary,
    pub root: RngRoot,
    pub model_tag: String,
    pub max_tokens: u32,
}

impl Moderator<'_> {
    fn request(&self, post: &Post, comment_count: usize) -> Result<GenerationRequest, GatewayError> {
        let mut vars = BTreeMap::new();
        vars.insert("post_text", post.text.clone());
        vars.insert(
            "engagement",
            format!("{} likes, {} shares, {} comments", post.likes, post.shares, comment_count),
        );
        let (system, user) = self.prompts.render(RoleTag::Factcheck, &vars)?;
        let mut req = GenerationRequest::new(RoleTag::Factcheck, format!("factcheck-{}", post.id), system, user)
            .hint("polarity", serde_json::to_value(post.polarity).unwrap().as_str().unwrap_or(""));
        req.model_tag = self.model_tag.clone();
        req.max_tokens = self.max_tokens;
        Ok(req)
    }

    /// Scripted backends use the provenance oracle; remote backends are
    /// asked with the fact-check prompt.
    pub fn adjudicate(&self, post: &Post, step: u32) -> Result<Verdict, GatewayError> {
        if self.backend.kind() == BackendKind::Scripted {
            return Ok(scripted_verdict(post, step, &self.root));
        }
        let resp = self.backend.complete(&self.request(post, post.comment_ids.len())?)?;
        let v = parse_json(RoleTag::Factcheck, &resp)?;
        let bad = |reason: &str| GatewayError::Parse {
            role: RoleTag::Factcheck.to_string(),
            reason: reason.into(),
            raw: resp.text.clone(),
        };
        let label = v["label"].as_str().and_then(VerdictLabel::parse).ok_or_else(|| bad("invalid label"))?;
        let confidence = v["confidence"]
            .as_f64()
            .filter(|c| (0.0..=1.0).contains(c))
            .ok_or_else(|| bad("confidence outside [0,1]"))?;
        let sources = v["sources"]
            .as_array()
            .map(|a| a.iter().filter_map(|s| s.as_str().map(String::from)).collect())
            .unwrap_or_default();
        Ok(Verdict {
            post_id: post.id.clone(),
            label,
            confidence,
            explanation: v["explanation"].as_str().unwrap_or_default().to_string(),
            sources,
            issued_step: step,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cognition::TokenSet;

    fn post(polarity: NewsPolarity, likes: u64) -> Post {
        Post {
            id: "n001".into(),
            author_id: "news".into(),
            source_label: "desk".into(),
            text: "t".into(),
            polarity,
            publish_step: 2,
            origin_id: None,
            tag: "health".into(),
            topic_tokens: TokenSet::new(),
            likes,
            shares: 0,
            removed_from: None,
            fact_label: None,
            comment_ids: vec![],
        }
    }

    #[test]
    fn oracle_labels() {
        let root = RngRoot(3);
        let v = scripted_verdict(&post(NewsPolarity::Adversarial, 0), 5, &root);
        assert_eq!(v.label, VerdictLabel::False);
        assert!((0.85..=0.99).contains(&v.confidence));
        assert_eq!(scripted_verdict(&post(NewsPolarity::Clarification, 0), 5, &root).label, VerdictLabel::True);
        assert_eq!(scripted_verdict(&post(NewsPolarity::Benign, 0), 5, &root).label, VerdictLabel::Unverified);
    }

    #[test]
    fn likes_do_not_matter() {
        let root = RngRoot(3);
        let a = scripted_verdict(&post(NewsPolarity::Adversarial, 0), 5, &root);
        let b = scripted_verdict(&post(NewsPolarity::Adversarial, 10_000), 5, &root);
        assert_eq!(a, b);
    }

    fn verdict(label: VerdictLabel, confidence: f64) -> Verdict {
        Verdict { post_id: "p".into(), label, confidence, explanation: String::new(), sources: vec![], issued_step: 5 }
    }

    #[test]
    fn takedown_threshold() {
        assert_eq!(
            enforcement(&verdict(VerdictLabel::False, 0.95)),
            Enforcement::Takedown { post_id: "p".into(), from_step: 6 }
        );
        assert!(matches!(enforcement(&verdict(VerdictLabel::False, 0.85)), Enforcement::Label { .. }));
        assert!(matches!(enforcement(&verdict(VerdictLabel::False, 0.9)), Enforcement::Label { .. }));
        assert!(matches!(enforcement(&verdict(VerdictLabel::True, 0.99)), Enforcement::Label { .. }));
    }
}
