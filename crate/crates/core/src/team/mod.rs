//! The intervention team: analyst, strategist, leader and amplifiers, plus
//! the feedback step that closes the loop.

pub mod amplifier;
pub mod analyst;
pub mod leader;
pub mod strategist;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use amplifier::{amplify, AmplifierBatch, AmplifierDraft};
pub use analyst::{analyze, round_level, trigger, urgency, weighted_extremism, AnalysisReport, Contribution, EngagementIntensity};
pub use leader::{choose, scripted_rubric, Candidate, Evaluation, LeaderContext, LeaderOutput};
pub use strategist::{base_count, fixed_plan, memory_timing, plan, plan_total, LeaderInstruction, RoleDistribution, StrategyPlan, Timing};

use crate::cognition::{ActionDescriptor, ActionMemory, KnowledgeBase, MemoryTuple, ObservationRef};
use crate::engine::MeanFieldState;
use crate::error::Result;
use crate::metrics::{reward, Lexicon, RewardConfig};
use crate::social::{Comment, Post};

pub use crate::engine::state::estimate_state;

/// What the team did in a round, kept until the next state is measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingFeedback {
    pub step: u32,
    pub state: MeanFieldState,
    pub selected_ids: BTreeSet<String>,
    pub action: ActionDescriptor,
    pub observation: ObservationRef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackOutcome {
    pub reward: f64,
    pub kb_updates: Vec<(String, f64)>,
    pub tuple: MemoryTuple,
    pub retained: bool,
}

/// Scores the round, reinforces the arguments it used and offers the
/// action to memory.
pub fn feedback(
    pending: &PendingFeedback,
    next: &MeanFieldState,
    kb: &mut KnowledgeBase,
    memory: &mut ActionMemory,
    cfg: &RewardConfig,
    epsilon_mem: f64,
) -> Result<FeedbackOutcome> {
    let r = reward(&pending.state, next, cfg);
    let kb_updates = kb.reinforce(r, &pending.selected_ids)?;
    let tuple = MemoryTuple {
        step: pending.step,
        action: pending.action.clone(),
        observation: pending.observation.clone(),
        reward: r,
    };
    let retained = memory.record(tuple.clone(), epsilon_mem);
    Ok(FeedbackOutcome { reward: r, kb_updates, tuple, retained })
}

/// Analyst-free alerting: the share of comments with a lexicon hit.
pub fn lexicon_alert(lexicon: &Lexicon, comments: &[&Comment], threshold: f64) -> (f64, bool) {
    let fraction = lexicon.flagged_fraction(comments.iter().map(|c| c.text.as_str()));
    (fraction, fraction > threshold)
}

/// Stand-in report when the analyst is ablated: level 2, or 3 above a 0.6
/// hit share; neutral sentiment; urgency equal to the level.
pub fn heuristic_report(post: &Post, fraction: f64, alert: bool) -> AnalysisReport {
    let level = 2 + u8::from(fraction > 0.6);
    AnalysisReport {
        post_id: post.id.clone(),
        core_viewpoint: post.text.clone(),
        extremism_level: level,
        weighted_score: f64::from(level),
        like_weighted_breakdown: vec![],
        engagement_intensity: EngagementIntensity::Low,
        sentiment_estimate: 0.5,
        high_liked_extreme: false,
        amplification_risk: false,
        requires_intervention: alert,
        urgency: level,
        topic_tokens: post.topic_tokens.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cognition::{EvidenceItem, TokenSet};
    use crate::social::AgentType;

    fn state(v: f64, e: f64) -> MeanFieldState {
        MeanFieldState { v, e, step: 1 }
    }

    fn pending(ids: &[&str]) -> PendingFeedback {
        PendingFeedback {
            step: 1,
            state: state(0.30, 0.40),
            selected_ids: ids.iter().map(|s| s.to_string()).collect(),
            action: ActionDescriptor {
                plan_digest: "d".into(),
                leader_digest: None,
                amplifier_summary: String::new(),
                timing: Timing::Immediate,
                total_agents: 8,
            },
            observation: ObservationRef { step: 1, post_ids: vec![], comment_count: 0, topic_tokens: TokenSet::new() },
        }
    }

    fn kb() -> KnowledgeBase {
        let mut kb = KnowledgeBase::new(0.2, 0.01);
        kb.seed(vec![EvidenceItem {
            id: "kb-1".into(),
            claim_text: "grid audit".into(),
            persuasiveness: 0.5,
            topic_tags: vec!["grid".into()],
            source_label: "x".into(),
        }])
        .unwrap();
        kb
    }

    #[test]
    fn positive_round_is_kept() {
        let mut kb = kb();
        let mut mem = ActionMemory::new();
        let out = feedback(&pending(&["kb-1"]), &state(0.25, 0.45), &mut kb, &mut mem, &RewardConfig::default(), 0.05).unwrap();
        assert!((out.reward - 0.10).abs() < 1e-12);
        assert!(out.retained);
        assert_eq!(mem.len(), 1);
        assert!(kb.get("kb-1").unwrap().persuasiveness > 0.5);
    }

    #[test]
    fn negative_round_downweights() {
        let mut kb = kb();
        let mut mem = ActionMemory::new();
        let out = feedback(&pending(&["kb-1"]), &state(0.32, 0.40), &mut kb, &mut mem, &RewardConfig::default(), 0.05).unwrap();
        assert!((out.reward + 0.02).abs() < 1e-12);
        assert!((kb.get("kb-1").unwrap().persuasiveness - (0.5 - 0.01 * 0.02)).abs() < 1e-12);
        assert!(mem.is_empty());
    }

    fn comment(text: &str) -> Comment {
        Comment {
            id: "c".into(),
            post_id: "p".into(),
            author_id: "u".into(),
            agent_type: AgentType::Normal,
            time_step: 1,
            text: text.into(),
            stance: 0.0,
            sentiment: 0.5,
            toxicity: 0.1,
            evidence: false,
            likes: 0,
        }
    }

    #[test]
    fn lexicon_alert_threshold() {
        let lex = Lexicon::bundled();
        let owned: Vec<Comment> = (0..10).map(|i| comment(if i < 4 { "what a hoax" } else { "fine by me" })).collect();
        let refs: Vec<&Comment> = owned.iter().collect();
        let (f, alert) = lexicon_alert(&lex, &refs, 0.3);
        assert!((f - 0.4).abs() < 1e-12);
        assert!(alert);
        let (_, alert) = lexicon_alert(&lex, &refs[4..], 0.3);
        assert!(!alert);
    }
}
