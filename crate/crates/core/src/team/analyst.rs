//! Like-weighted thread analysis and the intervention trigger.

use serde::{Deserialize, Serialize};

use crate::cognition::TokenSet;
use crate::social::{rank_feed, AgentType, Comment, Post};

/// Sentiment below this value triggers an intervention.
pub const SENTIMENT_TRIGGER: f64 = 0.35;
/// Level from which an intervention is required.
pub const LEVEL_TRIGGER: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EngagementIntensity {
    Low,
    Moderate,
    High,
    Viral,
}

impl EngagementIntensity {
    pub fn from_likes(total: u64) -> Self {
        match total {
            t if t > 100 => EngagementIntensity::Viral,
            t if t > 40 => EngagementIntensity::High,
            t if t > 10 => EngagementIntensity::Moderate,
            _ => EngagementIntensity::Low,
        }
    }

    pub fn multiplier(self) -> f64 {
        match self {
            EngagementIntensity::Low => 1.0,
            EngagementIntensity::Moderate => 1.2,
            EngagementIntensity::High | EngagementIntensity::Viral => 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub comment_id: String,
    pub likes: u64,
    pub level: u8,
    pub weighted_contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub post_id: String,
    pub core_viewpoint: String,
    pub extremism_level: u8,
    /// Weighted extremism before rounding.
    pub weighted_score: f64,
    pub like_weighted_breakdown: Vec<Contribution>,
    pub engagement_intensity: EngagementIntensity,
    pub sentiment_estimate: f64,
    /// A level ≥ 3 comment sits among the three most-liked.
    pub high_liked_extreme: bool,
    /// A malicious comment sits among the three most-liked.
    pub amplification_risk: bool,
    pub requires_intervention: bool,
    pub urgency: u8,
    pub topic_tokens: TokenSet,
}

/// Rounds half up and clamps to the 0–4 scale.
pub fn round_level(score: f64) -> u8 {
    (score + 0.5).floor().clamp(0.0, 4.0) as u8
}

/// `Σ level·(likes+1)/Σ(likes+1)` and its rounded level. `(0, 0)` when empty.
pub fn weighted_extremism(items: &[(u64, u8)]) -> (f64, u8) {
    if items.is_empty() {
        return (0.0, 0);
    }
    let total: f64 = items.iter().map(|(l, _)| *l as f64 + 1.0).sum();
    let score = items.iter().map(|(l, lv)| f64::from(*lv) * (*l as f64 + 1.0) / total).sum();
    (score, round_level(score))
}

pub fn urgency(level: u8, sentiment: f64) -> u8 {
    let mood = if sentiment < SENTIMENT_TRIGGER { 3 } else { 0 };
    level.max(mood).clamp(1, 4)
}

pub fn trigger(report: &AnalysisReport) -> bool {
    report.extremism_level >= LEVEL_TRIGGER
        || report.sentiment_estimate < SENTIMENT_TRIGGER
        || report.high_liked_extreme
}

/// Level a post carries on its own, used when it has no comments.
pub fn post_level(post: &Post) -> u8 {
    round_level(4.0 * post.stance().abs())
}

/// Scripted analysis of one thread. `core_viewpoint` is the text of the
/// most-liked comment, or the post text when there are none.
pub fn analyze(post: &Post, comments: &[&Comment]) -> AnalysisReport {
    let items: Vec<(u64, u8)> = comments.iter().map(|c| (c.likes, c.level())).collect();
    let total: f64 = items.iter().map(|(l, _)| *l as f64 + 1.0).sum();
    let breakdown = comments
        .iter()
        .map(|c| Contribution {
            comment_id: c.id.clone(),
            likes: c.likes,
            level: c.level(),
            weighted_contribution: f64::from(c.level()) * (c.likes as f64 + 1.0) / total,
        })
        .collect();
    let (score, level) = if comments.is_empty() {
        (0.0, post_level(post))
    } else {
        weighted_extremism(&items)
    };
    let sentiment = if comments.is_empty() {
        0.5
    } else {
        comments.iter().map(|c| c.sentiment * (c.likes as f64 + 1.0) / total).sum()
    };
    let top = rank_feed(comments.iter().copied(), 3);
    let high_liked_extreme = top.iter().any(|c| c.level() >= 3);
    let amplification_risk = top.iter().any(|c| c.agent_type == AgentType::Malicious);
    let likes = post.likes + comments.iter().map(|c| c.likes).sum::<u64>();
    let core_viewpoint = top.first().map_or_else(|| post.text.clone(), |c| c.text.clone());
    let mut report = AnalysisReport {
        post_id: post.id.clone(),
        core_viewpoint,
        extremism_level: level,
        weighted_score: score,
        like_weighted_breakdown: breakdown,
        engagement_intensity: EngagementIntensity::from_likes(likes),
        sentiment_estimate: sentiment,
        high_liked_extreme,
        amplification_risk,
        requires_intervention: false,
        urgency: urgency(level, sentiment),
        topic_tokens: post.topic_tokens.clone(),
    };
    report.requires_intervention = trigger(&report);
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(level: u8, sentiment: f64, hot: bool) -> AnalysisReport {
        AnalysisReport {
            post_id: "p".into(),
            core_viewpoint: String::new(),
            extremism_level: level,
            weighted_score: f64::from(level),
            like_weighted_breakdown: vec![],
            engagement_intensity: EngagementIntensity::Low,
            sentiment_estimate: sentiment,
            high_liked_extreme: hot,
            amplification_risk: false,
            requires_intervention: false,
            urgency: 1,
            topic_tokens: TokenSet::new(),
        }
    }

    #[test]
    fn weighted_examples() {
        let (s, l) = weighted_extremism(&[(0, 1), (50, 3)]);
        assert!((s - 154.0 / 52.0).abs() < 1e-12);
        assert_eq!(l, 3);
        assert_eq!(weighted_extremism(&[(7, 2)]), (2.0, 2));
        assert_eq!(weighted_extremism(&[(1, 0), (9, 0)]), (0.0, 0));
        assert_eq!(weighted_extremism(&[]), (0.0, 0));
    }

    #[test]
    fn half_rounds_up() {
        assert_eq!(round_level(1.5), 2);
        assert_eq!(round_level(2.4999), 2);
        assert_eq!(round_level(9.0), 4);
    }

    #[test]
    fn trigger_rules() {
        assert!(trigger(&report(2, 0.6, false)));
        assert!(trigger(&report(1, 0.30, false)));
        assert!(!trigger(&report(1, 0.60, false)));
        assert!(trigger(&report(1, 0.60, true)));
    }

    #[test]
    fn heat_tiers() {
        assert_eq!(EngagementIntensity::from_likes(10), EngagementIntensity::Low);
        assert_eq!(EngagementIntensity::from_likes(11), EngagementIntensity::Moderate);
        assert_eq!(EngagementIntensity::from_likes(41), EngagementIntensity::High);
        assert_eq!(EngagementIntensity::from_likes(101), EngagementIntensity::Viral);
    }

    #[test]
    fn urgency_rule() {
        assert_eq!(urgency(0, 0.5), 1);
        assert_eq!(urgency(1, 0.2), 3);
        assert_eq!(urgency(4, 0.2), 4);
    }
}
