//! Posts and comments.

use serde::{Deserialize, Serialize};

use super::news::{NewsItem, NewsPolarity};
use crate::cognition::{tokenize, TokenSet};
use crate::moderation::VerdictLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentType {
    Normal,
    Malicious,
    Amplifier,
    Leader,
}

impl AgentType {
    pub fn as_str(self) -> &'static str {
        match self {
            AgentType::Normal => "normal",
            AgentType::Malicious => "malicious",
            AgentType::Amplifier => "amplifier",
            AgentType::Leader => "leader",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comment {
    pub id: String,
    pub post_id: String,
    pub author_id: String,
    pub agent_type: AgentType,
    /// 1-indexed round in which the comment was written.
    pub time_step: u32,
    pub text: String,
    pub stance: f64,
    pub sentiment: f64,
    pub toxicity: f64,
    pub evidence: bool,
    pub likes: u64,
}

impl Comment {
    /// Scripted extremism level 0–4.
    pub fn level(&self) -> u8 {
        (4.0 * self.stance.abs()).round().clamp(0.0, 4.0) as u8
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Post {
    pub id: String,
    pub author_id: String,
    pub source_label: String,
    pub text: String,
    pub polarity: NewsPolarity,
    pub publish_step: u32,
    pub origin_id: Option<String>,
    /// Topic tag of the source news item.
    #[serde(default)]
    pub tag: String,
    pub topic_tokens: TokenSet,
    pub likes: u64,
    pub shares: u64,
    /// First step from which the post is hidden from feeds.
    pub removed_from: Option<u32>,
    pub fact_label: Option<VerdictLabel>,
    /// Comment ids in creation order.
    pub comment_ids: Vec<String>,
}

impl Post {
    /// A fresh post carrying a news item. Topic tokens come from the tag and
    /// the text.
    pub fn from_news(item: &NewsItem) -> Self {
        Self {
            id: item.id.clone(),
            author_id: item.source_label.clone(),
            source_label: item.source_label.clone(),
            text: item.text.clone(),
            polarity: item.polarity,
            publish_step: item.publish_step,
            origin_id: item.origin_id.clone(),
            tag: item.tag.clone(),
            topic_tokens: tokenize(&format!("{} {}", item.tag, item.text)),
            likes: 0,
            shares: 0,
            removed_from: None,
            fact_label: None,
            comment_ids: Vec::new(),
        }
    }

    pub fn visible_at(&self, step: u32) -> bool {
        self.publish_step <= step && self.removed_from.is_none_or(|r| step < r)
    }

    /// Stance the post itself carries, used for the analyst's post level.
    pub fn stance(&self) -> f64 {
        match self.polarity {
            NewsPolarity::Adversarial => -0.9,
            NewsPolarity::Clarification => 0.0,
            NewsPolarity::Benign => 0.1,
        }
    }
}
