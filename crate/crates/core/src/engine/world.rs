//! World state. It changes only through [`World::apply`], which live runs
//! and replays share.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::events::{EventKind, EventRecord};
use super::state::MeanFieldState;
use crate::cognition::{ActionMemory, KnowledgeBase};
use crate::moderation::Verdict;
use crate::social::{Comment, NewsItem, OrdinaryUser, Post};
use crate::team::PendingFeedback;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub step: u32,
    pub next_comment: u64,
    pub news: Vec<NewsItem>,
    pub posts: BTreeMap<String, Post>,
    pub comments: BTreeMap<String, Comment>,
    pub users: BTreeMap<String, OrdinaryUser>,
    /// (follower, followee)
    pub follows: BTreeSet<(String, String)>,
    pub kb: KnowledgeBase,
    pub memory: ActionMemory,
    pub verdicts: BTreeMap<String, Verdict>,
    /// Amplifier comments waiting for their release step.
    pub scheduled: BTreeMap<String, Comment>,
    pub states: Vec<MeanFieldState>,
    pub pending_feedback: Option<PendingFeedback>,
    pub rewards: Vec<f64>,
}

impl Default for World {
    fn default() -> Self {
        Self {
            step: 0,
            next_comment: 0,
            news: Vec::new(),
            posts: BTreeMap::new(),
            comments: BTreeMap::new(),
            users: BTreeMap::new(),
            follows: BTreeSet::new(),
            kb: KnowledgeBase::new(0.2, 0.01),
            memory: ActionMemory::new(),
            verdicts: BTreeMap::new(),
            scheduled: BTreeMap::new(),
            states: Vec::new(),
            pending_feedback: None,
            rewards: Vec::new(),
        }
    }
}

/// Comment ids are sequential so that they sort in creation order.
pub fn comment_id(n: u64) -> String {
    format!("c{n:06}")
}

impl World {
    /// Id the `offset`-th comment created from now on will get.
    pub fn comment_id(&self, offset: u64) -> String {
        comment_id(self.next_comment + offset)
    }

    pub fn last_state(&self) -> Option<&MeanFieldState> {
        self.states.last()
    }

    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("world serializes");
        hex::encode(Sha256::digest(bytes))
    }

    fn add_comment(&mut self, comment: &Comment) {
        if let Some(post) = self.posts.get_mut(&comment.post_id) {
            post.comment_ids.push(comment.id.clone());
        }
        self.comments.insert(comment.id.clone(), comment.clone());
    }

    pub fn apply(&mut self, record: &EventRecord) {
        if record.step > self.step {
            self.step = record.step;
        }
        match &record.kind {
            EventKind::RunStarted { config } => {
                self.kb = KnowledgeBase::new(config.delta, config.eta);
            }
            EventKind::UserCreated { user } => {
                self.users.insert(user.id.clone(), user.clone());
            }
            EventKind::KbSeeded { items } => {
                for item in items {
                    self.kb.push_unchecked(item.clone());
                }
            }
            EventKind::MemoryImported { tuples } => {
                for t in tuples {
                    self.memory.push_unchecked(t.clone());
                }
            }
            EventKind::NewsScheduled { items } => self.news = items.clone(),
            EventKind::PostPublished { post } => {
                self.posts.insert(post.id.clone(), post.clone());
            }
            EventKind::MaliciousComment { comment }
            | EventKind::LeaderComment { comment }
            | EventKind::AmplifierComment { comment }
            | EventKind::UserComment { comment } => {
                self.add_comment(comment);
                self.next_comment += 1;
            }
            EventKind::AmplifierScheduled { comment } => {
                self.scheduled.insert(comment.id.clone(), comment.clone());
                self.next_comment += 1;
            }
            EventKind::AmplifierReleased { comment_id } => {
                if let Some(c) = self.scheduled.remove(comment_id) {
                    self.add_comment(&c);
                }
            }
            EventKind::Boost { comment_id, likes } => {
                if let Some(c) = self.comments.get_mut(comment_id) {
                    c.likes += likes;
                }
            }
            EventKind::CommentLiked { comment_id } => {
                if let Some(c) = self.comments.get_mut(comment_id) {
                    c.likes += 1;
                }
            }
            EventKind::PostLiked { post_id } => {
                if let Some(p) = self.posts.get_mut(post_id) {
                    p.likes += 1;
                }
            }
            EventKind::PostShared { post_id } => {
                if let Some(p) = self.posts.get_mut(post_id) {
                    p.shares += 1;
                }
            }
            EventKind::Followed { target } => {
                self.follows.insert((record.actor_id.clone(), target.clone()));
            }
            EventKind::UserUpdated { user_id, opinion, mood } => {
                if let Some(u) = self.users.get_mut(user_id) {
                    u.opinion = *opinion;
                    u.mood = *mood;
                }
            }
            EventKind::Reflection { user_id, text } => {
                if let Some(u) = self.users.get_mut(user_id) {
                    u.reflections.push(text.clone());
                }
            }
            EventKind::Verdict { verdict } => {
                self.verdicts.insert(verdict.post_id.clone(), verdict.clone());
            }
            EventKind::Takedown { post_id, from_step } => {
                if let Some(p) = self.posts.get_mut(post_id) {
                    p.removed_from = Some(*from_step);
                }
            }
            EventKind::LabelAttached { post_id, label } => {
                if let Some(p) = self.posts.get_mut(post_id) {
                    p.fact_label = Some(*label);
                }
            }
            EventKind::StateEstimated { state } => self.states.push(*state),
            EventKind::Reward { reward, .. } => self.rewards.push(*reward),
            EventKind::KbReinforced { updates, .. } => {
                for (id, p) in updates {
                    self.kb.set_score(id, *p);
                }
            }
            EventKind::MemoryRecorded { tuple, retained } => {
                if *retained {
                    self.memory.push_unchecked(tuple.clone());
                }
            }
            EventKind::KbAdmission { item, admitted } => {
                if *admitted {
                    self.kb.push_unchecked(item.clone());
                }
            }
            EventKind::FeedbackPending { pending } => self.pending_feedback = pending.clone(),
            EventKind::RoundStarted
            | EventKind::Probe { .. }
            | EventKind::Analysis { .. }
            | EventKind::LexiconAlert { .. }
            | EventKind::Plan { .. }
            | EventKind::LeaderSelected { .. }
            | EventKind::Ignored
            | EventKind::ActionDropped { .. }
            | EventKind::Snapshot { .. }
            | EventKind::StepDigest { .. }
            | EventKind::RunCompleted
            | EventKind::RunAborted { .. } => {}
        }
    }
}
