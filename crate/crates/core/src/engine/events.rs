//! The event log. Every world mutation is one of these records.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::probe::ProbeRecord;
use super::state::MeanFieldState;
use crate::cognition::{EvidenceItem, MemoryTuple};
use crate::config::ScenarioConfig;
use crate::metrics::{MetricSnapshot, RewardSeries};
use crate::moderation::{Verdict, VerdictLabel};
use crate::social::{Comment, NewsItem, OrdinaryUser, Post, UserAction};
use crate::team::{AnalysisReport, LeaderOutput, PendingFeedback, StrategyPlan};

/// Position within a round. Declaration order is execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Init,
    Probe,
    News,
    Adversary,
    Team,
    Users,
    Moderation,
    Feedback,
    Snapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action_kind", content = "payload", rename_all = "snake_case")]
pub enum EventKind {
    RunStarted { config: Box<ScenarioConfig> },
    UserCreated { user: OrdinaryUser },
    KbSeeded { items: Vec<EvidenceItem> },
    MemoryImported { tuples: Vec<MemoryTuple> },
    NewsScheduled { items: Vec<NewsItem> },
    RoundStarted,
    Probe { record: ProbeRecord },
    PostPublished { post: Post },
    MaliciousComment { comment: Comment },
    Boost { comment_id: String, likes: u64 },
    Analysis { report: AnalysisReport },
    LexiconAlert { post_id: String, fraction: f64, alert: bool },
    Plan { plan: StrategyPlan },
    LeaderSelected { output: LeaderOutput },
    LeaderComment { comment: Comment },
    AmplifierComment { comment: Comment },
    /// Held back until `comment.time_step`.
    AmplifierScheduled { comment: Comment },
    AmplifierReleased { comment_id: String },
    UserUpdated { user_id: String, opinion: f64, mood: f64 },
    UserComment { comment: Comment },
    CommentLiked { comment_id: String },
    PostLiked { post_id: String },
    PostShared { post_id: String },
    Followed { target: String },
    Ignored,
    ActionDropped { action: UserAction, reason: String },
    Reflection { user_id: String, text: String },
    Verdict { verdict: Verdict },
    Takedown { post_id: String, from_step: u32 },
    LabelAttached { post_id: String, label: VerdictLabel },
    StateEstimated { state: MeanFieldState },
    Reward { round: u32, reward: f64, prev: MeanFieldState, next: MeanFieldState },
    KbReinforced { updates: Vec<(String, f64)>, selected: BTreeSet<String> },
    MemoryRecorded { tuple: MemoryTuple, retained: bool },
    KbAdmission { item: EvidenceItem, admitted: bool },
    FeedbackPending { pending: Option<PendingFeedback> },
    Snapshot { snapshot: MetricSnapshot },
    StepDigest { digest: String },
    RunCompleted,
    RunAborted { reason: String },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::RunStarted { .. } => "run_started",
            EventKind::UserCreated { .. } => "user_created",
            EventKind::KbSeeded { .. } => "kb_seeded",
            EventKind::MemoryImported { .. } => "memory_imported",
            EventKind::NewsScheduled { .. } => "news_scheduled",
            EventKind::RoundStarted => "round_started",
            EventKind::Probe { .. } => "probe",
            EventKind::PostPublished { .. } => "post_published",
            EventKind::MaliciousComment { .. } => "malicious_comment",
            EventKind::Boost { .. } => "boost",
            EventKind::Analysis { .. } => "analysis",
            EventKind::LexiconAlert { .. } => "lexicon_alert",
            EventKind::Plan { .. } => "plan",
            EventKind::LeaderSelected { .. } => "leader_selected",
            EventKind::LeaderComment { .. } => "leader_comment",
            EventKind::AmplifierComment { .. } => "amplifier_comment",
            EventKind::AmplifierScheduled { .. } => "amplifier_scheduled",
            EventKind::AmplifierReleased { .. } => "amplifier_released",
            EventKind::UserUpdated { .. } => "user_updated",
            EventKind::UserComment { .. } => "user_comment",
            EventKind::CommentLiked { .. } => "comment_liked",
            EventKind::PostLiked { .. } => "post_liked",
            EventKind::PostShared { .. } => "post_shared",
            EventKind::Followed { .. } => "followed",
            EventKind::Ignored => "ignored",
            EventKind::ActionDropped { .. } => "action_dropped",
            EventKind::Reflection { .. } => "reflection",
            EventKind::Verdict { .. } => "verdict",
            EventKind::Takedown { .. } => "takedown",
            EventKind::LabelAttached { .. } => "label_attached",
            EventKind::StateEstimated { .. } => "state_estimated",
            EventKind::Reward { .. } => "reward",
            EventKind::KbReinforced { .. } => "kb_reinforced",
            EventKind::MemoryRecorded { .. } => "memory_recorded",
            EventKind::KbAdmission { .. } => "kb_admission",
            EventKind::FeedbackPending { .. } => "feedback_pending",
            EventKind::Snapshot { .. } => "snapshot",
            EventKind::StepDigest { .. } => "step_digest",
            EventKind::RunCompleted => "run_completed",
            EventKind::RunAborted { .. } => "run_aborted",
        }
    }

    /// The comment this event adds to the world, if any.
    pub fn comment(&self) -> Option<&Comment> {
        match self {
            EventKind::MaliciousComment { comment }
            | EventKind::LeaderComment { comment }
            | EventKind::AmplifierComment { comment }
            | EventKind::UserComment { comment } => Some(comment),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: u64,
    pub step: u32,
    pub phase: Phase,
    pub actor_id: String,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl EventRecord {
    pub fn order_key(&self) -> (u32, Phase, u64) {
        (self.step, self.phase, self.seq)
    }
}

/// Everything one run produced. `complete` is false when the run aborted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub config: ScenarioConfig,
    pub events: Vec<EventRecord>,
    pub complete: bool,
    pub abort_reason: Option<String>,
    pub metrics: Vec<MetricSnapshot>,
    pub rewards: RewardSeries,
}

impl RunLog {
    /// Rebuilds a log from its event stream alone. Metrics and rewards are
    /// left empty; replay the events to recover them.
    pub fn from_events(events: Vec<EventRecord>) -> Option<Self> {
        let config = events.iter().find_map(|e| match &e.kind {
            EventKind::RunStarted { config } => Some((**config).clone()),
            _ => None,
        })?;
        let complete = matches!(events.last().map(|e| &e.kind), Some(EventKind::RunCompleted));
        let abort_reason = events.iter().find_map(|e| match &e.kind {
            EventKind::RunAborted { reason } => Some(reason.clone()),
            _ => None,
        });
        Some(Self {
            config,
            events,
            complete,
            abort_reason,
            metrics: Vec::new(),
            rewards: RewardSeries::default(),
        })
    }

    pub fn of_kind<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a EventRecord> + 'a {
        self.events.iter().filter(move |e| e.kind.name() == name)
    }

    pub fn probes(&self) -> Vec<&ProbeRecord> {
        self.events
            .iter()
            .filter_map(|e| match &e.kind {
                EventKind::Probe { record } => Some(record),
                _ => None,
            })
            .collect()
    }
}
