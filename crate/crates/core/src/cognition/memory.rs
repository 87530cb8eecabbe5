//! Action–outcome memory with a reward retention gate.

use serde::{Deserialize, Serialize};

use super::text::{jaccard, TokenSet};
use crate::team::Timing;

/// What the team did in one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionDescriptor {
    pub plan_digest: String,
    pub leader_digest: Option<String>,
    pub amplifier_summary: String,
    pub timing: Timing,
    pub total_agents: u32,
}

/// Reference to the observation that followed the action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationRef {
    pub step: u32,
    pub post_ids: Vec<String>,
    pub comment_count: usize,
    pub topic_tokens: TokenSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryTuple {
    pub step: u32,
    pub action: ActionDescriptor,
    pub observation: ObservationRef,
    pub reward: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ActionMemory {
    tuples: Vec<MemoryTuple>,
}

impl ActionMemory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn tuples(&self) -> &[MemoryTuple] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    /// Keeps the tuple iff `reward > epsilon`. Returns whether it was kept.
    pub fn record(&mut self, tuple: MemoryTuple, epsilon: f64) -> bool {
        if tuple.reward > epsilon {
            self.tuples.push(tuple);
            true
        } else {
            false
        }
    }

    pub(crate) fn push_unchecked(&mut self, tuple: MemoryTuple) {
        self.tuples.push(tuple);
    }

    /// Top-`k` tuples by Jaccard against the report tokens, ties by higher
    /// reward then earlier step.
    pub fn recall(&self, report: &TokenSet, top_k: usize) -> Vec<&MemoryTuple> {
        let mut scored: Vec<(f64, &MemoryTuple)> = self
            .tuples
            .iter()
            .map(|t| (jaccard(report, &t.observation.topic_tokens), t))
            .collect();
        scored.sort_by(|a, b| {
            b.0.total_cmp(&a.0)
                .then(b.1.reward.total_cmp(&a.1.reward))
                .then(a.1.step.cmp(&b.1.step))
        });
        scored.into_iter().take(top_k).map(|(_, t)| t).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tuple(step: u32, reward: f64, topic: &[&str]) -> MemoryTuple {
        MemoryTuple {
            step,
            action: ActionDescriptor {
                plan_digest: format!("plan-{step}"),
                leader_digest: None,
                amplifier_summary: String::new(),
                timing: Timing::Immediate,
                total_agents: 8,
            },
            observation: ObservationRef {
                step,
                post_ids: vec![],
                comment_count: 0,
                topic_tokens: topic.iter().map(|s| s.to_string()).collect(),
            },
            reward,
        }
    }

    #[test]
    fn retention_gate() {
        let mut m = ActionMemory::new();
        assert!(m.record(tuple(1, 0.15, &[]), 0.10));
        assert!(!m.record(tuple(2, 0.05, &[]), 0.10));
        assert!(!m.record(tuple(3, -0.2, &[]), 0.5));
        assert!(!m.record(tuple(4, 0.10, &[]), 0.10));
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn recall_examples() {
        let mut m = ActionMemory::new();
        assert!(m.recall(&TokenSet::new(), 3).is_empty());
        m.record(tuple(1, 0.1, &["x"]), 0.05);
        assert_eq!(m.recall(&TokenSet::new(), 3).len(), 1);
        m.record(tuple(2, 0.3, &["x"]), 0.05);
        let q: TokenSet = ["x".to_string()].into();
        let got = m.recall(&q, 2);
        assert_eq!(got[0].reward, 0.3);
        assert_eq!(got[1].reward, 0.1);
    }

    #[test]
    fn recall_prefers_similarity() {
        let mut m = ActionMemory::new();
        m.record(tuple(1, 0.9, &["a"]), 0.05);
        m.record(tuple(2, 0.1, &["b"]), 0.05);
        let q: TokenSet = ["b".to_string()].into();
        assert_eq!(m.recall(&q, 1)[0].step, 2);
    }
}
