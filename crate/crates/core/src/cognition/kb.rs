//! Evidence knowledge base: relevance-gated admission and reward-driven
//! persuasiveness updates.

use std::collections::BTreeSet;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::text::{jaccard, tokenize, tokenize_all, TokenSet};
use crate::error::{Result, SimError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceItem {
    pub id: String,
    pub claim_text: String,
    pub persuasiveness: f64,
    #[serde(default)]
    pub topic_tags: Vec<String>,
    #[serde(default)]
    pub source_label: String,
}

impl EvidenceItem {
    /// Tokens used for relevance: the topic tags when present, otherwise the
    /// claim text.
    pub fn tokens(&self) -> TokenSet {
        if self.topic_tags.is_empty() {
            tokenize(&self.claim_text)
        } else {
            tokenize_all(self.topic_tags.iter().map(String::as_str))
        }
    }
}

/// One line of a knowledge-base seed file.
#[derive(Debug, Clone, Deserialize)]
struct SeedRecord {
    #[serde(default)]
    id: Option<String>,
    claim_text: String,
    #[serde(default)]
    persuasiveness: Option<f64>,
    #[serde(default)]
    topic_tags: Vec<String>,
    #[serde(default)]
    source_label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredEvidence {
    pub item: EvidenceItem,
    pub relevance: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    items: Vec<EvidenceItem>,
    pub delta: f64,
    pub eta: f64,
}

impl KnowledgeBase {
    pub fn new(delta: f64, eta: f64) -> Self {
        Self {
            items: Vec::new(),
            delta,
            eta,
        }
    }

    pub fn items(&self) -> &[EvidenceItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&EvidenceItem> {
        self.items.iter().find(|i| i.id == id)
    }

    /// Parses a JSONL seed file. Missing persuasiveness defaults to 0.5 and
    /// missing ids to `kb-<line>`.
    pub fn parse_seed(reader: impl BufRead) -> Result<Vec<EvidenceItem>> {
        let mut out = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: SeedRecord = serde_json::from_str(&line)
                .map_err(|e| SimError::KnowledgeBase(format!("line {}: {e}", n + 1)))?;
            let p = rec.persuasiveness.unwrap_or(0.5);
            if !(0.0..=1.0).contains(&p) {
                return Err(SimError::KnowledgeBase(format!(
                    "line {}: persuasiveness {p} outside [0,1]",
                    n + 1
                )));
            }
            out.push(EvidenceItem {
                id: rec.id.unwrap_or_else(|| format!("kb-{:04}", n + 1)),
                claim_text: rec.claim_text,
                persuasiveness: p,
                topic_tags: rec.topic_tags,
                source_label: rec.source_label,
            });
        }
        Ok(out)
    }

    /// Inserts seed items without the relevance gate.
    pub fn seed(&mut self, items: Vec<EvidenceItem>) -> Result<()> {
        for item in items {
            Self::check_candidate(&item)?;
            if self.get(&item.id).is_some() {
                return Err(SimError::KnowledgeBase(format!("duplicate id `{}`", item.id)));
            }
            self.items.push(item);
        }
        Ok(())
    }

    /// Max Jaccard of the candidate against every stored item and the
    /// current discussion topic.
    pub fn relevance(&self, candidate: &TokenSet, topic: &TokenSet) -> f64 {
        self.items
            .iter()
            .map(|i| jaccard(candidate, &i.tokens()))
            .fold(jaccard(candidate, topic), f64::max)
    }

    /// Admits the candidate iff its relevance exceeds `delta`. Returns whether
    /// it was admitted.
    pub fn admit(&mut self, candidate: EvidenceItem, topic: &TokenSet) -> Result<bool> {
        Self::check_candidate(&candidate)?;
        if self.get(&candidate.id).is_some() {
            return Err(SimError::KnowledgeBase(format!(
                "duplicate id `{}`",
                candidate.id
            )));
        }
        let rel = self.relevance(&candidate.tokens(), topic);
        if rel > self.delta {
            self.items.push(candidate);
            Ok(true)
        } else {
            Ok(false)
        }
    }

    fn check_candidate(item: &EvidenceItem) -> Result<()> {
        if item.claim_text.trim().is_empty() {
            return Err(SimError::KnowledgeBase(format!("`{}` has empty claim", item.id)));
        }
        if !(0.0..=1.0).contains(&item.persuasiveness) {
            return Err(SimError::KnowledgeBase(format!(
                "`{}` persuasiveness outside [0,1]",
                item.id
            )));
        }
        Ok(())
    }

    /// `p ← clamp(p + η·R·[selected], 0, 1)`. Returns the new scores of the
    /// selected items in id order.
    pub fn reinforce(&mut self, reward: f64, selected: &BTreeSet<String>) -> Result<Vec<(String, f64)>> {
        if let Some(missing) = selected.iter().find(|id| self.get(id).is_none()) {
            return Err(SimError::KnowledgeBase(format!("unknown evidence id `{missing}`")));
        }
        let eta = self.eta;
        let mut changed = Vec::new();
        for item in self.items.iter_mut().filter(|i| selected.contains(&i.id)) {
            item.persuasiveness = (item.persuasiveness + eta * reward).clamp(0.0, 1.0);
            changed.push((item.id.clone(), item.persuasiveness));
        }
        changed.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(changed)
    }

    /// Overwrites a score; used when replaying logged updates.
    pub(crate) fn set_score(&mut self, id: &str, p: f64) -> bool {
        match self.items.iter_mut().find(|i| i.id == id) {
            Some(item) => {
                item.persuasiveness = p;
                true
            }
            None => false,
        }
    }

    pub(crate) fn push_unchecked(&mut self, item: EvidenceItem) {
        self.items.push(item);
    }

    /// Top-`m` items by `relevance · p`, ties by higher p then id.
    pub fn select_arguments(&self, query: &TokenSet, m: usize) -> Vec<ScoredEvidence> {
        let mut scored: Vec<ScoredEvidence> = self
            .items
            .iter()
            .map(|item| {
                let relevance = jaccard(query, &item.tokens());
                ScoredEvidence {
                    score: relevance * item.persuasiveness,
                    relevance,
                    item: item.clone(),
                }
            })
            .collect();
        scored.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then(b.item.persuasiveness.total_cmp(&a.item.persuasiveness))
                .then(a.item.id.cmp(&b.item.id))
        });
        scored.truncate(m);
        scored
    }
}
