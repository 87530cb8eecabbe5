//! Candidate generation, five-dimension evaluation and selection.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::strategist::StrategyPlan;
use crate::cognition::{jaccard, tokenize, ScoredEvidence, TokenSet};
use crate::config::BackendKind;
use crate::error::GatewayError;
use crate::gateway::{parse_json, Backend, GenerationRequest, PromptLibrary, RoleTag};

/// Creation angles and the stance offset each one takes.
pub const ANGLES: [(&str, f64); 3] = [("evidence", 0.0), ("empathy", 0.1), ("common-ground", 0.05)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub text: String,
    pub angle: String,
    pub stance: f64,
    pub argument_ids: Vec<String>,
    pub mean_persuasiveness: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evaluation {
    pub persuasiveness: u8,
    pub logic: u8,
    pub readability: u8,
    pub relevance: u8,
    pub impact: u8,
    pub total: u8,
}

impl Evaluation {
    pub fn new(scores: [u8; 5]) -> Self {
        let [persuasiveness, logic, readability, relevance, impact] = scores.map(|s| s.clamp(1, 5));
        Self {
            persuasiveness,
            logic,
            readability,
            relevance,
            impact,
            total: persuasiveness + logic + readability + relevance + impact,
        }
    }

    pub fn scores(&self) -> [u8; 5] {
        [self.persuasiveness, self.logic, self.readability, self.relevance, self.impact]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderOutput {
    pub candidates: Vec<Candidate>,
    pub evaluations: Vec<Evaluation>,
    pub chosen_index: usize,
}

impl LeaderOutput {
    pub fn chosen(&self) -> &Candidate {
        &self.candidates[self.chosen_index]
    }
}

/// First index with the highest total.
pub fn choose<T: PartialOrd + Copy>(totals: &[T]) -> usize {
    let mut best = 0;
    for (i, t) in totals.iter().enumerate() {
        if *t > totals[best] {
            best = i;
        }
    }
    best
}

fn unit_score(x: f64) -> u8 {
    (1.0 + (4.0 * x.clamp(0.0, 1.0)).floor()) as u8
}

/// Deterministic rubric. A candidate with no attached arguments counts as
/// mean persuasiveness 0.5.
pub fn scripted_rubric(candidate: &Candidate, viewpoint: &TokenSet) -> Evaluation {
    let has_args = !candidate.argument_ids.is_empty();
    Evaluation::new([
        unit_score(candidate.mean_persuasiveness.unwrap_or(0.5)),
        unit_score(if has_args { 1.0 } else { 0.5 }),
        4,
        unit_score(jaccard(&tokenize(&candidate.text), viewpoint)),
        unit_score(1.0 - candidate.stance.abs()),
    ])
}

/// Arguments attached to the candidate at `index`: all, the top one, or
/// none, cycling through the angles.
fn attached(args: &[ScoredEvidence], index: usize) -> &[ScoredEvidence] {
    match index % 3 {
        0 => &args[..args.len().min(3)],
        1 => &args[..args.len().min(1)],
        _ => &[],
    }
}

pub struct LeaderContext<'a> {
    pub backend: &'a dyn Backend,
    pub prompts: &'a PromptLibrary,
    pub model_tag: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

fn args_listing(args: &[ScoredEvidence]) -> String {
    if args.is_empty() {
        return "(none)".into();
    }
    args.iter()
        .map(|a| format!("- [{}] {} (persuasiveness {:.2})", a.item.id, a.item.claim_text, a.item.persuasiveness))
        .collect::<Vec<_>>()
        .join("\n")
}

impl LeaderContext<'_> {
    fn creation_request(
        &self,
        plan: &StrategyPlan,
        viewpoint: &str,
        topic: &str,
        args: &[ScoredEvidence],
        index: usize,
    ) -> Result<GenerationRequest, GatewayError> {
        let (angle, _) = ANGLES[index % ANGLES.len()];
        let mut vars = BTreeMap::new();
        vars.insert("instruction", serde_json::to_string_pretty(&plan.leader_instruction).unwrap_or_default());
        vars.insert("core_viewpoint", viewpoint.to_string());
        vars.insert("arguments", args_listing(args));
        vars.insert("angle", angle.to_string());
        let (system, user) = self.prompts.render(RoleTag::LeaderCreate, &vars)?;
        let mut req = GenerationRequest::new(RoleTag::LeaderCreate, format!("leader-{index}"), system, user)
            .hint("angle", angle)
            .hint("topic", topic)
            .hint("evidence", !args.is_empty());
        if let Some(a) = args.first() {
            req = req.hint("claim", &a.item.claim_text).hint("evidence_id", &a.item.id);
        }
        req.temperature = self.temperature;
        req.max_tokens = self.max_tokens;
        req.model_tag = self.model_tag.clone();
        Ok(req)
    }

    fn evaluate_remote(&self, candidates: &[Candidate], viewpoint: &str) -> Result<Vec<Evaluation>, GatewayError> {
        let mut requests = Vec::with_capacity(candidates.len());
        for (i, c) in candidates.iter().enumerate() {
            let mut vars = BTreeMap::new();
            vars.insert("candidate", c.text.clone());
            vars.insert("core_viewpoint", viewpoint.to_string());
            let (system, user) = self.prompts.render(RoleTag::UscEvaluate, &vars)?;
            let mut req = GenerationRequest::new(RoleTag::UscEvaluate, format!("leader-{i}"), system, user);
            req.temperature = 0.0;
            req.max_tokens = self.max_tokens;
            req.model_tag = self.model_tag.clone();
            requests.push(req);
        }
        let mut out = Vec::with_capacity(candidates.len());
        for resp in self.backend.complete_batch(&requests) {
            let resp = resp?;
            let v = parse_json(RoleTag::UscEvaluate, &resp)?;
            let mut scores = [0u8; 5];
            for (slot, key) in scores.iter_mut().zip(["persuasiveness", "logic", "readability", "relevance", "impact"]) {
                *slot = v[key]
                    .as_f64()
                    .filter(|s| (1.0..=5.0).contains(s))
                    .map(|s| s.round() as u8)
                    .ok_or_else(|| GatewayError::Parse {
                        role: RoleTag::UscEvaluate.to_string(),
                        reason: format!("`{key}` missing or outside 1-5"),
                        raw: resp.text.clone(),
                    })?;
            }
            out.push(Evaluation::new(scores));
        }
        Ok(out)
    }

    /// Generates `n` candidates, scores each, and picks the best.
    pub fn generate_and_select(
        &self,
        plan: &StrategyPlan,
        viewpoint: &str,
        topic: &str,
        args: &[ScoredEvidence],
        n: usize,
    ) -> Result<LeaderOutput, GatewayError> {
        let n = n.max(1);
        let requests = (0..n)
            .map(|i| self.creation_request(plan, viewpoint, topic, attached(args, i), i))
            .collect::<Result<Vec<_>, _>>()?;
        let responses = self.backend.complete_batch(&requests);
        let mut candidates = Vec::with_capacity(n);
        for (i, resp) in responses.into_iter().enumerate() {
            let text = resp?.text.trim().to_string();
            let with = attached(args, i);
            let (angle, offset) = ANGLES[i % ANGLES.len()];
            candidates.push(Candidate {
                text,
                angle: angle.to_string(),
                stance: (plan.counter_stance + offset).clamp(-1.0, 1.0),
                argument_ids: with.iter().map(|a| a.item.id.clone()).collect(),
                mean_persuasiveness: (!with.is_empty())
                    .then(|| with.iter().map(|a| a.item.persuasiveness).sum::<f64>() / with.len() as f64),
            });
        }
        let evaluations = match self.backend.kind() {
            BackendKind::Scripted => {
                let view = tokenize(viewpoint);
                candidates.iter().map(|c| scripted_rubric(c, &view)).collect()
            }
            BackendKind::Remote => self.evaluate_remote(&candidates, viewpoint)?,
        };
        let totals: Vec<u8> = evaluations.iter().map(|e| e.total).collect();
        Ok(LeaderOutput {
            chosen_index: choose(&totals),
            candidates,
            evaluations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_with_low_index_ties() {
        assert_eq!(choose(&[18, 22, 20]), 1);
        assert_eq!(choose(&[20, 20]), 0);
        assert_eq!(choose(&[5]), 0);
    }

    #[test]
    fn rubric_bounds() {
        let c = Candidate {
            text: "grid upgrades".into(),
            angle: "evidence".into(),
            stance: 0.0,
            argument_ids: vec!["kb-1".into()],
            mean_persuasiveness: Some(1.0),
        };
        let e = scripted_rubric(&c, &tokenize("grid upgrades"));
        assert_eq!(e.scores(), [5, 5, 4, 5, 5]);
        assert_eq!(e.total, 24);
        let bare = Candidate { argument_ids: vec![], mean_persuasiveness: None, stance: 1.0, ..c };
        let e = scripted_rubric(&bare, &TokenSet::new());
        assert_eq!(e.scores(), [3, 3, 4, 1, 1]);
    }
}
