//! Agent-count planning, role split and timing.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::analyst::{AnalysisReport, EngagementIntensity};
use crate::cognition::{MemoryTuple, ScoredEvidence};

/// Stance the counter-messaging aims for.
pub const COUNTER_STANCE: f64 = 0.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Timing {
    Immediate,
    Staggered,
    Progressive,
}

impl Timing {
    /// Step offsets for `n` comments: everything now, two steps split
    /// ceil/floor, or three steps with the larger shares first.
    pub fn offsets(self, n: u32) -> Vec<u32> {
        let shares = match self {
            Timing::Immediate => vec![n],
            Timing::Staggered => vec![n.div_ceil(2), n / 2],
            Timing::Progressive => {
                let first = n.div_ceil(3);
                let rest = n - first;
                vec![first, rest.div_ceil(2), rest / 2]
            }
        };
        shares
            .into_iter()
            .enumerate()
            .flat_map(|(offset, k)| std::iter::repeat_n(offset as u32, k as usize))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleDistribution {
    pub balanced_moderates: u32,
    pub technical_experts: u32,
    pub community_voices: u32,
    pub fact_checkers: u32,
}

impl RoleDistribution {
    pub const NAMES: [&'static str; 4] = ["balanced_moderates", "technical_experts", "community_voices", "fact_checkers"];

    /// Even split; leftovers go to the earlier roles.
    pub fn even(total: u32) -> Self {
        let base = total / 4;
        let extra = total % 4;
        let share = |i: u32| base + u32::from(i < extra);
        Self {
            balanced_moderates: share(0),
            technical_experts: share(1),
            community_voices: share(2),
            fact_checkers: share(3),
        }
    }

    pub fn counts(&self) -> [u32; 4] {
        [self.balanced_moderates, self.technical_experts, self.community_voices, self.fact_checkers]
    }

    pub fn total(&self) -> u32 {
        self.counts().iter().sum()
    }

    /// One role name per agent, in priority order.
    pub fn expand(&self) -> Vec<&'static str> {
        Self::NAMES
            .iter()
            .zip(self.counts())
            .flat_map(|(name, k)| std::iter::repeat_n(*name, k as usize))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderInstruction {
    pub tone: String,
    pub style: String,
    pub key_points: Vec<String>,
    pub target_audience: String,
    pub content_length: String,
}

impl LeaderInstruction {
    pub fn default_for(claim: Option<&str>) -> Self {
        Self {
            tone: "calm".into(),
            style: "evidence-led".into(),
            key_points: claim.map(|c| vec![c.to_string()]).unwrap_or_default(),
            target_audience: "undecided readers".into(),
            content_length: "short".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyPlan {
    pub strategy_id: String,
    pub target_post: String,
    pub total_agents: u32,
    pub role_distribution: RoleDistribution,
    pub timing: Timing,
    pub core_counter_argument: String,
    pub core_argument_id: Option<String>,
    pub counter_stance: f64,
    pub leader_instruction: LeaderInstruction,
    /// Steps of the memory tuples consulted.
    pub recalled_steps: Vec<u32>,
}

impl StrategyPlan {
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("plan serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

pub fn base_count(level: u8) -> u32 {
    match level {
        0 | 1 => 5,
        2 => 8,
        3 => 15,
        _ => 30,
    }
}

pub fn plan_total(level: u8, heat: EngagementIntensity, urgency: u8, risk: bool) -> u32 {
    let scaled = (f64::from(base_count(level)) * heat.multiplier() - 1e-9).ceil() as u32;
    scaled + if urgency >= 3 { 2 } else { 0 } + u32::from(risk)
}

/// Majority timing among recalled tuples whose reward is strictly above
/// the median recalled reward. Ties go to the earlier variant.
pub fn memory_timing(recalled: &[&MemoryTuple]) -> Option<Timing> {
    if recalled.is_empty() {
        return None;
    }
    let mut rewards: Vec<f64> = recalled.iter().map(|t| t.reward).collect();
    rewards.sort_by(f64::total_cmp);
    let n = rewards.len();
    let median = if n % 2 == 1 { rewards[n / 2] } else { (rewards[n / 2 - 1] + rewards[n / 2]) / 2.0 };
    let mut votes = [0usize; 3];
    for t in recalled.iter().filter(|t| t.reward > median) {
        votes[t.action.timing as usize] += 1;
    }
    let best = (0..3).max_by(|a, b| votes[*a].cmp(&votes[*b]).then(b.cmp(a)))?;
    (votes[best] > 0).then_some([Timing::Immediate, Timing::Staggered, Timing::Progressive][best])
}

fn core_argument(args: &[ScoredEvidence]) -> (String, Option<String>) {
    match args.first() {
        Some(a) => (a.item.claim_text.clone(), Some(a.item.id.clone())),
        None => ("Check the verified record before sharing.".into(), None),
    }
}

pub fn plan(report: &AnalysisReport, recalled: &[&MemoryTuple], args: &[ScoredEvidence], step: u32) -> StrategyPlan {
    let total = plan_total(
        report.extremism_level,
        report.engagement_intensity,
        report.urgency,
        report.amplification_risk,
    );
    let default_timing = if report.urgency >= 3 { Timing::Immediate } else { Timing::Staggered };
    let (claim, id) = core_argument(args);
    StrategyPlan {
        strategy_id: format!("plan-{step:03}-{}", report.post_id),
        target_post: report.post_id.clone(),
        total_agents: total,
        role_distribution: RoleDistribution::even(total),
        timing: memory_timing(recalled).unwrap_or(default_timing),
        leader_instruction: LeaderInstruction::default_for(Some(&claim)),
        core_counter_argument: claim,
        core_argument_id: id,
        counter_stance: COUNTER_STANCE,
        recalled_steps: recalled.iter().map(|t| t.step).collect(),
    }
}

/// Strategist-free rule: fixed size, even split, immediate, no recall.
pub fn fixed_plan(report: &AnalysisReport, total: u32, args: &[ScoredEvidence], step: u32) -> StrategyPlan {
    let (claim, id) = core_argument(args);
    StrategyPlan {
        strategy_id: format!("fixed-{step:03}-{}", report.post_id),
        target_post: report.post_id.clone(),
        total_agents: total,
        role_distribution: RoleDistribution::even(total),
        timing: Timing::Immediate,
        leader_instruction: LeaderInstruction::default_for(Some(&claim)),
        core_counter_argument: claim,
        core_argument_id: id,
        counter_stance: COUNTER_STANCE,
        recalled_steps: vec![],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cognition::{ActionDescriptor, ObservationRef, TokenSet};

    #[test]
    fn totals() {
        assert_eq!(plan_total(2, EngagementIntensity::Low, 1, false), 8);
        assert_eq!(plan_total(3, EngagementIntensity::High, 1, false), 23);
        assert_eq!(plan_total(4, EngagementIntensity::Moderate, 4, true), 39);
        assert_eq!(plan_total(1, EngagementIntensity::Moderate, 1, false), 6);
    }

    #[test]
    fn even_split_priority() {
        let d = RoleDistribution::even(9);
        assert_eq!(d.counts(), [3, 2, 2, 2]);
        assert_eq!(d.total(), 9);
        assert_eq!(RoleDistribution::even(0).total(), 0);
        assert_eq!(d.expand().len(), 9);
    }

    #[test]
    fn timing_offsets() {
        assert_eq!(Timing::Immediate.offsets(3), vec![0, 0, 0]);
        let s = Timing::Staggered.offsets(9);
        assert_eq!(s.iter().filter(|&&o| o == 0).count(), 5);
        assert_eq!(s.iter().filter(|&&o| o == 1).count(), 4);
        let p = Timing::Progressive.offsets(10);
        assert_eq!([0, 1, 2].map(|k| p.iter().filter(|&&o| o == k).count()), [4, 3, 3]);
    }

    fn tuple(step: u32, reward: f64, timing: Timing) -> MemoryTuple {
        MemoryTuple {
            step,
            action: ActionDescriptor {
                plan_digest: String::new(),
                leader_digest: None,
                amplifier_summary: String::new(),
                timing,
                total_agents: 8,
            },
            observation: ObservationRef { step, post_ids: vec![], comment_count: 0, topic_tokens: TokenSet::new() },
            reward,
        }
    }

    #[test]
    fn memory_bias() {
        let a = tuple(1, 0.3, Timing::Progressive);
        let b = tuple(2, 0.1, Timing::Immediate);
        let c = tuple(3, 0.2, Timing::Immediate);
        assert_eq!(memory_timing(&[&a, &b, &c]), Some(Timing::Progressive));
        assert_eq!(memory_timing(&[&b]), None);
        assert_eq!(memory_timing(&[]), None);
    }
}
