//! Supporting comments from positive personas.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::strategist::StrategyPlan;
use crate::rng::SimRng;
use crate::social::PersonaRecord;

/// Probability that an amplifier cites evidence when arguments exist.
pub const EVIDENCE_RATE: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplifierDraft {
    pub author_id: String,
    pub role_identity: String,
    pub stance: f64,
    pub sentiment: f64,
    pub toxicity: f64,
    pub evidence: bool,
    /// Steps after the current one at which the comment appears.
    pub offset: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AmplifierBatch {
    pub drafts: Vec<AmplifierDraft>,
    /// Personas had to be reused because the pool was too small.
    pub reused_personas: bool,
}

/// One draft per planned agent. Personas are drawn without replacement
/// while the pool lasts.
pub fn amplify(plan: &StrategyPlan, center: f64, has_args: bool, pool: &[PersonaRecord], rng: &mut SimRng) -> AmplifierBatch {
    let n = plan.total_agents as usize;
    if n == 0 || pool.is_empty() {
        return AmplifierBatch::default();
    }
    let reused = pool.len() < n;
    let authors: Vec<usize> = if reused {
        log::warn!("amplifier pool has {} personas for {n} agents; sampling with replacement", pool.len());
        (0..n).map(|_| rng.random_range(0..pool.len())).collect()
    } else {
        let mut picks = sample(rng, pool.len(), n).into_vec();
        picks.sort_unstable();
        picks
    };
    let roles = plan.role_distribution.expand();
    let offsets = plan.timing.offsets(plan.total_agents);
    let drafts = authors
        .into_iter()
        .zip(roles)
        .zip(offsets)
        .map(|((idx, role), offset)| AmplifierDraft {
            author_id: pool[idx].id.clone(),
            role_identity: role.to_string(),
            stance: (center + rng.random_range(-0.2..=0.2)).clamp(-1.0, 1.0),
            sentiment: rng.random_range(0.6..=0.9),
            toxicity: rng.random_range(0.0..=0.1),
            evidence: has_args && rng.random_bool(EVIDENCE_RATE),
            offset,
        })
        .collect();
    AmplifierBatch { drafts, reused_personas: reused }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngRoot;
    use crate::social::PersonaPool;
    use crate::team::{RoleDistribution, Timing, LeaderInstruction};

    fn plan(total: u32, timing: Timing) -> StrategyPlan {
        StrategyPlan {
            strategy_id: "s".into(),
            target_post: "p".into(),
            total_agents: total,
            role_distribution: RoleDistribution::even(total),
            timing,
            core_counter_argument: String::new(),
            core_argument_id: None,
            counter_stance: 0.0,
            leader_instruction: LeaderInstruction::default_for(None),
            recalled_steps: vec![],
        }
    }

    #[test]
    fn cardinality_and_ranges() {
        let pool = PersonaPool::bundled().unwrap().positive;
        let mut rng = RngRoot(1).stream("amp", 1, "");
        let b = amplify(&plan(8, Timing::Immediate), 0.0, true, &pool, &mut rng);
        assert_eq!(b.drafts.len(), 8);
        assert!(!b.reused_personas);
        let mut authors: Vec<_> = b.drafts.iter().map(|d| &d.author_id).collect();
        authors.sort();
        authors.dedup();
        assert_eq!(authors.len(), 8);
        for d in &b.drafts {
            assert!((-0.2..=0.2).contains(&d.stance));
            assert!((0.6..=0.9).contains(&d.sentiment));
            assert!(d.toxicity <= 0.1);
            assert_eq!(d.offset, 0);
        }
    }

    #[test]
    fn staggered_split() {
        let pool = PersonaPool::bundled().unwrap().positive;
        let mut rng = RngRoot(1).stream("amp", 1, "");
        let b = amplify(&plan(9, Timing::Staggered), 0.0, false, &pool, &mut rng);
        assert_eq!(b.drafts.iter().filter(|d| d.offset == 0).count(), 5);
        assert_eq!(b.drafts.iter().filter(|d| d.offset == 1).count(), 4);
        assert!(b.drafts.iter().all(|d| !d.evidence));
    }

    #[test]
    fn small_pool_reuses() {
        let pool = PersonaPool::bundled().unwrap().positive[..3].to_vec();
        let mut rng = RngRoot(1).stream("amp", 1, "");
        let b = amplify(&plan(5, Timing::Immediate), 0.0, false, &pool, &mut rng);
        assert_eq!(b.drafts.len(), 5);
        assert!(b.reused_personas);
    }
}
