//! Coordinated malicious commenting and upvote boosting.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::content::{AgentType, Post};
use super::news::NewsPolarity;
use super::persona::PersonaRecord;
use crate::engine::World;
use crate::error::{Result, SimError};
use crate::rng::SimRng;

/// A malicious comment before text generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaliciousDraft {
    pub post_id: String,
    pub author_id: String,
    pub stance: f64,
    pub sentiment: f64,
    pub toxicity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostEvent {
    pub comment_id: String,
    pub likes: u64,
}

/// Adversarial posts published within the rolling window ending at `step`.
pub fn attack_targets(world: &World, step: u32, window: u32) -> Vec<&Post> {
    world
        .posts
        .values()
        .filter(|p| {
            p.polarity == NewsPolarity::Adversarial
                && p.visible_at(step)
                && p.publish_step <= step
                && step - p.publish_step < window
        })
        .collect()
}

/// For every in-window adversarial item, `per_item` distinct negative
/// personas each write one hostile comment.
pub fn attack(
    world: &World,
    step: u32,
    window: u32,
    per_item: usize,
    pool: &[PersonaRecord],
    rng: &mut SimRng,
) -> Result<Vec<MaliciousDraft>> {
    let targets = attack_targets(world, step, window);
    if targets.is_empty() {
        return Ok(Vec::new());
    }
    if pool.len() < per_item {
        return Err(SimError::InvalidConfig(format!(
            "malicious pool has {} personas, {per_item} required",
            pool.len()
        )));
    }
    let mut out = Vec::with_capacity(targets.len() * per_item);
    for post in targets {
        let mut picks = sample(rng, pool.len(), per_item).into_vec();
        picks.sort_unstable();
        for idx in picks {
            out.push(MaliciousDraft {
                post_id: post.id.clone(),
                author_id: pool[idx].id.clone(),
                stance: rng.random_range(-1.0..=-0.8),
                sentiment: rng.random_range(0.05..=0.2),
                toxicity: rng.random_range(0.6..=1.0),
            });
        }
    }
    Ok(out)
}

/// Picks up to `count` malicious comments on in-window adversarial items,
/// most extreme first then most liked, and grants each `likes` upvotes.
pub fn boost(world: &World, step: u32, window: u32, count: usize, likes: u64) -> Vec<BoostEvent> {
    let mut candidates: Vec<_> = attack_targets(world, step, window)
        .into_iter()
        .flat_map(|p| p.comment_ids.iter())
        .filter_map(|id| world.comments.get(id))
        .filter(|c| c.agent_type == AgentType::Malicious)
        .collect();
    candidates.sort_by(|a, b| {
        b.stance
            .abs()
            .total_cmp(&a.stance.abs())
            .then(b.likes.cmp(&a.likes))
            .then(a.id.cmp(&b.id))
    });
    candidates
        .into_iter()
        .take(count)
        .map(|c| BoostEvent {
            comment_id: c.id.clone(),
            likes,
        })
        .collect()
}
