//! Mean-field state and the observation it is estimated from.

use serde::{Deserialize, Serialize};

use super::world::World;
use crate::social::feed::window_posts;
use crate::social::Comment;

/// Population extremity `v` and sentiment `e`, both in [0,1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldState {
    pub v: f64,
    pub e: f64,
    pub step: u32,
}

/// Ids of the posts in the feed window and of every comment on them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationSnapshot {
    pub step: u32,
    pub posts: Vec<String>,
    pub comments: Vec<String>,
}

impl ObservationSnapshot {
    pub fn resolve<'a>(&self, world: &'a World) -> Vec<&'a Comment> {
        self.comments.iter().filter_map(|id| world.comments.get(id)).collect()
    }
}

pub fn observe(world: &World, step: u32, window: u32) -> ObservationSnapshot {
    let posts = window_posts(world, step, window);
    let comments = posts
        .iter()
        .flat_map(|p| p.comment_ids.iter())
        .filter(|id| world.comments.get(*id).is_some_and(|c| c.time_step <= step))
        .cloned()
        .collect();
    ObservationSnapshot {
        step,
        posts: posts.iter().map(|p| p.id.clone()).collect(),
        comments,
    }
}

/// Like-weighted mean of |stance| and of sentiment. With no comments the
/// previous state carries over, or (0, 0.5) before any measurement.
pub fn estimate_state(comments: &[&Comment], step: u32, prev: Option<&MeanFieldState>) -> MeanFieldState {
    if comments.is_empty() {
        let (v, e) = prev.map_or((0.0, 0.5), |p| (p.v, p.e));
        return MeanFieldState { v, e, step };
    }
    let total: f64 = comments.iter().map(|c| c.likes as f64 + 1.0).sum();
    let (mut v, mut e) = (0.0, 0.0);
    for c in comments {
        let w = (c.likes as f64 + 1.0) / total;
        v += w * c.stance.abs();
        e += w * c.sentiment;
    }
    MeanFieldState {
        v: v.clamp(0.0, 1.0),
        e: e.clamp(0.0, 1.0),
        step,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::social::AgentType;

    fn c(stance: f64, sentiment: f64, likes: u64) -> Comment {
        Comment {
            id: "c".into(),
            post_id: "p".into(),
            author_id: "u".into(),
            agent_type: AgentType::Normal,
            time_step: 1,
            text: String::new(),
            stance,
            sentiment,
            toxicity: 0.1,
            evidence: false,
            likes,
        }
    }

    #[test]
    fn weighted_example() {
        let a = c(-0.25, 0.2, 0);
        let b = c(0.75, 0.6, 3);
        let s = estimate_state(&[&a, &b], 2, None);
        assert!((s.v - 0.65).abs() < 1e-12);
        assert!((s.e - (0.2 / 5.0 + 0.6 * 4.0 / 5.0)).abs() < 1e-12);
    }

    #[test]
    fn single_and_empty() {
        let a = c(-0.4, 0.3, 9);
        let s = estimate_state(&[&a], 1, None);
        assert_eq!((s.v, s.e), (0.4, 0.3));
        let carried = estimate_state(&[], 2, Some(&s));
        assert_eq!((carried.v, carried.e, carried.step), (0.4, 0.3, 2));
    }
}
