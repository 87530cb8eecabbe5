//! Ordinary-user state, scripted opinion update and session actions.

use std::collections::BTreeSet;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::content::Comment;
use super::feed::Feed;
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ProfileTag {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrdinaryUser {
    pub id: String,
    pub persona_ref: String,
    /// Opinion in [-1, 1]; 0 is neutral.
    pub opinion: f64,
    /// Mood in [0, 1].
    pub mood: f64,
    pub susceptibility: f64,
    pub activity: f64,
    pub profile: ProfileTag,
    pub model_tag: String,
    /// Reflection paragraphs; only written by the remote backend.
    #[serde(default)]
    pub reflections: Vec<String>,
}

/// Per-profile dynamics parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateParams {
    /// Influence rate β.
    pub rate: f64,
    /// Std-dev of the opinion noise.
    pub noise: f64,
    pub activity_scale: f64,
}

/// `(likes+1)/Σ(likes+1)` weights over a comment set.
pub fn like_weights(comments: &[&Comment]) -> Vec<f64> {
    let total: f64 = comments.iter().map(|c| c.likes as f64 + 1.0).sum();
    comments.iter().map(|c| (c.likes as f64 + 1.0) / total).collect()
}

/// Like-weighted means of stance and sentiment. `None` for an empty set.
pub fn weighted_means(comments: &[&Comment]) -> Option<(f64, f64)> {
    if comments.is_empty() {
        return None;
    }
    let w = like_weights(comments);
    let mu = comments.iter().zip(&w).map(|(c, w)| w * c.stance).sum();
    let nu = comments.iter().zip(&w).map(|(c, w)| w * c.sentiment).sum();
    Some((mu, nu))
}

/// Pulls opinion toward the feed's weighted stance and mood toward its
/// weighted sentiment at rate `σβ`. The noise term is scaled by `σ`, so an
/// insusceptible user never moves.
pub fn update_user(user: &OrdinaryUser, visible: &[&Comment], params: UpdateParams, rng: &mut SimRng) -> OrdinaryUser {
    let Some((mu, nu)) = weighted_means(visible) else {
        return user.clone();
    };
    let pull = user.susceptibility * params.rate;
    let noise = if params.noise > 0.0 && user.susceptibility > 0.0 {
        Normal::new(0.0, params.noise * user.susceptibility)
            .expect("positive std-dev")
            .sample(rng)
    } else {
        0.0
    };
    let mut next = user.clone();
    next.opinion = (user.opinion + pull * (mu - user.opinion) + noise).clamp(-1.0, 1.0);
    next.mood = (user.mood + pull * (nu - user.mood)).clamp(0.0, 1.0);
    next
}

/// Toxicity surrogate: monotone in extremity, anti-monotone in mood.
pub fn toxicity(extremity: f64, mood: f64) -> f64 {
    (0.1 + 0.6 * extremity.abs() * (1.0 - mood)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActionKind {
    LikePost,
    SharePost,
    CommentPost,
    LikeComment,
    FollowUser,
    Ignore,
}

impl ActionKind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s.trim() {
            "like-post" => ActionKind::LikePost,
            "share-post" => ActionKind::SharePost,
            "comment-post" => ActionKind::CommentPost,
            "like-comment" => ActionKind::LikeComment,
            "follow-user" => ActionKind::FollowUser,
            "ignore" => ActionKind::Ignore,
            _ => return None,
        })
    }
}

/// Numeric attributes of a comment the user is about to write.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommentDraft {
    pub stance: f64,
    pub sentiment: f64,
    pub toxicity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserAction {
    pub kind: ActionKind,
    pub target: Option<String>,
    pub draft: Option<CommentDraft>,
    /// Free text supplied by a remote backend.
    pub content: Option<String>,
}

const ACTION_WEIGHTS: [(ActionKind, f64); 6] = [
    (ActionKind::LikePost, 0.2),
    (ActionKind::SharePost, 0.1),
    (ActionKind::CommentPost, 0.35),
    (ActionKind::LikeComment, 0.2),
    (ActionKind::FollowUser, 0.1),
    (ActionKind::Ignore, 0.05),
];

/// At most this many like-comment actions per session.
const MAX_COMMENT_LIKES: usize = 2;

fn pick_weighted<T: Copy>(items: &[(T, f64)], rng: &mut SimRng) -> Option<T> {
    let total: f64 = items.iter().map(|(_, w)| *w).sum();
    if items.is_empty() || total <= 0.0 {
        return None;
    }
    let mut x = rng.random::<f64>() * total;
    for (item, w) in items {
        if x < *w {
            return Some(*item);
        }
        x -= w;
    }
    items.last().map(|(i, _)| *i)
}

/// Whether the user engages this step.
pub fn engaged(user: &OrdinaryUser, params: UpdateParams, rng: &mut SimRng) -> bool {
    rng.random::<f64>() < (user.activity * params.activity_scale).clamp(0.0, 1.0)
}

/// One browsing session. Empty when the user does not engage, otherwise
/// 5–8 actions targeting ids present in the feed.
pub fn act(user: &OrdinaryUser, feed: &Feed<'_>, params: UpdateParams, stance_sd: f64, rng: &mut SimRng) -> Vec<UserAction> {
    if feed.is_empty() || !engaged(user, params, rng) {
        return Vec::new();
    }
    session(user, feed, stance_sd, rng)
}

/// The 5–8 actions of a user already known to be engaged.
pub fn session(user: &OrdinaryUser, feed: &Feed<'_>, stance_sd: f64, rng: &mut SimRng) -> Vec<UserAction> {
    if feed.is_empty() {
        return Vec::new();
    }
    let n = rng.random_range(5..=8);
    let post_weights: Vec<(usize, f64)> = feed
        .posts
        .iter()
        .enumerate()
        .map(|(i, p)| (i, (p.comment_count as f64 + 5.0).sqrt()))
        .collect();
    let comments = feed.visible_comments();
    // Homophilous liking: closer stance, more likely.
    let comment_weights: Vec<(usize, f64)> = comments
        .iter()
        .enumerate()
        .map(|(i, c)| (i, (-(c.stance - user.opinion).abs() / 0.25).exp() * (c.likes as f64 + 1.0).sqrt()))
        .collect();
    let jitter = Normal::new(0.0, stance_sd.max(0.0)).ok();

    let mut actions = Vec::with_capacity(n);
    let mut commented: BTreeSet<usize> = BTreeSet::new();
    let mut liked: BTreeSet<usize> = BTreeSet::new();
    for _ in 0..n {
        let kind = pick_weighted(&ACTION_WEIGHTS, rng).unwrap_or(ActionKind::Ignore);
        let action = match kind {
            ActionKind::LikePost | ActionKind::SharePost => {
                let i = pick_weighted(&post_weights, rng).unwrap_or(0);
                UserAction { kind, target: Some(feed.posts[i].post.id.clone()), draft: None, content: None }
            }
            ActionKind::CommentPost => {
                let i = pick_weighted(&post_weights, rng).unwrap_or(0);
                if commented.insert(i) {
                    let zeta = jitter.map_or(0.0, |d| d.sample(rng));
                    let stance = (user.opinion + zeta).clamp(-1.0, 1.0);
                    UserAction {
                        kind,
                        target: Some(feed.posts[i].post.id.clone()),
                        draft: Some(CommentDraft {
                            stance,
                            sentiment: user.mood,
                            toxicity: toxicity(user.opinion, user.mood),
                        }),
                        content: None,
                    }
                } else {
                    UserAction { kind: ActionKind::LikePost, target: Some(feed.posts[i].post.id.clone()), draft: None, content: None }
                }
            }
            ActionKind::LikeComment => {
                let pick = if liked.len() < MAX_COMMENT_LIKES {
                    let open: Vec<(usize, f64)> =
                        comment_weights.iter().copied().filter(|(i, _)| !liked.contains(i)).collect();
                    pick_weighted(&open, rng)
                } else {
                    None
                };
                match pick {
                    Some(i) => {
                        liked.insert(i);
                        UserAction { kind, target: Some(comments[i].id.clone()), draft: None, content: None }
                    }
                    None => UserAction { kind: ActionKind::Ignore, target: None, draft: None, content: None },
                }
            }
            ActionKind::FollowUser => match pick_weighted(&comment_weights, rng) {
                Some(i) => UserAction { kind, target: Some(comments[i].author_id.clone()), draft: None, content: None },
                None => UserAction { kind: ActionKind::Ignore, target: None, draft: None, content: None },
            },
            ActionKind::Ignore => UserAction { kind, target: None, draft: None, content: None },
        };
        actions.push(action);
    }
    actions
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngRoot;
    use crate::social::content::AgentType;

    fn user(o: f64, s: f64, sigma: f64) -> OrdinaryUser {
        OrdinaryUser {
            id: "u001".into(),
            persona_ref: "p".into(),
            opinion: o,
            mood: s,
            susceptibility: sigma,
            activity: 1.0,
            profile: ProfileTag::A,
            model_tag: "model-a".into(),
            reflections: vec![],
        }
    }

    fn comment(stance: f64, sentiment: f64, likes: u64) -> Comment {
        Comment {
            id: "c".into(),
            post_id: "p".into(),
            author_id: "a".into(),
            agent_type: AgentType::Normal,
            time_step: 1,
            text: String::new(),
            stance,
            sentiment,
            toxicity: 0.0,
            evidence: false,
            likes,
        }
    }

    const NO_NOISE: UpdateParams = UpdateParams { rate: 0.5, noise: 0.0, activity_scale: 1.0 };

    #[test]
    fn convex_step_toward_feed() {
        let mut rng = RngRoot(1).stream("t", 0, "");
        let c = comment(-1.0, 0.5, 0);
        let out = update_user(&user(0.0, 0.5, 1.0), &[&c], NO_NOISE, &mut rng);
        assert_eq!(out.opinion, -0.5);
    }

    #[test]
    fn zero_susceptibility_is_fixed() {
        let mut rng = RngRoot(1).stream("t", 0, "");
        let c = comment(-1.0, 0.0, 40);
        let params = UpdateParams { noise: 0.02, ..NO_NOISE };
        let u = user(0.3, 0.6, 0.0);
        assert_eq!(update_user(&u, &[&c], params, &mut rng), u);
    }

    #[test]
    fn fixed_point_when_feed_matches() {
        let mut rng = RngRoot(1).stream("t", 0, "");
        let c = comment(0.9, 0.5, 3);
        let out = update_user(&user(0.9, 0.5, 1.0), &[&c], NO_NOISE, &mut rng);
        assert!((out.opinion - 0.9).abs() < 1e-15);
    }

    #[test]
    fn empty_feed_unchanged() {
        let mut rng = RngRoot(1).stream("t", 0, "");
        let u = user(0.2, 0.4, 0.8);
        assert_eq!(update_user(&u, &[], NO_NOISE, &mut rng), u);
    }

    #[test]
    fn toxicity_surrogate_values() {
        assert!((toxicity(0.0, 0.5) - 0.1).abs() < 1e-15);
        assert!((toxicity(-1.0, 0.0) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn like_weights_sum_to_one() {
        let a = comment(0.0, 0.0, 0);
        let b = comment(0.0, 0.0, 3);
        let w = like_weights(&[&a, &b]);
        assert_eq!(w, vec![0.2, 0.8]);
    }
}
