//! Like-ranked comment threads and the shared post feed.

use std::cmp::Ordering;

use super::content::{Comment, Post};
use crate::engine::World;

fn feed_order(a: &Comment, b: &Comment) -> Ordering {
    b.likes
        .cmp(&a.likes)
        .then(b.time_step.cmp(&a.time_step))
        .then(a.id.cmp(&b.id))
}

/// Top-`k` comments: likes descending, then newer first, then id.
pub fn rank_feed<'a>(comments: impl IntoIterator<Item = &'a Comment>, k: usize) -> Vec<&'a Comment> {
    let mut all: Vec<&Comment> = comments.into_iter().collect();
    all.sort_by(|a, b| feed_order(a, b));
    all.truncate(k);
    all
}

#[derive(Debug, Clone)]
pub struct FeedPost<'a> {
    pub post: &'a Post,
    pub top_comments: Vec<&'a Comment>,
    pub comment_count: usize,
}

/// What every ordinary user browses in one step.
#[derive(Debug, Clone, Default)]
pub struct Feed<'a> {
    pub posts: Vec<FeedPost<'a>>,
}

impl<'a> Feed<'a> {
    /// Union of the top comments across the feed, post order preserved.
    pub fn visible_comments(&self) -> Vec<&'a Comment> {
        self.posts.iter().flat_map(|p| p.top_comments.iter().copied()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }
}

/// Engagement decayed by age; decides which posts make the feed.
pub fn hotness(world: &World, post: &Post, step: u32) -> f64 {
    let age = step.saturating_sub(post.publish_step) as i32;
    let comment_likes: u64 = post
        .comment_ids
        .iter()
        .filter_map(|id| world.comments.get(id))
        .map(|c| c.likes)
        .sum();
    let engagement = 1.0 + post.likes as f64 + post.comment_ids.len() as f64 + comment_likes as f64;
    engagement * 0.85f64.powi(age)
}

/// Posts visible at `step` and published within the last `window` steps.
pub fn window_posts(world: &World, step: u32, window: u32) -> Vec<&Post> {
    world
        .posts
        .values()
        .filter(|p| p.visible_at(step) && step - p.publish_step < window)
        .collect()
}

pub fn build_feed<'a>(world: &'a World, step: u32, window: u32, n_posts: usize, k: usize) -> Feed<'a> {
    let mut candidates: Vec<(f64, &Post)> = window_posts(world, step, window)
        .into_iter()
        .map(|p| (hotness(world, p, step), p))
        .collect();
    candidates.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then(b.1.publish_step.cmp(&a.1.publish_step))
            .then(a.1.id.cmp(&b.1.id))
    });
    candidates.truncate(n_posts);
    let posts = candidates
        .into_iter()
        .map(|(_, post)| {
            let comments = post.comment_ids.iter().filter_map(|id| world.comments.get(id));
            FeedPost {
                post,
                top_comments: rank_feed(comments, k),
                comment_count: post.comment_ids.len(),
            }
        })
        .collect();
    Feed { posts }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::social::content::AgentType;

    fn c(id: &str, likes: u64, step: u32) -> Comment {
        Comment {
            id: id.into(),
            post_id: "p".into(),
            author_id: "u".into(),
            agent_type: AgentType::Normal,
            time_step: step,
            text: String::new(),
            stance: 0.0,
            sentiment: 0.5,
            toxicity: 0.1,
            evidence: false,
            likes,
        }
    }

    #[test]
    fn ranks_by_likes() {
        let cs = [c("a", 5, 1), c("b", 3, 1), c("c", 9, 1)];
        let got: Vec<u64> = rank_feed(&cs, 3).iter().map(|c| c.likes).collect();
        assert_eq!(got, vec![9, 5, 3]);
    }

    #[test]
    fn ties_prefer_newer_then_id() {
        let cs = [c("a", 4, 2), c("b", 4, 3)];
        assert_eq!(rank_feed(&cs, 2)[0].id, "b");
        let cs = [c("z", 4, 3), c("y", 4, 3)];
        assert_eq!(rank_feed(&cs, 2)[0].id, "y");
    }

    #[test]
    fn empty_and_truncation() {
        let none: [Comment; 0] = [];
        assert!(rank_feed(&none, 3).is_empty());
        let cs = [c("a", 1, 1), c("b", 2, 1)];
        assert_eq!(rank_feed(&cs, 5).len(), 2);
        assert_eq!(rank_feed(&cs, 1).len(), 1);
    }
}
