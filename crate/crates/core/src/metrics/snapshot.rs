//! Snapshot aggregation over recorded comments.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::graders::{CommentGrade, Grader};
use super::labels::{entropy, extremity_distribution, ExtremityLabel};
use crate::social::{AgentType, Comment};

/// A post's thread must exceed this many comments to be evaluated.
pub const MIN_THREAD: usize = 50;

/// Six metrics on a 0–100 scale. `None` when no eligible comment carried a
/// valid grade for that metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSnapshot {
    pub t: u32,
    pub sentiment: Option<f64>,
    pub toxicity: Option<f64>,
    pub extremity: Option<f64>,
    pub aqs: Option<f64>,
    pub fallacy: Option<f64>,
    pub evidence: Option<f64>,
    pub n_comments: usize,
    /// Shannon entropy (nats) of the extremity label distribution.
    pub extremity_entropy: Option<f64>,
}

/// Total comments per post across the given records, all agent types.
pub fn thread_sizes(comments: &[Comment]) -> HashMap<&str, usize> {
    let mut n = HashMap::new();
    for c in comments {
        *n.entry(c.post_id.as_str()).or_insert(0) += 1;
    }
    n
}

pub fn is_eligible(agent_type: AgentType, time_step: u32, thread_size: usize, t: u32) -> bool {
    agent_type == AgentType::Normal && time_step <= t && thread_size > MIN_THREAD
}

pub fn eligible_comments(comments: &[Comment], t: u32) -> Vec<&Comment> {
    let sizes = thread_sizes(comments);
    comments
        .iter()
        .filter(|c| is_eligible(c.agent_type, c.time_step, sizes[c.post_id.as_str()], t))
        .collect()
}

fn mean_pct(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values.flatten() {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| 100.0 * sum / n as f64)
}

fn as_unit(b: Option<bool>) -> Option<f64> {
    b.map(|b| if b { 1.0 } else { 0.0 })
}

pub fn aggregate(t: u32, grades: &[CommentGrade]) -> MetricSnapshot {
    let labels: Vec<ExtremityLabel> = grades
        .iter()
        .filter_map(|g| g.extremity)
        .map(ExtremityLabel::from_unit)
        .collect();
    MetricSnapshot {
        t,
        sentiment: mean_pct(grades.iter().map(|g| g.sentiment)),
        toxicity: mean_pct(grades.iter().map(|g| g.toxicity)),
        extremity: mean_pct(grades.iter().map(|g| g.extremity)),
        aqs: mean_pct(grades.iter().map(|g| g.aqs)),
        fallacy: mean_pct(grades.iter().map(|g| as_unit(g.fallacious))),
        evidence: mean_pct(grades.iter().map(|g| as_unit(g.evidence))),
        n_comments: grades.len(),
        extremity_entropy: (!labels.is_empty()).then(|| entropy(&extremity_distribution(&labels))),
    }
}

/// Grades the eligible comments for step `t` and averages them.
pub fn snapshot(comments: &[Comment], t: u32, grader: &dyn Grader) -> MetricSnapshot {
    let eligible = eligible_comments(comments, t);
    let grades = grader.grade_batch(&eligible);
    aggregate(t, &grades)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::ScriptedGrader;

    fn c(post: &str, kind: AgentType, step: u32, toxicity: f64) -> Comment {
        Comment {
            id: format!("{post}-{step}-{toxicity}"),
            post_id: post.into(),
            author_id: "u".into(),
            agent_type: kind,
            time_step: step,
            text: String::new(),
            stance: 0.0,
            sentiment: 0.5,
            toxicity,
            evidence: false,
            likes: 0,
        }
    }

    #[test]
    fn toxicity_mean_scaled() {
        let g = [0.2, 0.4].map(|t| CommentGrade { toxicity: Some(t), ..Default::default() });
        let s = aggregate(1, &g);
        assert!((s.toxicity.unwrap() - 30.0).abs() < 1e-12);
        assert_eq!(s.sentiment, None);
    }

    #[test]
    fn thread_threshold_is_strict() {
        let mut all: Vec<Comment> = (0..51).map(|_| c("big", AgentType::Normal, 1, 0.1)).collect();
        all.extend((0..50).map(|_| c("small", AgentType::Normal, 1, 0.1)));
        let e = eligible_comments(&all, 1);
        assert_eq!(e.len(), 51);
        assert!(e.iter().all(|c| c.post_id == "big"));
    }

    #[test]
    fn empty_set_is_missing() {
        let s = snapshot(&[], 5, &ScriptedGrader::default());
        assert_eq!(s.n_comments, 0);
        assert_eq!(s.extremity, None);
        assert_eq!(s.extremity_entropy, None);
    }

    #[test]
    fn eligibility_predicate() {
        assert!(is_eligible(AgentType::Normal, 3, 51, 3));
        assert!(!is_eligible(AgentType::Normal, 4, 51, 3));
        assert!(!is_eligible(AgentType::Malicious, 1, 80, 3));
        assert!(!is_eligible(AgentType::Normal, 1, 50, 3));
    }
}
