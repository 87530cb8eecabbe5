//! Five-class grader labels and their scalar maps.

use serde::{Deserialize, Serialize};

/// Scores shared by both five-class scales, in label order.
pub const FIVE_CLASS_SCORES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SentimentLabel {
    VeryNegative,
    Negative,
    Neutral,
    Positive,
    VeryPositive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ExtremityLabel {
    VeryModerate,
    Moderate,
    Neutral,
    Extreme,
    VeryExtreme,
}

macro_rules! five_class {
    ($ty:ident, [$($variant:ident => $text:literal),* $(,)?]) => {
        impl $ty {
            pub const ALL: [$ty; 5] = [$($ty::$variant),*];

            pub fn as_str(self) -> &'static str {
                match self { $($ty::$variant => $text),* }
            }

            pub fn index(self) -> usize {
                Self::ALL.iter().position(|l| *l == self).unwrap()
            }

            pub fn score(self) -> f64 {
                FIVE_CLASS_SCORES[self.index()]
            }

            /// Exact label text, case-insensitive, surrounding quotes and
            /// punctuation ignored.
            pub fn parse(text: &str) -> Option<Self> {
                let t = text.trim().trim_matches(|c: char| c == '"' || c == '\'' || c == '.' || c == '`');
                Self::ALL.into_iter().find(|l| l.as_str().eq_ignore_ascii_case(t))
            }

            /// Nearest label for a scalar in [0,1].
            pub fn from_unit(x: f64) -> Self {
                let i = (4.0 * x.clamp(0.0, 1.0)).round() as usize;
                Self::ALL[i.min(4)]
            }
        }
    };
}

five_class!(SentimentLabel, [
    VeryNegative => "Very Negative",
    Negative => "Negative",
    Neutral => "Neutral",
    Positive => "Positive",
    VeryPositive => "Very Positive",
]);

five_class!(ExtremityLabel, [
    VeryModerate => "Very Moderate",
    Moderate => "Moderate",
    Neutral => "Neutral",
    Extreme => "Extreme",
    VeryExtreme => "Very Extreme",
]);

/// Score for a sentiment label given as text; `None` marks a missing grade.
pub fn sentiment_score(label: &str) -> Option<f64> {
    SentimentLabel::parse(label).map(SentimentLabel::score)
}

pub fn extremity_score(label: &str) -> Option<f64> {
    ExtremityLabel::parse(label).map(ExtremityLabel::score)
}

/// Label distribution over the five extremity classes.
pub fn extremity_distribution(labels: &[ExtremityLabel]) -> [f64; 5] {
    let mut counts = [0usize; 5];
    for l in labels {
        counts[l.index()] += 1;
    }
    let n = labels.len().max(1) as f64;
    counts.map(|c| c as f64 / n)
}

/// Shannon entropy in nats.
pub fn entropy(dist: &[f64]) -> f64 {
    -dist.iter().filter(|&&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>()
}

/// The thirteen fallacy types a grader may return.
pub const FALLACY_TYPES: [&str; 13] = [
    "Ad Hominem",
    "Ad Populum",
    "False Dilemma / Black-and-White Fallacy",
    "False Cause",
    "Circular Reasoning",
    "Deductive Fallacy / Fallacy of Logic",
    "Appeal to Emotion / Emotional Language",
    "Equivocation",
    "Fallacy of Extension / Extension Fallacy",
    "Faulty Generalization / Hasty Generalization",
    "Intentional Fallacy",
    "Fallacy of Credibility / Irrelevant Authority",
    "Fallacy of Relevance / Red Herring",
];

pub fn is_fallacy_type(s: &str) -> bool {
    FALLACY_TYPES.iter().any(|t| t.eq_ignore_ascii_case(s.trim()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sentiment_map() {
        assert_eq!(sentiment_score("Very Negative"), Some(0.0));
        assert_eq!(sentiment_score("Neutral"), Some(0.5));
        assert_eq!(sentiment_score("Very Positive"), Some(1.0));
        assert_eq!(sentiment_score("\"positive\""), Some(0.75));
        assert_eq!(sentiment_score("Somewhat happy"), None);
    }

    #[test]
    fn extremity_map() {
        assert_eq!(extremity_score("Very Moderate"), Some(0.0));
        assert_eq!(extremity_score("Extreme"), Some(0.75));
        assert_eq!(extremity_score("radical"), None);
    }

    #[test]
    fn maps_are_ordered_quarters() {
        let s: Vec<f64> = SentimentLabel::ALL.iter().map(|l| l.score()).collect();
        let e: Vec<f64> = ExtremityLabel::ALL.iter().map(|l| l.score()).collect();
        assert_eq!(s, FIVE_CLASS_SCORES.to_vec());
        assert_eq!(e, FIVE_CLASS_SCORES.to_vec());
    }

    #[test]
    fn uniform_entropy_is_log5() {
        let d = extremity_distribution(&ExtremityLabel::ALL);
        assert!((entropy(&d) - 5f64.ln()).abs() < 1e-12);
        assert_eq!(entropy(&extremity_distribution(&[ExtremityLabel::Extreme; 4])), 0.0);
    }

    #[test]
    fn quantization() {
        assert_eq!(ExtremityLabel::from_unit(0.9), ExtremityLabel::VeryExtreme);
        assert_eq!(ExtremityLabel::from_unit(0.1), ExtremityLabel::VeryModerate);
        assert_eq!(SentimentLabel::from_unit(0.5), SentimentLabel::Neutral);
    }

    #[test]
    fn fallacy_list() {
        assert_eq!(FALLACY_TYPES.len(), 13);
        assert!(is_fallacy_type("ad hominem"));
        assert!(!is_fallacy_type("Strawman"));
    }
}
