//! Token normalization and set similarity shared by retrieval and recall.

use std::collections::BTreeSet;

pub type TokenSet = BTreeSet<String>;

const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "but", "by", "for", "from", "has", "have", "in",
    "is", "it", "its", "of", "on", "or", "that", "the", "this", "to", "was", "were", "will",
    "with",
];

/// Lowercase, strip punctuation, split on whitespace, drop stopwords.
pub fn tokenize(text: &str) -> TokenSet {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .filter(|w| !STOPWORDS.contains(&w.as_str()))
        .collect()
}

/// Normalizes a list of tags through the same tokenizer.
pub fn tokenize_all<'a>(parts: impl IntoIterator<Item = &'a str>) -> TokenSet {
    parts.into_iter().flat_map(tokenize).collect()
}

/// `|a ∩ b| / |a ∪ b|`; zero when both are empty.
pub fn jaccard(a: &TokenSet, b: &TokenSet) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(xs: &[&str]) -> TokenSet {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn tokenize_normalizes() {
        let t = tokenize("Vaccines, SAFETY & the trial-data!");
        assert_eq!(t, set(&["vaccines", "safety", "trial", "data"]));
    }

    #[test]
    fn jaccard_hand_values() {
        assert_eq!(jaccard(&set(&["a", "b", "c"]), &set(&["a", "b", "d"])), 0.5);
        assert_eq!(jaccard(&set(&["x"]), &set(&["y"])), 0.0);
        assert_eq!(jaccard(&set(&["x", "y"]), &set(&["y", "x"])), 1.0);
        assert_eq!(jaccard(&set(&[]), &set(&[])), 0.0);
    }
}
