//! Word-list toxicity proxy and negative-expression detector.

use std::collections::BTreeSet;

pub const BUNDLED_LEXICON: &str = include_str!("../../data/lexicon.txt");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    words: BTreeSet<String>,
}

fn words(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric() && c != '\'')
        .map(|w| w.trim_matches('\'').to_lowercase())
        .filter(|w| !w.is_empty())
}

impl Lexicon {
    /// One entry per line; blank lines and `#` comments skipped.
    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Self { words }
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_LEXICON)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Number of whole-word hits.
    pub fn hits(&self, text: &str) -> usize {
        words(text).filter(|w| self.words.contains(w)).count()
    }

    pub fn flags(&self, text: &str) -> bool {
        words(text).any(|w| self.words.contains(&w))
    }

    /// Hit fraction over all words; 0 for empty text.
    pub fn toxicity(&self, text: &str) -> f64 {
        let total = words(text).count();
        if total == 0 {
            return 0.0;
        }
        (self.hits(text) as f64 / total as f64).clamp(0.0, 1.0)
    }

    /// Fraction of texts with at least one hit; 0 for an empty set.
    pub fn flagged_fraction<'a>(&self, texts: impl IntoIterator<Item = &'a str>) -> f64 {
        let (mut n, mut hit) = (0usize, 0usize);
        for t in texts {
            n += 1;
            hit += self.flags(t) as usize;
        }
        if n == 0 {
            0.0
        } else {
            hit as f64 / n as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_list_loads() {
        let lex = Lexicon::bundled();
        assert!(lex.len() > 20);
        assert!(lex.flags("What a HOAX."));
    }

    #[test]
    fn zero_hits_is_zero() {
        let lex = Lexicon::bundled();
        assert_eq!(lex.toxicity("the clinic extended its hours"), 0.0);
        assert_eq!(lex.toxicity(""), 0.0);
    }

    #[test]
    fn hit_fraction() {
        let lex = Lexicon::parse("# c\nscam\nliars\n");
        assert_eq!(lex.toxicity("total scam by liars"), 0.5);
        assert!(!lex.flags("scammer"));
    }

    #[test]
    fn flagged_fraction_counts_texts() {
        let lex = Lexicon::parse("rage");
        let texts = ["rage", "calm", "pure rage rage", "fine"];
        assert_eq!(lex.flagged_fraction(texts), 0.5);
    }
}
