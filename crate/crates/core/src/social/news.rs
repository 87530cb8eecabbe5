//! News stream with adversarial variants and delayed clarifications.

use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NewsPolarity {
    Benign,
    Adversarial,
    Clarification,
}

/// One line of the news source file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewsRecord {
    pub id: String,
    pub source_label: String,
    pub text: String,
    pub step: u32,
    /// Topic tag; folded into the item's topic tokens.
    #[serde(default)]
    pub tag: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewsItem {
    pub id: String,
    pub source_label: String,
    pub text: String,
    pub polarity: NewsPolarity,
    pub publish_step: u32,
    pub origin_id: Option<String>,
    pub tag: String,
}

pub fn parse_news(reader: impl BufRead) -> Result<Vec<NewsRecord>> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: NewsRecord = serde_json::from_str(&line)
            .map_err(|e| SimError::News(format!("line {}: {e}", n + 1)))?;
        if rec.step == 0 {
            return Err(SimError::News(format!("line {}: step must be >= 1", n + 1)));
        }
        out.push(rec);
    }
    Ok(out)
}

/// Whether the i-th record (in step order) is turned adversarial. Spreads
/// `ceil(n·fraction)` selections evenly, starting with the first record.
fn selected(i: usize, fraction: f64) -> bool {
    let before = (i as f64 * fraction - 1e-9).ceil();
    let after = ((i + 1) as f64 * fraction - 1e-9).ceil();
    after > before
}

pub fn extremize(text: &str) -> String {
    format!("OUTRAGE: {text} They lied to all of us and nobody is being held accountable!")
}

pub fn clarify(text: &str) -> String {
    format!("Fact check and context: claims circulating about this story were exaggerated. Verified account: {text}")
}

/// Builds the publication schedule. Selected records become adversarial
/// variants at their step and spawn a clarification `delay` steps later;
/// the rest stay benign. Output is sorted by `(publish_step, id)`.
pub fn build_stream(records: &[NewsRecord], adversarial_fraction: f64, delay: u32) -> Result<Vec<NewsItem>> {
    if records.is_empty() {
        return Err(SimError::News("no news records".into()));
    }
    if !(0.0..=1.0).contains(&adversarial_fraction) {
        return Err(SimError::News("adversarial fraction outside [0,1]".into()));
    }
    if delay < 1 {
        return Err(SimError::News("clarification delay must be >= 1".into()));
    }
    let mut sorted: Vec<&NewsRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.step.cmp(&b.step).then(a.id.cmp(&b.id)));

    let mut out = Vec::with_capacity(records.len());
    for (i, rec) in sorted.into_iter().enumerate() {
        if selected(i, adversarial_fraction) {
            out.push(NewsItem {
                id: rec.id.clone(),
                source_label: rec.source_label.clone(),
                text: extremize(&rec.text),
                polarity: NewsPolarity::Adversarial,
                publish_step: rec.step,
                origin_id: None,
                tag: rec.tag.clone(),
            });
            out.push(NewsItem {
                id: format!("{}-clar", rec.id),
                source_label: rec.source_label.clone(),
                text: clarify(&rec.text),
                polarity: NewsPolarity::Clarification,
                publish_step: rec.step + delay,
                origin_id: Some(rec.id.clone()),
                tag: rec.tag.clone(),
            });
        } else {
            out.push(NewsItem {
                id: rec.id.clone(),
                source_label: rec.source_label.clone(),
                text: rec.text.clone(),
                polarity: NewsPolarity::Benign,
                publish_step: rec.step,
                origin_id: None,
                tag: rec.tag.clone(),
            });
        }
    }
    out.sort_by(|a, b| a.publish_step.cmp(&b.publish_step).then(a.id.cmp(&b.id)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn records(steps: &[u32]) -> Vec<NewsRecord> {
        steps
            .iter()
            .enumerate()
            .map(|(i, &s)| NewsRecord {
                id: format!("n{:03}", i + 1),
                source_label: "wire".into(),
                text: format!("story {i}"),
                step: s,
                tag: "health".into(),
            })
            .collect()
    }

    #[test]
    fn first_item_adversarial_with_clarification_after_delay() {
        let s = build_stream(&records(&[1, 2, 3, 4]), 0.3, 4).unwrap();
        let adv = s.iter().find(|n| n.polarity == NewsPolarity::Adversarial).unwrap();
        assert_eq!(adv.publish_step, 1);
        let clar = s
            .iter()
            .find(|n| n.origin_id.as_deref() == Some(adv.id.as_str()))
            .unwrap();
        assert_eq!(clar.polarity, NewsPolarity::Clarification);
        assert_eq!(clar.publish_step, 5);
    }

    #[test]
    fn zero_fraction_all_benign() {
        let s = build_stream(&records(&[1, 2, 3]), 0.0, 4).unwrap();
        assert!(s.iter().all(|n| n.polarity == NewsPolarity::Benign));
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn late_adversarial_clarification_beyond_horizon() {
        let s = build_stream(&records(&[28]), 1.0, 4).unwrap();
        let clar = s.iter().find(|n| n.polarity == NewsPolarity::Clarification).unwrap();
        assert_eq!(clar.publish_step, 32);
        assert!(clar.publish_step > 30);
    }

    #[test]
    fn selection_count_is_ceil_of_fraction() {
        let recs = records(&(1..=30).collect::<Vec<_>>());
        for (f, expect) in [(0.3, 9), (0.5, 15), (1.0, 30), (0.1, 3)] {
            let s = build_stream(&recs, f, 4).unwrap();
            let n = s.iter().filter(|n| n.polarity == NewsPolarity::Adversarial).count();
            assert_eq!(n, expect, "fraction {f}");
        }
    }

    #[test]
    fn empty_records_error() {
        assert!(build_stream(&[], 0.3, 4).is_err());
    }
}
