use serde::{Deserialize, Serialize};

/// Per-round rewards with running sum and running mean.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardSeries {
    pub rewards: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub average: Vec<f64>,
}

impl RewardSeries {
    pub fn from_rewards(rewards: Vec<f64>) -> Self {
        let mut cumulative = Vec::with_capacity(rewards.len());
        let mut sum = 0.0;
        for r in &rewards {
            sum += r;
            cumulative.push(sum);
        }
        let average = cumulative.iter().enumerate().map(|(k, s)| s / (k + 1) as f64).collect();
        Self { rewards, cumulative, average }
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }
}
