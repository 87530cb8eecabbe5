use serde::{Deserialize, Serialize};

use crate::engine::MeanFieldState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            lambda1: 1.0,
            lambda2: 1.0,
        }
    }
}

/// `−λ₁·Δv + λ₂·Δe` between consecutive states.
pub fn reward(prev: &MeanFieldState, next: &MeanFieldState, cfg: &RewardConfig) -> f64 {
    -cfg.lambda1 * (next.v - prev.v) + cfg.lambda2 * (next.e - prev.e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: f64, e: f64) -> MeanFieldState {
        MeanFieldState { v, e, step: 0 }
    }

    #[test]
    fn reward_examples() {
        let unit = RewardConfig::default();
        assert!((reward(&s(0.30, 0.40), &s(0.20, 0.45), &unit) - 0.15).abs() < 1e-12);
        assert_eq!(reward(&s(0.3, 0.4), &s(0.3, 0.4), &unit), 0.0);
        let skew = RewardConfig { lambda1: 2.0, lambda2: 1.0 };
        assert!((reward(&s(0.3, 0.4), &s(0.4, 0.5), &skew) + 0.1).abs() < 1e-12);
    }
}
