//! Scenario configuration.
//!
//! Every field has a default so a TOML file only needs to name what it
//! changes. `validate` runs before step 0 of any run.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Experimental condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CaseId {
    /// No adversary, no intervention.
    Case1,
    /// Coordinated adversary, no protection.
    Case2,
    /// Adversary plus delayed fact-check moderation.
    Case3,
    /// Adversary plus the proactive intervention team.
    Case4,
}

impl CaseId {
    pub fn number(self) -> u8 {
        match self {
            CaseId::Case1 => 1,
            CaseId::Case2 => 2,
            CaseId::Case3 => 3,
            CaseId::Case4 => 4,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(CaseId::Case1),
            2 => Some(CaseId::Case2),
            3 => Some(CaseId::Case3),
            4 => Some(CaseId::Case4),
            _ => None,
        }
    }

    pub fn has_adversary(self) -> bool {
        self != CaseId::Case1
    }

    pub fn has_moderation(self) -> bool {
        self == CaseId::Case3
    }

    pub fn has_team(self) -> bool {
        self == CaseId::Case4
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Ablation {
    NoAnalyst,
    NoStrategist,
    NoLeader,
    NoAmplifiers,
}

impl FromStr for Ablation {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "analyst" | "noanalyst" => Ok(Ablation::NoAnalyst),
            "strategist" | "nostrategist" => Ok(Ablation::NoStrategist),
            "leader" | "noleader" => Ok(Ablation::NoLeader),
            "amplifiers" | "amplifier" | "noamplifiers" => Ok(Ablation::NoAmplifiers),
            other => Err(SimError::InvalidConfig(format!("unknown ablation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum BackendKind {
    #[default]
    Scripted,
    Remote,
}

impl FromStr for BackendKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "scripted" => Ok(BackendKind::Scripted),
            "remote" => Ok(BackendKind::Remote),
            other => Err(SimError::InvalidConfig(format!("unknown backend `{other}`"))),
        }
    }
}

/// Network settings for the remote chat-completion backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub endpoint: Option<String>,
    /// Name of the environment variable holding the bearer token.
    pub auth_env: String,
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    /// Sampling temperature for non-grader prompts.
    pub generation_temperature: f64,
    pub max_tokens: u32,
    /// Two model tags; ordinary users pick one each with probability 0.5.
    pub model_tags: [String; 2],
    /// Model used for team roles, moderation and grading.
    pub service_model: String,
    /// Optional Perspective-compatible toxicity endpoint.
    pub toxicity_endpoint: Option<String>,
    pub toxicity_auth_env: String,
    /// Upper bound on concurrent requests inside one batch.
    pub batch_parallelism: usize,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Scripted,
            endpoint: None,
            auth_env: "OPENAI_API_KEY".into(),
            timeout_ms: 30_000,
            max_retries: 3,
            backoff_base_ms: 500,
            generation_temperature: 0.7,
            max_tokens: 512,
            model_tags: ["model-a".into(), "model-b".into()],
            service_model: "grader".into(),
            toxicity_endpoint: None,
            toxicity_auth_env: "PERSPECTIVE_API_KEY".into(),
            batch_parallelism: 8,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kind == BackendKind::Remote && self.endpoint.as_deref().unwrap_or("").is_empty() {
            return Err(SimError::InvalidConfig(
                "remote backend requires an endpoint".into(),
            ));
        }
        if self.batch_parallelism == 0 {
            return Err(SimError::InvalidConfig("batch_parallelism must be >= 1".into()));
        }
        Ok(())
    }
}

/// Parameters of the scripted population and adversary. Defaults are the
/// desk-scale calibration used by the acceptance suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DynamicsConfig {
    /// Global influence rate for profile A users.
    pub influence_rate: f64,
    /// Std-dev of the opinion noise term for profile A users.
    pub opinion_noise: f64,
    /// Profile B influence rate, noise and activity scaling.
    pub influence_rate_b: f64,
    pub opinion_noise_b: f64,
    pub activity_scale_b: f64,
    /// Std-dev of the initial opinion distribution.
    pub initial_opinion_sd: f64,
    /// Std-dev of the per-comment stance jitter.
    pub comment_stance_sd: f64,
    /// Posts stay in feeds for this many steps after publication.
    pub feed_window: u32,
    /// Number of posts a user browses per step.
    pub feed_posts: usize,
    /// Number of top-ranked comments shown per post.
    pub feed_comments: usize,
    /// Comments per adversarial item per round.
    pub malicious_per_item: usize,
    /// Rolling attack window in steps.
    pub attack_window: u32,
    pub boosts_per_round: usize,
    pub boost_likes: u64,
    pub adversarial_fraction: f64,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            influence_rate: 0.5,
            opinion_noise: 0.02,
            influence_rate_b: 0.4,
            opinion_noise_b: 0.03,
            activity_scale_b: 0.9,
            initial_opinion_sd: 0.2,
            comment_stance_sd: 0.1,
            feed_window: 8,
            feed_posts: 6,
            feed_comments: 8,
            malicious_per_item: 15,
            attack_window: 3,
            boosts_per_round: 2,
            boost_likes: 5,
            adversarial_fraction: 0.3,
        }
    }
}

/// Knobs of the intervention team.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TeamConfig {
    pub leader_candidates: usize,
    pub kb_top_m: usize,
    pub recall_top_k: usize,
    /// Lexicon-hit fraction above which the analyst-free heuristic alerts.
    pub lexicon_threshold: f64,
    /// Fixed plan size used when the strategist is ablated.
    pub fixed_plan_agents: u32,
}

impl Default for TeamConfig {
    fn default() -> Self {
        Self {
            leader_candidates: 3,
            kb_top_m: 5,
            recall_top_k: 3,
            lexicon_threshold: 0.3,
            fixed_plan_agents: 8,
        }
    }
}

/// Optional external inputs. Bundled data is used for anything left unset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InputPaths {
    pub news: Option<PathBuf>,
    pub knowledge_base: Option<PathBuf>,
    pub neutral_personas: Option<PathBuf>,
    pub positive_personas: Option<PathBuf>,
    pub negative_personas: Option<PathBuf>,
    pub prompts_dir: Option<PathBuf>,
    pub memory_import: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub case_id: CaseId,
    pub horizon: u32,
    pub population_size: usize,
    pub seed: u64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub eta: f64,
    pub delta: f64,
    pub epsilon_mem: f64,
    pub clarification_delay: u32,
    pub factcheck_delay: u32,
    pub ablation: BTreeSet<Ablation>,
    pub backend: BackendConfig,
    pub snapshots: Vec<u32>,
    /// Number of ordinary users tracked by the longitudinal probe.
    pub probe_top: usize,
    pub dynamics: DynamicsConfig,
    pub team: TeamConfig,
    pub inputs: InputPaths,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            case_id: CaseId::Case4,
            horizon: 30,
            population_size: 50,
            seed: 0,
            lambda1: 1.0,
            lambda2: 1.0,
            eta: 0.01,
            delta: 0.2,
            epsilon_mem: 0.05,
            clarification_delay: 4,
            factcheck_delay: 3,
            ablation: BTreeSet::new(),
            backend: BackendConfig::default(),
            snapshots: vec![1, 5, 10, 20, 30],
            probe_top: 3,
            dynamics: DynamicsConfig::default(),
            team: TeamConfig::default(),
            inputs: InputPaths::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn new(case_id: CaseId, seed: u64) -> Self {
        Self {
            case_id,
            seed,
            ..Self::default()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn has(&self, ablation: Ablation) -> bool {
        self.ablation.contains(&ablation)
    }

    /// Snapshot steps that fall inside the horizon, sorted and deduplicated.
    pub fn snapshot_steps(&self) -> Vec<u32> {
        let mut steps: Vec<u32> = self
            .snapshots
            .iter()
            .copied()
            .filter(|&t| t >= 1 && t <= self.horizon)
            .collect();
        steps.sort_unstable();
        steps.dedup();
        steps
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(SimError::InvalidConfig(msg.to_string()));
        if self.horizon < 1 {
            return bad("horizon must be >= 1");
        }
        if self.population_size < 1 {
            return bad("population_size must be >= 1");
        }
        if !(self.lambda1 >= 0.0 && self.lambda2 >= 0.0) {
            return bad("lambda1 and lambda2 must be nonnegative");
        }
        if !(self.eta.is_finite()) {
            return bad("eta must be finite");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta must lie in (0,1)");
        }
        if !(self.epsilon_mem > 0.0 && self.epsilon_mem < 1.0) {
            return bad("epsilon_mem must lie in (0,1)");
        }
        if self.clarification_delay < 1 {
            return bad("clarification_delay must be >= 1");
        }
        if self.factcheck_delay < 1 {
            return bad("factcheck_delay must be >= 1");
        }
        if !self.ablation.is_empty() && self.case_id != CaseId::Case4 {
            return bad("ablations are only meaningful in Case 4");
        }
        let d = &self.dynamics;
        if !(0.0..=1.0).contains(&d.adversarial_fraction) {
            return bad("adversarial_fraction must lie in [0,1]");
        }
        if d.feed_posts == 0 || d.feed_comments == 0 || d.feed_window == 0 {
            return bad("feed sizes must be >= 1");
        }
        if d.attack_window == 0 {
            return bad("attack_window must be >= 1");
        }
        if self.team.leader_candidates == 0 || self.team.kb_top_m == 0 || self.team.recall_top_k == 0 {
            return bad("team sizes must be >= 1");
        }
        self.backend.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_protocol() {
        let c = ScenarioConfig::default();
        assert_eq!(c.horizon, 30);
        assert_eq!(c.population_size, 50);
        assert_eq!((c.lambda1, c.lambda2), (1.0, 1.0));
        assert_eq!(c.eta, 0.01);
        assert_eq!(c.clarification_delay, 4);
        assert_eq!(c.factcheck_delay, 3);
        assert_eq!(c.snapshots, vec![1, 5, 10, 20, 30]);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_out_of_range_thresholds() {
        let d = ScenarioConfig::default;
        for c in [
            ScenarioConfig { delta: 1.0, ..d() },
            ScenarioConfig { epsilon_mem: 0.0, ..d() },
            ScenarioConfig { horizon: 0, ..d() },
            ScenarioConfig { lambda1: -0.1, ..d() },
        ] {
            assert!(c.validate().is_err());
        }
    }

    #[test]
    fn ablation_requires_case4() {
        let mut c = ScenarioConfig::new(CaseId::Case2, 1);
        c.ablation.insert(Ablation::NoLeader);
        assert!(c.validate().is_err());
        c.case_id = CaseId::Case4;
        c.validate().unwrap();
    }

    #[test]
    fn remote_needs_endpoint() {
        let mut c = ScenarioConfig::default();
        c.backend.kind = BackendKind::Remote;
        assert!(c.validate().is_err());
        c.backend.endpoint = Some("http://localhost:1/v1/chat/completions".into());
        c.validate().unwrap();
    }

    #[test]
    fn toml_partial_file() {
        let c = ScenarioConfig::from_toml_str(
            r#"
            case_id = "Case3"
            seed = 9
            horizon = 12
            ablation = []
            [dynamics]
            boost_likes = 7
            "#,
        )
        .unwrap();
        assert_eq!(c.case_id, CaseId::Case3);
        assert_eq!(c.horizon, 12);
        assert_eq!(c.dynamics.boost_likes, 7);
        assert_eq!(c.dynamics.malicious_per_item, 15);
        assert_eq!(c.snapshot_steps(), vec![1, 5, 10]);
    }

    #[test]
    fn parse_ablation_names() {
        assert_eq!("analyst".parse::<Ablation>().unwrap(), Ablation::NoAnalyst);
        assert_eq!("Amplifiers".parse::<Ablation>().unwrap(), Ablation::NoAmplifiers);
        assert!("bogus".parse::<Ablation>().is_err());
    }
}
