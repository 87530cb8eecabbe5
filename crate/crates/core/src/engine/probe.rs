//! Read-only check-ins on tracked users.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::world::World;
use crate::error::{GatewayError, Result, SimError};
use crate::gateway::{parse_json, Backend, GenerationRequest, PromptLibrary, RoleTag};
use crate::social::PersonaPool;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub step: u32,
    pub user_id: String,
    pub stimulus_id: String,
    pub stance: f64,
    pub sentiment: f64,
    pub rationale_text: String,
}

pub struct Prober<'a> {
    pub backend: &'a dyn Backend,
    pub prompts: &'a PromptLibrary,
    pub personas: &'a PersonaPool,
    pub max_tokens: u32,
}

impl Prober<'_> {
    /// The user's current reaction to `stimulus_id`. Stance and sentiment
    /// are the user's scalars; the rationale comes from the probe prompt.
    /// Nothing in `world` changes.
    pub fn probe_user(&self, world: &World, user_id: &str, stimulus_id: &str) -> Result<ProbeRecord> {
        let user = world
            .users
            .get(user_id)
            .ok_or_else(|| SimError::UnknownUser(user_id.to_string()))?;
        let stimulus = world
            .posts
            .get(stimulus_id)
            .map(|p| p.text.clone())
            .or_else(|| world.news.iter().find(|n| n.id == stimulus_id).map(|n| n.text.clone()))
            .unwrap_or_default();
        let persona = self.personas.find(&user.persona_ref).map(|p| p.describe()).unwrap_or_default();
        let mut vars = BTreeMap::new();
        vars.insert("persona", persona);
        vars.insert("stimulus", stimulus);
        let (system, text) = self.prompts.render(RoleTag::Probe, &vars)?;
        let mut req = GenerationRequest::new(RoleTag::Probe, user_id, system, text)
            .hint("stance", user.opinion)
            .hint("sentiment", user.mood);
        req.model_tag = user.model_tag.clone();
        req.max_tokens = self.max_tokens;
        let resp = self.backend.complete(&req)?;
        let rationale = match parse_json(RoleTag::Probe, &resp) {
            Ok(v) => v["rationale"].as_str().map(str::to_string).unwrap_or_else(|| resp.text.trim().to_string()),
            Err(GatewayError::Parse { .. }) => resp.text.trim().to_string(),
            Err(e) => return Err(e.into()),
        };
        Ok(ProbeRecord {
            step: world.step,
            user_id: user_id.to_string(),
            stimulus_id: stimulus_id.to_string(),
            stance: user.opinion,
            sentiment: user.mood,
            rationale_text: rationale,
        })
    }
}
