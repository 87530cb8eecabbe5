//! Persona records and the validated pools built from them.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PersonaType {
    Neutral,
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demographics {
    pub age: String,
    pub region: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profession: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommunicationStyle {
    pub tone: String,
    pub engagement_level: String,
    #[serde(flatten)]
    pub extra: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonaRecord {
    pub id: String,
    #[serde(rename = "type")]
    pub kind: PersonaType,
    pub name: String,
    /// Neutral records carry profession at top level, the others inside
    /// demographics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profession: Option<String>,
    pub demographics: Demographics,
    pub background: String,
    pub personality_traits: Vec<String>,
    pub communication_style: CommunicationStyle,
}

impl PersonaRecord {
    pub fn profession(&self) -> &str {
        self.profession
            .as_deref()
            .or(self.demographics.profession.as_deref())
            .unwrap_or("")
    }

    /// Compact one-paragraph description used in prompts.
    pub fn describe(&self) -> String {
        format!(
            "{} ({}, {}, {}). {} Traits: {}. Tone: {}.",
            self.name,
            self.demographics.age,
            self.profession(),
            self.demographics.region,
            self.background,
            self.personality_traits.join("; "),
            self.communication_style.tone
        )
    }
}

fn field_error(id: &str, field: &str) -> SimError {
    SimError::Persona {
        id: id.to_string(),
        reason: format!("missing or invalid field `{field}`"),
    }
}

fn require_str(obj: &serde_json::Map<String, Value>, id: &str, field: &str) -> Result<()> {
    match obj.get(field) {
        Some(Value::String(s)) if !s.trim().is_empty() => Ok(()),
        _ => Err(field_error(id, field)),
    }
}

fn validate_record(v: &Value, index: usize) -> Result<PersonaRecord> {
    let obj = v.as_object().ok_or_else(|| SimError::Persona {
        id: format!("#{index}"),
        reason: "record is not an object".into(),
    })?;
    let id = match obj.get("id") {
        Some(Value::String(s)) if !s.is_empty() => s.clone(),
        _ => return Err(field_error(&format!("#{index}"), "id")),
    };
    for f in ["type", "name", "background"] {
        require_str(obj, &id, f)?;
    }
    let demo = obj
        .get("demographics")
        .and_then(Value::as_object)
        .ok_or_else(|| field_error(&id, "demographics"))?;
    for f in ["age", "region"] {
        require_str(demo, &id, f).map_err(|_| field_error(&id, &format!("demographics.{f}")))?;
    }
    let traits_ok = matches!(obj.get("personality_traits"), Some(Value::Array(a)) if !a.is_empty() && a.iter().all(Value::is_string));
    if !traits_ok {
        return Err(field_error(&id, "personality_traits"));
    }
    let style = obj
        .get("communication_style")
        .and_then(Value::as_object)
        .ok_or_else(|| field_error(&id, "communication_style"))?;
    for f in ["tone", "engagement_level"] {
        require_str(style, &id, f).map_err(|_| field_error(&id, &format!("communication_style.{f}")))?;
    }
    let has_profession = obj.get("profession").is_some_and(Value::is_string)
        || demo.get("profession").is_some_and(Value::is_string);
    if !has_profession {
        return Err(field_error(&id, "profession"));
    }
    serde_json::from_value(v.clone()).map_err(|e| SimError::Persona {
        id,
        reason: e.to_string(),
    })
}

/// Persona records partitioned by type, each list in file order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PersonaPool {
    pub neutral: Vec<PersonaRecord>,
    pub positive: Vec<PersonaRecord>,
    pub negative: Vec<PersonaRecord>,
}

impl PersonaPool {
    pub fn parse(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)?;
        let arr = value.as_array().ok_or_else(|| SimError::Persona {
            id: "<file>".into(),
            reason: "expected a JSON array".into(),
        })?;
        let mut pool = PersonaPool::default();
        for (i, v) in arr.iter().enumerate() {
            pool.insert(validate_record(v, i)?)?;
        }
        Ok(pool)
    }

    /// The sample pools shipped with the crate.
    pub fn bundled() -> Result<Self> {
        let mut pool = Self::parse(BUNDLED_NEUTRAL)?;
        pool.merge(Self::parse(BUNDLED_POSITIVE)?)?;
        pool.merge(Self::parse(BUNDLED_NEGATIVE)?)?;
        Ok(pool)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    fn insert(&mut self, rec: PersonaRecord) -> Result<()> {
        let dup = self.neutral.iter().chain(&self.positive).chain(&self.negative).any(|r| r.id == rec.id);
        if dup {
            return Err(SimError::Persona {
                id: rec.id,
                reason: "duplicate id".into(),
            });
        }
        match rec.kind {
            PersonaType::Neutral => self.neutral.push(rec),
            PersonaType::Positive => self.positive.push(rec),
            PersonaType::Negative => self.negative.push(rec),
        }
        Ok(())
    }

    pub fn merge(&mut self, other: PersonaPool) -> Result<()> {
        for rec in other.neutral.into_iter().chain(other.positive).chain(other.negative) {
            self.insert(rec)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.neutral.len() + self.positive.len() + self.negative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn find(&self, id: &str) -> Option<&PersonaRecord> {
        self.neutral.iter().chain(&self.positive).chain(&self.negative).find(|r| r.id == id)
    }
}

pub const BUNDLED_NEUTRAL: &str = include_str!("../../data/neutral_personas.json");
pub const BUNDLED_POSITIVE: &str = include_str!("../../data/positive_personas.json");
pub const BUNDLED_NEGATIVE: &str = include_str!("../../data/negative_personas.json");
