//! Prompt templates: `prompts/<role_tag>.txt` with `[system]` and `[user]`
//! sections and `{placeholder}` slots.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;

use super::RoleTag;
use crate::error::GatewayError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub system: String,
    pub user: String,
}

fn placeholder() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{([a-z_][a-z0-9_]*)\}").unwrap())
}

impl Template {
    pub fn parse(name: &str, text: &str) -> Result<Self, GatewayError> {
        let bad = || GatewayError::Template(format!("{name}: expected [system] and [user] sections"));
        let sys_at = text.find("[system]").ok_or_else(bad)?;
        let user_at = text.find("[user]").ok_or_else(bad)?;
        if user_at < sys_at {
            return Err(bad());
        }
        Ok(Self {
            system: text[sys_at + "[system]".len()..user_at].trim().to_string(),
            user: text[user_at + "[user]".len()..].trim().to_string(),
        })
    }

    pub fn placeholders(&self) -> Vec<String> {
        let mut names: Vec<String> = placeholder()
            .captures_iter(&self.system)
            .chain(placeholder().captures_iter(&self.user))
            .map(|c| c[1].to_string())
            .collect();
        names.sort();
        names.dedup();
        names
    }

    fn fill(&self, part: &str, vars: &BTreeMap<&str, String>) -> Result<String, GatewayError> {
        let mut missing = None;
        let out = placeholder().replace_all(part, |c: &regex::Captures<'_>| match vars.get(&c[1]) {
            Some(v) => v.clone(),
            None => {
                missing.get_or_insert_with(|| c[1].to_string());
                String::new()
            }
        });
        match missing {
            Some(name) => Err(GatewayError::Template(format!("no value for placeholder `{name}`"))),
            None => Ok(out.into_owned()),
        }
    }

    pub fn render(&self, vars: &BTreeMap<&str, String>) -> Result<(String, String), GatewayError> {
        Ok((self.fill(&self.system, vars)?, self.fill(&self.user, vars)?))
    }
}

fn bundled_text(role: RoleTag) -> &'static str {
    match role {
        RoleTag::OrdinaryUser => include_str!("../../prompts/ordinary_user.txt"),
        RoleTag::Malicious => include_str!("../../prompts/malicious.txt"),
        RoleTag::Analyst => include_str!("../../prompts/analyst.txt"),
        RoleTag::Strategist => include_str!("../../prompts/strategist.txt"),
        RoleTag::LeaderCreate => include_str!("../../prompts/leader_create.txt"),
        RoleTag::UscEvaluate => include_str!("../../prompts/usc_evaluate.txt"),
        RoleTag::Amplifier => include_str!("../../prompts/amplifier.txt"),
        RoleTag::Factcheck => include_str!("../../prompts/factcheck.txt"),
        RoleTag::GraderSentiment => include_str!("../../prompts/grader_sentiment.txt"),
        RoleTag::GraderExtremity => include_str!("../../prompts/grader_extremity.txt"),
        RoleTag::GraderAqs => include_str!("../../prompts/grader_aqs.txt"),
        RoleTag::GraderFallacy => include_str!("../../prompts/grader_fallacy.txt"),
        RoleTag::GraderEvidence => include_str!("../../prompts/grader_evidence.txt"),
        RoleTag::Probe => include_str!("../../prompts/probe.txt"),
        RoleTag::Reflection => include_str!("../../prompts/reflection.txt"),
    }
}

/// One template per role. Bundled copies are compiled in; a directory may
/// override any subset of them.
#[derive(Debug, Clone)]
pub struct PromptLibrary {
    templates: BTreeMap<RoleTag, Template>,
}

impl PromptLibrary {
    pub fn bundled() -> Self {
        let templates = RoleTag::ALL
            .into_iter()
            .map(|r| {
                let t = Template::parse(r.as_str(), bundled_text(r)).expect("bundled template is well formed");
                (r, t)
            })
            .collect();
        Self { templates }
    }

    /// Bundled templates overridden by any `<role_tag>.txt` found in `dir`.
    pub fn with_overrides(dir: &Path) -> Result<Self, GatewayError> {
        let mut lib = Self::bundled();
        for role in RoleTag::ALL {
            let path = dir.join(format!("{}.txt", role.as_str()));
            if path.is_file() {
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| GatewayError::Template(format!("{}: {e}", path.display())))?;
                lib.templates.insert(role, Template::parse(role.as_str(), &text)?);
            }
        }
        Ok(lib)
    }

    pub fn get(&self, role: RoleTag) -> &Template {
        &self.templates[&role]
    }

    pub fn render(&self, role: RoleTag, vars: &BTreeMap<&str, String>) -> Result<(String, String), GatewayError> {
        self.get(role).render(vars)
    }
}

impl Default for PromptLibrary {
    fn default() -> Self {
        Self::bundled()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_bundled_template_parses() {
        let lib = PromptLibrary::bundled();
        for r in RoleTag::ALL {
            let t = lib.get(r);
            assert!(!t.system.is_empty(), "{r}");
            assert!(!t.user.is_empty(), "{r}");
        }
    }

    #[test]
    fn render_substitutes_and_reports_missing() {
        let t = Template::parse("x", "[system]\nHi {name}.\n[user]\nJSON: {\"a\": 1} {topic}").unwrap();
        let mut vars = BTreeMap::new();
        vars.insert("name", "Ana".to_string());
        assert!(matches!(t.render(&vars), Err(GatewayError::Template(_))));
        vars.insert("topic", "grid".to_string());
        let (s, u) = t.render(&vars).unwrap();
        assert_eq!(s, "Hi Ana.");
        assert_eq!(u, "JSON: {\"a\": 1} grid");
    }

    #[test]
    fn directory_override() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("probe.txt"), "[system]\ncustom\n[user]\n{stimulus}").unwrap();
        let lib = PromptLibrary::with_overrides(dir.path()).unwrap();
        assert_eq!(lib.get(RoleTag::Probe).system, "custom");
        assert_eq!(lib.get(RoleTag::Analyst), PromptLibrary::bundled().get(RoleTag::Analyst));
    }
}
