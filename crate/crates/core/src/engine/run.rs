//! The round driver: builds the initial world, runs the phases of each
//! round in order and records every mutation as an event.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufReader;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use sha2::{Digest, Sha256};

use super::events::{EventKind, EventRecord, Phase, RunLog};
use super::probe::Prober;
use super::state::{estimate_state, observe, MeanFieldState};
use super::world::World;
use crate::cognition::{ActionDescriptor, EvidenceItem, KnowledgeBase, MemoryTuple, ObservationRef, TokenSet};
use crate::config::{Ablation, BackendKind, CaseId, ScenarioConfig};
use crate::error::{GatewayError, Result, SimError};
use crate::gateway::{build_backend, memory_reflection, parse_json, Backend, GenerationRequest, PromptLibrary, RoleTag};
use crate::metrics::{snapshot, Grader, Lexicon, MetricSnapshot, PerspectiveClient, RemoteGrader, RewardConfig, RewardSeries, ScriptedGrader};
use crate::moderation::{enforcement, schedule_checks, Enforcement, Moderator};
use crate::rng::{RngRoot, SimRng};
use crate::social::adversary::{attack, boost};
use crate::social::feed::{build_feed, window_posts, Feed};
use crate::social::news::parse_news;
use crate::social::user::{engaged, session, toxicity, update_user};
use crate::social::{
    build_stream, ActionKind, AgentType, Comment, CommentDraft, NewsPolarity, NewsRecord, OrdinaryUser, PersonaPool,
    Post, ProfileTag, UpdateParams, UserAction,
};
use crate::team::{
    amplify, analyze, feedback, fixed_plan, heuristic_report, lexicon_alert, plan, AnalysisReport, LeaderContext,
    LeaderInstruction, PendingFeedback,
};

pub const BUNDLED_NEWS: &str = include_str!("../../data/news.jsonl");
pub const BUNDLED_KB: &str = include_str!("../../data/knowledge_base.jsonl");

/// Leader comments are written to be calm and positive.
const LEADER_SENTIMENT: f64 = 0.8;
const LEADER_TOXICITY: f64 = 0.02;
/// Reflections run this often for remote ordinary users.
const REFLECTION_EVERY: u32 = 5;
const REFLECTION_MEMORIES: usize = 5;
/// How many moderate user comments amplifiers spread their likes over.
const MODERATE_VOICES: usize = 3;

/// Everything a run reads besides the config.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub news: Vec<NewsRecord>,
    pub kb: Vec<EvidenceItem>,
    pub personas: PersonaPool,
    pub prompts: PromptLibrary,
    pub memory: Vec<MemoryTuple>,
    pub lexicon: Lexicon,
}

impl Inputs {
    pub fn bundled() -> Result<Self> {
        Ok(Self {
            news: parse_news(BUNDLED_NEWS.as_bytes())?,
            kb: KnowledgeBase::parse_seed(BUNDLED_KB.as_bytes())?,
            personas: PersonaPool::bundled()?,
            prompts: PromptLibrary::bundled(),
            memory: Vec::new(),
            lexicon: Lexicon::bundled(),
        })
    }

    /// Bundled data with any configured file replacing its counterpart.
    pub fn load(cfg: &ScenarioConfig) -> Result<Self> {
        let mut inputs = Self::bundled()?;
        let paths = &cfg.inputs;
        let open = |p: &std::path::Path| std::fs::File::open(p).map(BufReader::new);
        if let Some(p) = &paths.news {
            inputs.news = parse_news(open(p)?)?;
        }
        if let Some(p) = &paths.knowledge_base {
            inputs.kb = KnowledgeBase::parse_seed(open(p)?)?;
        }
        if let Some(p) = &paths.neutral_personas {
            inputs.personas.neutral = PersonaPool::load(p)?.neutral;
        }
        if let Some(p) = &paths.positive_personas {
            inputs.personas.positive = PersonaPool::load(p)?.positive;
        }
        if let Some(p) = &paths.negative_personas {
            inputs.personas.negative = PersonaPool::load(p)?.negative;
        }
        if let Some(dir) = &paths.prompts_dir {
            inputs.prompts = PromptLibrary::with_overrides(dir)?;
        }
        if let Some(p) = &paths.memory_import {
            inputs.memory = read_memory(&std::fs::read_to_string(p)?)?;
        }
        Ok(inputs)
    }

    fn check(&self, cfg: &ScenarioConfig) -> Result<()> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if self.personas.neutral.is_empty() {
            return bad("neutral persona pool is empty".into());
        }
        let need = cfg.dynamics.malicious_per_item;
        if cfg.case_id.has_adversary() && self.personas.negative.len() < need {
            return bad(format!(
                "malicious pool has {} personas, {need} required",
                self.personas.negative.len()
            ));
        }
        if cfg.case_id.has_team() && !cfg.has(Ablation::NoAmplifiers) && self.personas.positive.is_empty() {
            return bad("positive persona pool is empty".into());
        }
        Ok(())
    }
}

/// Parses a memory export: one tuple per line.
pub fn read_memory(text: &str) -> Result<Vec<MemoryTuple>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(SimError::from))
        .collect()
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub log: RunLog,
    pub world: World,
}

/// Validates the config, loads inputs, builds the backend and runs.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunLog> {
    cfg.validate()?;
    let inputs = Inputs::load(cfg)?;
    let backend = build_backend(&cfg.backend)?;
    Ok(run_with(cfg, &inputs, backend.as_ref())?.log)
}

/// Runs with explicit inputs and backend. Backend failures end the run
/// early with a log flagged incomplete; other errors are returned.
pub fn run_with(cfg: &ScenarioConfig, inputs: &Inputs, backend: &dyn Backend) -> Result<RunOutcome> {
    cfg.validate()?;
    inputs.check(cfg)?;
    let grader: Box<dyn Grader + '_> = match backend.kind() {
        BackendKind::Scripted => Box::new(ScriptedGrader::default()),
        BackendKind::Remote => {
            let client = match &cfg.backend.toxicity_endpoint {
                Some(url) => Some(PerspectiveClient::new(url, &cfg.backend.toxicity_auth_env, cfg.backend.timeout_ms)?),
                None => None,
            };
            Box::new(RemoteGrader::new(
                backend,
                &inputs.prompts,
                &cfg.backend.service_model,
                cfg.backend.max_tokens,
                client,
            ))
        }
    };
    let mut sim = Sim {
        cfg,
        inputs,
        backend,
        grader: grader.as_ref(),
        root: RngRoot(cfg.seed),
        world: World::default(),
        events: Vec::new(),
        probe_users: Vec::new(),
        stimulus: None,
        team_action: None,
    };
    sim.init()?;
    let mut abort = None;
    for t in 1..=cfg.horizon {
        match sim.round(t) {
            Ok(()) => {}
            Err(SimError::Gateway(e)) => {
                abort = Some((t, e));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    if abort.is_none() {
        if let Err(e) = sim.terminal(cfg.horizon + 1) {
            match e {
                SimError::Gateway(g) => abort = Some((cfg.horizon + 1, g)),
                other => return Err(other),
            }
        }
    }
    let complete = abort.is_none();
    let abort_reason = abort.map(|(t, e)| {
        log::error!("run aborted at step {t}: {e}");
        let reason = e.to_string();
        sim.emit(t, Phase::Snapshot, "engine", EventKind::RunAborted { reason: reason.clone() });
        reason
    });
    let metrics = if complete { sim.final_metrics() } else { Vec::new() };
    let rewards = RewardSeries::from_rewards(sim.world.rewards.clone());
    Ok(RunOutcome {
        log: RunLog {
            config: cfg.clone(),
            events: sim.events,
            complete,
            abort_reason,
            metrics,
            rewards,
        },
        world: sim.world,
    })
}

/// What the team did this round, carried to the feedback phase.
struct TeamAction {
    selected_ids: BTreeSet<String>,
    action: ActionDescriptor,
    topic_tokens: TokenSet,
}

struct Sim<'a> {
    cfg: &'a ScenarioConfig,
    inputs: &'a Inputs,
    backend: &'a dyn Backend,
    grader: &'a dyn Grader,
    root: RngRoot,
    world: World,
    events: Vec<EventRecord>,
    probe_users: Vec<String>,
    stimulus: Option<String>,
    team_action: Option<TeamAction>,
}

fn activity_of(engagement_level: &str) -> f64 {
    match engagement_level.trim().to_ascii_lowercase().as_str() {
        "very high" | "high" | "comment-driven" => 0.85,
        "medium" | "moderate" | "intermittent" => 0.6,
        "occasional" => 0.5,
        "observant" => 0.4,
        "low" => 0.3,
        _ => 0.5,
    }
}

fn hex_digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

impl<'a> Sim<'a> {
    fn emit(&mut self, step: u32, phase: Phase, actor: &str, kind: EventKind) {
        let record = EventRecord {
            seq: self.events.len() as u64,
            step,
            phase,
            actor_id: actor.to_string(),
            kind,
        };
        self.world.apply(&record);
        self.events.push(record);
    }

    fn digest_step(&mut self, step: u32) {
        let digest = self.world.digest();
        self.emit(step, Phase::Snapshot, "engine", EventKind::StepDigest { digest });
    }

    fn case(&self) -> CaseId {
        self.cfg.case_id
    }

    fn params(&self, profile: ProfileTag) -> UpdateParams {
        let d = &self.cfg.dynamics;
        match profile {
            ProfileTag::A => UpdateParams {
                rate: d.influence_rate,
                noise: d.opinion_noise,
                activity_scale: 1.0,
            },
            ProfileTag::B => UpdateParams {
                rate: d.influence_rate_b,
                noise: d.opinion_noise_b,
                activity_scale: d.activity_scale_b,
            },
        }
    }

    fn request(&self, role: RoleTag, agent: &str, vars: &BTreeMap<&str, String>) -> Result<GenerationRequest, GatewayError> {
        let (system, user) = self.inputs.prompts.render(role, vars)?;
        let mut req = GenerationRequest::new(role, agent, system, user);
        req.temperature = if role.is_grader() { 0.0 } else { self.cfg.backend.generation_temperature };
        req.max_tokens = self.cfg.backend.max_tokens;
        req.model_tag = self.cfg.backend.service_model.clone();
        Ok(req)
    }

    fn persona_text(&self, id: &str) -> String {
        self.inputs.personas.find(id).map(|p| p.describe()).unwrap_or_default()
    }

    // ---- step 0 ----

    fn init(&mut self) -> Result<()> {
        let cfg = self.cfg;
        self.emit(0, Phase::Init, "engine", EventKind::RunStarted { config: Box::new(cfg.clone()) });

        let pool = &self.inputs.personas.neutral;
        let n = cfg.population_size;
        let mut rng = self.root.stream("engine", 0, "population");
        let picks: Vec<usize> = if n <= pool.len() {
            let mut v = sample(&mut rng, pool.len(), n).into_vec();
            v.sort_unstable();
            v
        } else {
            log::warn!("neutral pool has {} personas for {n} users; reusing personas", pool.len());
            (0..n).map(|i| i % pool.len()).collect()
        };
        let opinion = Normal::new(0.0, cfg.dynamics.initial_opinion_sd.max(0.0)).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        let mut users = Vec::with_capacity(n);
        for (i, idx) in picks.into_iter().enumerate() {
            let persona = &pool[idx];
            let profile = if rng.random_bool(0.5) { ProfileTag::A } else { ProfileTag::B };
            let base = activity_of(&persona.communication_style.engagement_level);
            users.push(OrdinaryUser {
                id: format!("u{:03}", i + 1),
                persona_ref: persona.id.clone(),
                opinion: opinion.sample(&mut rng).clamp(-1.0, 1.0),
                mood: rng.random_range(0.4..=0.7),
                susceptibility: rng.random_range(0.3..=0.9),
                activity: (base + rng.random_range(-0.1..=0.1)).clamp(0.05, 1.0),
                model_tag: cfg.backend.model_tags[profile as usize].clone(),
                profile,
                reflections: Vec::new(),
            });
        }
        let mut by_activity: Vec<&OrdinaryUser> = users.iter().collect();
        by_activity.sort_by(|a, b| b.activity.total_cmp(&a.activity).then(a.id.cmp(&b.id)));
        self.probe_users = by_activity.iter().take(cfg.probe_top).map(|u| u.id.clone()).collect();
        for user in users {
            self.emit(0, Phase::Init, "engine", EventKind::UserCreated { user });
        }

        self.emit(0, Phase::Init, "engine", EventKind::KbSeeded { items: self.inputs.kb.clone() });
        if !self.inputs.memory.is_empty() {
            self.emit(0, Phase::Init, "engine", EventKind::MemoryImported { tuples: self.inputs.memory.clone() });
        }
        let fraction = if cfg.case_id.has_adversary() { cfg.dynamics.adversarial_fraction } else { 0.0 };
        let items = build_stream(&self.inputs.news, fraction, cfg.clarification_delay)?;
        self.stimulus = items
            .iter()
            .find(|n| n.polarity == NewsPolarity::Adversarial)
            .or(items.first())
            .map(|n| n.id.clone());
        self.emit(0, Phase::Init, "engine", EventKind::NewsScheduled { items });
        self.digest_step(0);
        Ok(())
    }

    // ---- one round ----

    fn round(&mut self, t: u32) -> Result<()> {
        self.emit(t, Phase::Probe, "engine", EventKind::RoundStarted);
        self.team_action = None;
        self.probe_phase(t)?;
        self.news_phase(t);
        if self.case().has_adversary() {
            self.adversary_phase(t)?;
        }
        if self.case().has_team() {
            self.team_phase(t)?;
        }
        self.users_phase(t)?;
        if self.case().has_moderation() {
            self.moderation_phase(t);
        }
        self.feedback_phase(t, false)?;
        if self.cfg.snapshot_steps().contains(&t) {
            let snap = self.snapshot_now(t);
            self.emit(t, Phase::Snapshot, "metrics", EventKind::Snapshot { snapshot: snap });
        }
        self.digest_step(t);
        Ok(())
    }

    fn terminal(&mut self, t: u32) -> Result<()> {
        self.feedback_phase(t, true)?;
        self.digest_step(t);
        self.emit(t, Phase::Snapshot, "engine", EventKind::RunCompleted);
        Ok(())
    }

    fn probe_phase(&mut self, t: u32) -> Result<()> {
        let Some(stimulus) = self.stimulus.clone() else { return Ok(()) };
        let prober = Prober {
            backend: self.backend,
            prompts: &self.inputs.prompts,
            personas: &self.inputs.personas,
            max_tokens: self.cfg.backend.max_tokens,
        };
        let mut records = Vec::with_capacity(self.probe_users.len());
        for uid in &self.probe_users {
            records.push(prober.probe_user(&self.world, uid, &stimulus)?);
        }
        for record in records {
            let actor = record.user_id.clone();
            self.emit(t, Phase::Probe, &actor, EventKind::Probe { record });
        }
        Ok(())
    }

    fn news_phase(&mut self, t: u32) {
        let due: Vec<Post> = self.world.news.iter().filter(|n| n.publish_step == t).map(Post::from_news).collect();
        for post in due {
            let actor = post.source_label.clone();
            self.emit(t, Phase::News, &actor, EventKind::PostPublished { post });
        }
    }

    fn adversary_phase(&mut self, t: u32) -> Result<()> {
        let d = &self.cfg.dynamics;
        let mut rng = self.root.stream("adversary", t, "attack");
        let drafts = attack(&self.world, t, d.attack_window, d.malicious_per_item, &self.inputs.personas.negative, &mut rng)?;
        let mut requests = Vec::with_capacity(drafts.len());
        for draft in &drafts {
            let post = &self.world.posts[&draft.post_id];
            let mut vars = BTreeMap::new();
            vars.insert("persona", self.persona_text(&draft.author_id));
            vars.insert("post_id", post.id.clone());
            vars.insert("post_text", post.text.clone());
            let req = self
                .request(RoleTag::Malicious, &draft.author_id, &vars)?
                .hint("topic", &post.tag)
                .hint("stance", draft.stance);
            requests.push(req);
        }
        let texts = collect_texts(self.backend.complete_batch(&requests))?;
        for (draft, text) in drafts.into_iter().zip(texts) {
            let comment = Comment {
                id: self.world.comment_id(0),
                post_id: draft.post_id,
                author_id: draft.author_id.clone(),
                agent_type: AgentType::Malicious,
                time_step: t,
                text,
                stance: draft.stance,
                sentiment: draft.sentiment,
                toxicity: draft.toxicity,
                evidence: false,
                likes: 0,
            };
            self.emit(t, Phase::Adversary, &draft.author_id, EventKind::MaliciousComment { comment });
        }
        let boosts = boost(&self.world, t, d.attack_window, d.boosts_per_round, d.boost_likes);
        for b in boosts {
            self.emit(t, Phase::Adversary, "adversary", EventKind::Boost { comment_id: b.comment_id, likes: b.likes });
        }
        Ok(())
    }

    // ---- team ----

    fn thread<'w>(world: &'w World, post: &Post, t: u32) -> Vec<&'w Comment> {
        post.comment_ids
            .iter()
            .filter_map(|id| world.comments.get(id))
            .filter(|c| c.time_step <= t)
            .collect()
    }

    /// Picks at most one thread to act on this round.
    fn perceive(&mut self, t: u32) -> Result<Option<AnalysisReport>> {
        let window = self.cfg.dynamics.feed_window;
        let posts: Vec<Post> = window_posts(&self.world, t, window).into_iter().cloned().collect();
        if self.cfg.has(Ablation::NoAnalyst) {
            let mut best: Option<(f64, &Post)> = None;
            let mut alerts = Vec::new();
            for post in &posts {
                let thread = Self::thread(&self.world, post, t);
                if thread.is_empty() {
                    continue;
                }
                let (fraction, alert) = lexicon_alert(&self.inputs.lexicon, &thread, self.cfg.team.lexicon_threshold);
                alerts.push((post.id.clone(), fraction, alert));
                let better = best.is_none_or(|(f, p)| fraction > f || (fraction == f && post.publish_step > p.publish_step));
                if alert && better {
                    best = Some((fraction, post));
                }
            }
            let report = best.map(|(f, p)| heuristic_report(p, f, true));
            for (post_id, fraction, alert) in alerts {
                self.emit(t, Phase::Team, "monitor", EventKind::LexiconAlert { post_id, fraction, alert });
            }
            return Ok(report);
        }
        let mut best: Option<(AnalysisReport, u32)> = None;
        for post in &posts {
            let thread = Self::thread(&self.world, post, t);
            if thread.is_empty() {
                continue;
            }
            let report = analyze(post, &thread);
            if !report.requires_intervention {
                continue;
            }
            let better = match &best {
                None => true,
                Some((b, step)) => (report.urgency, report.weighted_score, post.publish_step)
                    .partial_cmp(&(b.urgency, b.weighted_score, *step))
                    .is_some_and(|o| o.is_gt()),
            };
            if better {
                best = Some((report, post.publish_step));
            }
        }
        let Some((mut report, _)) = best else { return Ok(None) };
        if self.backend.kind() == BackendKind::Remote {
            let post = &self.world.posts[&report.post_id];
            let top: Vec<String> = crate::social::rank_feed(Self::thread(&self.world, post, t), 10)
                .iter()
                .map(|c| format!("[{} likes] {}", c.likes, c.text))
                .collect();
            let mut vars = BTreeMap::new();
            vars.insert("post_text", post.text.clone());
            vars.insert("comments", top.join("\n"));
            let req = self.request(RoleTag::Analyst, "analyst", &vars)?;
            let resp = self.backend.complete(&req)?;
            match parse_json(RoleTag::Analyst, &resp) {
                Ok(v) => {
                    if let Some(view) = v["core_viewpoint"].as_str().filter(|s| !s.trim().is_empty()) {
                        report.core_viewpoint = view.to_string();
                    }
                }
                Err(e) => log::warn!("analyst reply unusable, keeping scripted viewpoint: {e}"),
            }
        }
        self.emit(t, Phase::Team, "analyst", EventKind::Analysis { report: report.clone() });
        Ok(Some(report))
    }

    fn remote_instruction(&self, report: &AnalysisReport, p: &crate::team::StrategyPlan, args: &str) -> Result<Option<LeaderInstruction>> {
        let recalled: Vec<String> = p.recalled_steps.iter().map(|s| format!("round {s}")).collect();
        let mut vars = BTreeMap::new();
        vars.insert("core_viewpoint", report.core_viewpoint.clone());
        vars.insert("extremism_level", report.extremism_level.to_string());
        vars.insert("engagement_intensity", format!("{:?}", report.engagement_intensity).to_uppercase());
        vars.insert("urgency", report.urgency.to_string());
        vars.insert("total_agents", p.total_agents.to_string());
        vars.insert("timing", format!("{:?}", p.timing).to_lowercase());
        vars.insert("memories", if recalled.is_empty() { "(none)".into() } else { recalled.join(", ") });
        vars.insert("arguments", args.to_string());
        let req = self.request(RoleTag::Strategist, "strategist", &vars)?.hint("claim", &p.core_counter_argument);
        let resp = self.backend.complete(&req)?;
        Ok(parse_json(RoleTag::Strategist, &resp)
            .ok()
            .and_then(|v| serde_json::from_value(v["leader_instruction"].clone()).ok()))
    }

    fn team_phase(&mut self, t: u32) -> Result<()> {
        let due: Vec<(String, String)> = self
            .world
            .scheduled
            .values()
            .filter(|c| c.time_step <= t)
            .map(|c| (c.id.clone(), c.author_id.clone()))
            .collect();
        for (comment_id, author) in due {
            self.emit(t, Phase::Team, &author, EventKind::AmplifierReleased { comment_id });
        }

        let Some(report) = self.perceive(t)? else { return Ok(()) };
        let cfg = self.cfg;
        let topic = report.topic_tokens.clone();
        let args: Vec<_> = self
            .world
            .kb
            .select_arguments(&topic, cfg.team.kb_top_m)
            .into_iter()
            .filter(|a| a.relevance > 0.0)
            .collect();
        let mut the_plan = if cfg.has(Ablation::NoStrategist) {
            fixed_plan(&report, cfg.team.fixed_plan_agents, &args, t)
        } else {
            let recalled = self.world.memory.recall(&topic, cfg.team.recall_top_k);
            plan(&report, &recalled, &args, t)
        };
        if self.backend.kind() == BackendKind::Remote && !cfg.has(Ablation::NoStrategist) {
            let listing: Vec<String> = args.iter().map(|a| format!("- {}", a.item.claim_text)).collect();
            if let Some(instr) = self.remote_instruction(&report, &the_plan, &listing.join("\n"))? {
                the_plan.leader_instruction = instr;
            }
        }
        self.emit(t, Phase::Team, "strategist", EventKind::Plan { plan: the_plan.clone() });

        let post = self.world.posts[&report.post_id].clone();
        let mut selected: BTreeSet<String> = BTreeSet::new();
        let mut leader: Option<Comment> = None;
        if !cfg.has(Ablation::NoLeader) {
            let ctx = LeaderContext {
                backend: self.backend,
                prompts: &self.inputs.prompts,
                model_tag: cfg.backend.service_model.clone(),
                temperature: cfg.backend.generation_temperature,
                max_tokens: cfg.backend.max_tokens,
            };
            let output = ctx.generate_and_select(&the_plan, &report.core_viewpoint, &post.tag, &args, cfg.team.leader_candidates)?;
            let chosen = output.chosen().clone();
            selected.extend(chosen.argument_ids.iter().cloned());
            self.emit(t, Phase::Team, "leader", EventKind::LeaderSelected { output });
            let comment = Comment {
                id: self.world.comment_id(0),
                post_id: post.id.clone(),
                author_id: "leader".into(),
                agent_type: AgentType::Leader,
                time_step: t,
                text: chosen.text,
                stance: chosen.stance,
                sentiment: LEADER_SENTIMENT,
                toxicity: LEADER_TOXICITY,
                evidence: !chosen.argument_ids.is_empty(),
                likes: 0,
            };
            leader = Some(comment.clone());
            self.emit(t, Phase::Team, "leader", EventKind::LeaderComment { comment });
        }

        let mut n_amplifiers = 0;
        if !cfg.has(Ablation::NoAmplifiers) {
            let mut rng = self.root.stream("team", t, "amplify");
            let batch = amplify(&the_plan, the_plan.counter_stance, !args.is_empty(), &self.inputs.personas.positive, &mut rng);
            let anchor = leader.as_ref().map(|c| c.text.clone()).unwrap_or_else(|| report.core_viewpoint.clone());
            let mut requests = Vec::with_capacity(batch.drafts.len());
            for d in &batch.drafts {
                let mut vars = BTreeMap::new();
                vars.insert("role_identity", d.role_identity.replace('_', " "));
                vars.insert("persona", self.persona_text(&d.author_id));
                vars.insert("post_text", post.text.clone());
                vars.insert("leader_content", anchor.clone());
                let mut req = self
                    .request(RoleTag::Amplifier, &d.author_id, &vars)?
                    .hint("role_identity", &d.role_identity)
                    .hint("topic", &post.tag)
                    .hint("stance", d.stance)
                    .hint("evidence", d.evidence);
                if let Some(id) = &the_plan.core_argument_id {
                    req = req.hint("evidence_id", id);
                }
                requests.push(req);
            }
            let texts = collect_texts(self.backend.complete_batch(&requests))?;
            let moderate = moderate_voices(&self.world, &post, t);
            let mut immediate = 0;
            for (d, text) in batch.drafts.into_iter().zip(texts) {
                if d.evidence {
                    selected.extend(the_plan.core_argument_id.iter().cloned());
                }
                let comment = Comment {
                    id: self.world.comment_id(0),
                    post_id: post.id.clone(),
                    author_id: d.author_id.clone(),
                    agent_type: AgentType::Amplifier,
                    time_step: t + d.offset,
                    text,
                    stance: d.stance,
                    sentiment: d.sentiment,
                    toxicity: d.toxicity,
                    evidence: d.evidence,
                    likes: 0,
                };
                n_amplifiers += 1;
                if d.offset == 0 {
                    self.emit(t, Phase::Team, &d.author_id, EventKind::AmplifierComment { comment });
                    if let Some(l) = &leader {
                        self.emit(t, Phase::Team, &d.author_id, EventKind::CommentLiked { comment_id: l.id.clone() });
                    }
                    if !moderate.is_empty() {
                        let comment_id = moderate[immediate % moderate.len()].clone();
                        self.emit(t, Phase::Team, &d.author_id, EventKind::CommentLiked { comment_id });
                    }
                    immediate += 1;
                } else {
                    self.emit(t, Phase::Team, &d.author_id, EventKind::AmplifierScheduled { comment });
                }
            }
        }

        self.team_action = Some(TeamAction {
            selected_ids: selected,
            action: ActionDescriptor {
                plan_digest: the_plan.digest(),
                leader_digest: leader.as_ref().map(|c| hex_digest(&c.text)),
                amplifier_summary: format!("{n_amplifiers} amplifiers, {:?} timing on {}", the_plan.timing, post.id),
                timing: the_plan.timing,
                total_agents: the_plan.total_agents,
            },
            topic_tokens: topic,
        });
        Ok(())
    }

    // ---- ordinary users ----

    fn users_phase(&mut self, t: u32) -> Result<()> {
        let d = &self.cfg.dynamics;
        let feed = build_feed(&self.world, t, d.feed_window, d.feed_posts, d.feed_comments);
        if feed.is_empty() {
            return Ok(());
        }
        let visible = feed.visible_comments();
        let mut sessions: Vec<(OrdinaryUser, Vec<UserAction>)> = Vec::new();
        for user in self.world.users.values() {
            let params = self.params(user.profile);
            let mut rng = self.root.stream("users", t, &user.id);
            if !engaged(user, params, &mut rng) {
                continue;
            }
            let updated = update_user(user, &visible, params, &mut rng);
            let actions = session(&updated, &feed, d.comment_stance_sd, &mut rng);
            sessions.push((updated, actions));
        }
        if self.backend.kind() == BackendKind::Remote {
            self.remote_sessions(t, &feed, &mut sessions)?;
        } else {
            self.scripted_texts(t, &feed, &mut sessions)?;
        }
        let feed_ids = FeedIds::of(&feed);
        drop(feed);

        let mut graded = self.grade_remote_comments(t, &sessions);
        for (user, actions) in sessions {
            let uid = user.id.clone();
            self.emit(t, Phase::Users, &uid, EventKind::UserUpdated { user_id: uid.clone(), opinion: user.opinion, mood: user.mood });
            for action in actions {
                let kind = self.user_event(t, &user, action, &feed_ids, &mut graded);
                self.emit(t, Phase::Users, &uid, kind);
            }
        }
        if self.backend.kind() == BackendKind::Remote && t.is_multiple_of(REFLECTION_EVERY) {
            self.reflections(t);
        }
        Ok(())
    }

    /// Comment text from the backend for every scripted comment action.
    fn scripted_texts(&self, t: u32, feed: &Feed<'_>, sessions: &mut [(OrdinaryUser, Vec<UserAction>)]) -> Result<()> {
        let mut requests = Vec::new();
        let mut slots = Vec::new();
        for (si, (user, actions)) in sessions.iter().enumerate() {
            for (ai, a) in actions.iter().enumerate() {
                let (Some(draft), Some(target)) = (&a.draft, &a.target) else { continue };
                let Some(fp) = feed.posts.iter().find(|p| &p.post.id == target) else { continue };
                let mut vars = BTreeMap::new();
                vars.insert("persona", user.persona_ref.clone());
                vars.insert("reflections", String::new());
                vars.insert("step", t.to_string());
                vars.insert("feed", fp.post.text.clone());
                let mut req = self
                    .request(RoleTag::OrdinaryUser, &user.id, &vars)?
                    .hint("stance", draft.stance)
                    .hint("sentiment", draft.sentiment)
                    .hint("topic", &fp.post.tag)
                    .hint("post", target);
                req.model_tag = user.model_tag.clone();
                requests.push(req);
                slots.push((si, ai));
            }
        }
        let texts = collect_texts(self.backend.complete_batch(&requests))?;
        for ((si, ai), text) in slots.into_iter().zip(texts) {
            sessions[si].1[ai].content = Some(text);
        }
        Ok(())
    }

    /// Replaces each scripted session with the actions the remote model
    /// chose. Unusable replies leave the user idle for the round.
    fn remote_sessions(&self, t: u32, feed: &Feed<'_>, sessions: &mut [(OrdinaryUser, Vec<UserAction>)]) -> Result<()> {
        let listing = feed_listing(feed);
        let mut requests = Vec::with_capacity(sessions.len());
        for (user, _) in sessions.iter() {
            let reflections = if user.reflections.is_empty() {
                "(none yet)".to_string()
            } else {
                user.reflections.iter().rev().take(3).cloned().collect::<Vec<_>>().join("\n")
            };
            let mut vars = BTreeMap::new();
            vars.insert("persona", self.persona_text(&user.persona_ref));
            vars.insert("reflections", reflections);
            vars.insert("step", t.to_string());
            vars.insert("feed", listing.clone());
            let mut req = self
                .request(RoleTag::OrdinaryUser, &user.id, &vars)?
                .hint("stance", user.opinion)
                .hint("sentiment", user.mood);
            req.model_tag = user.model_tag.clone();
            requests.push(req);
        }
        let responses = self.backend.complete_batch(&requests);
        let stance_sd = self.cfg.dynamics.comment_stance_sd;
        for ((user, actions), resp) in sessions.iter_mut().zip(responses) {
            let resp = resp?;
            let mut rng = self.root.stream("users-remote", t, &user.id);
            *actions = match parse_json(RoleTag::OrdinaryUser, &resp) {
                Ok(v) => remote_actions(&v, user, stance_sd, &mut rng),
                Err(e) => {
                    log::warn!("{}: {e}", user.id);
                    Vec::new()
                }
            };
        }
        Ok(())
    }

    /// Remote comment attributes come from the graders: stance is the
    /// author's opinion sign times graded extremity.
    fn grade_remote_comments(&self, t: u32, sessions: &[(OrdinaryUser, Vec<UserAction>)]) -> BTreeMap<(String, String), CommentDraft> {
        let mut out = BTreeMap::new();
        if self.backend.kind() != BackendKind::Remote {
            return out;
        }
        let mut provisional = Vec::new();
        for (user, actions) in sessions {
            for a in actions {
                let (Some(draft), Some(target), Some(text)) = (&a.draft, &a.target, &a.content) else { continue };
                provisional.push(Comment {
                    id: format!("{}-{}", user.id, target),
                    post_id: target.clone(),
                    author_id: user.id.clone(),
                    agent_type: AgentType::Normal,
                    time_step: t,
                    text: text.clone(),
                    stance: draft.stance,
                    sentiment: draft.sentiment,
                    toxicity: draft.toxicity,
                    evidence: false,
                    likes: 0,
                });
            }
        }
        let refs: Vec<&Comment> = provisional.iter().collect();
        let grades = self.grader.grade_batch(&refs);
        for (c, g) in provisional.iter().zip(grades) {
            let sign = if c.stance < 0.0 { -1.0 } else { 1.0 };
            out.insert(
                (c.author_id.clone(), c.post_id.clone()),
                CommentDraft {
                    stance: g.extremity.map_or(c.stance, |x| sign * x),
                    sentiment: g.sentiment.unwrap_or(c.sentiment),
                    toxicity: g.toxicity.unwrap_or(c.toxicity),
                },
            );
        }
        out
    }

    fn user_event(
        &self,
        t: u32,
        user: &OrdinaryUser,
        action: UserAction,
        ids: &FeedIds,
        graded: &mut BTreeMap<(String, String), CommentDraft>,
    ) -> EventKind {
        let target = action.target.clone().unwrap_or_default();
        let known = match action.kind {
            ActionKind::LikePost | ActionKind::SharePost | ActionKind::CommentPost => ids.posts.contains(&target),
            ActionKind::LikeComment => ids.comments.contains(&target),
            ActionKind::FollowUser => ids.authors.contains(&target),
            ActionKind::Ignore => true,
        };
        if !known {
            return EventKind::ActionDropped { action, reason: format!("unknown target `{target}`") };
        }
        match action.kind {
            ActionKind::LikePost => EventKind::PostLiked { post_id: target },
            ActionKind::SharePost => EventKind::PostShared { post_id: target },
            ActionKind::LikeComment => EventKind::CommentLiked { comment_id: target },
            ActionKind::FollowUser => EventKind::Followed { target },
            ActionKind::Ignore => EventKind::Ignored,
            ActionKind::CommentPost => {
                let Some(draft) = action.draft else {
                    return EventKind::ActionDropped { action, reason: "comment without attributes".into() };
                };
                let draft = graded.remove(&(user.id.clone(), target.clone())).unwrap_or(draft);
                EventKind::UserComment {
                    comment: Comment {
                        id: self.world.comment_id(0),
                        post_id: target,
                        author_id: user.id.clone(),
                        agent_type: AgentType::Normal,
                        time_step: t,
                        text: action.content.unwrap_or_default(),
                        stance: draft.stance.clamp(-1.0, 1.0),
                        sentiment: draft.sentiment.clamp(0.0, 1.0),
                        toxicity: draft.toxicity.clamp(0.0, 1.0),
                        evidence: false,
                        likes: 0,
                    },
                }
            }
        }
    }

    fn reflections(&mut self, t: u32) {
        let mut out = Vec::new();
        for user in self.world.users.values() {
            let memories: Vec<String> = self
                .world
                .comments
                .values()
                .rev()
                .filter(|c| c.author_id == user.id)
                .take(REFLECTION_MEMORIES)
                .map(|c| format!("At round {} I wrote: {}", c.time_step, c.text))
                .collect();
            match memory_reflection(
                self.backend,
                &self.inputs.prompts,
                &user.id,
                &self.persona_text(&user.persona_ref),
                &memories,
                self.cfg.backend.generation_temperature,
                &user.model_tag,
            ) {
                Ok(text) => out.push((user.id.clone(), text)),
                Err(e) => log::warn!("reflection skipped for {}: {e}", user.id),
            }
        }
        for (user_id, text) in out {
            self.emit(t, Phase::Users, &user_id.clone(), EventKind::Reflection { user_id, text });
        }
    }

    // ---- moderation ----

    fn moderation_phase(&mut self, t: u32) {
        let due = schedule_checks(&self.world, t, self.cfg.factcheck_delay);
        let moderator = Moderator {
            backend: self.backend,
            prompts: &self.inputs.prompts,
            root: self.root,
            model_tag: self.cfg.backend.service_model.clone(),
            max_tokens: self.cfg.backend.max_tokens,
        };
        let mut verdicts = Vec::new();
        for id in due {
            match moderator.adjudicate(&self.world.posts[&id], t) {
                Ok(v) => verdicts.push(v),
                Err(e) => log::warn!("fact-check of {id} failed, retrying next step: {e}"),
            }
        }
        for verdict in verdicts {
            let action = enforcement(&verdict);
            self.emit(t, Phase::Moderation, "moderator", EventKind::Verdict { verdict });
            let kind = match action {
                Enforcement::Takedown { post_id, from_step } => EventKind::Takedown { post_id, from_step },
                Enforcement::Label { post_id, label } => EventKind::LabelAttached { post_id, label },
            };
            self.emit(t, Phase::Moderation, "moderator", kind);
        }
    }

    // ---- feedback ----

    fn feedback_phase(&mut self, t: u32, terminal: bool) -> Result<()> {
        let cfg = self.cfg;
        let obs = observe(&self.world, t, cfg.dynamics.feed_window);
        let comments = obs.resolve(&self.world);
        let state = estimate_state(&comments, t, self.world.last_state());
        let comment_count = comments.len();
        let estimator = if cfg.has(Ablation::NoAnalyst) { "engine" } else { "analyst" };
        let prev = self.world.last_state().copied();
        self.emit(t, Phase::Feedback, estimator, EventKind::StateEstimated { state });
        if !cfg.case_id.has_team() {
            return Ok(());
        }
        if let Some(prev) = prev {
            self.close_round(t, prev, state)?;
        }
        if terminal {
            if self.world.pending_feedback.is_some() {
                self.emit(t, Phase::Feedback, "analyst", EventKind::FeedbackPending { pending: None });
            }
            return Ok(());
        }
        self.admit_clarifications(t)?;
        let pending = self.team_action.take().map(|a| PendingFeedback {
            step: t,
            state,
            selected_ids: a.selected_ids,
            action: a.action,
            observation: ObservationRef {
                step: t,
                post_ids: obs.posts.clone(),
                comment_count,
                topic_tokens: a.topic_tokens,
            },
        });
        if pending.is_some() || self.world.pending_feedback.is_some() {
            self.emit(t, Phase::Feedback, "analyst", EventKind::FeedbackPending { pending });
        }
        Ok(())
    }

    /// Scores round `t − 1` and runs the team's update for it.
    fn close_round(&mut self, t: u32, prev: MeanFieldState, next: MeanFieldState) -> Result<()> {
        let rc = RewardConfig { lambda1: self.cfg.lambda1, lambda2: self.cfg.lambda2 };
        let r = crate::metrics::reward(&prev, &next, &rc);
        self.emit(t, Phase::Feedback, "analyst", EventKind::Reward { round: t - 1, reward: r, prev, next });
        let Some(pending) = self.world.pending_feedback.clone() else { return Ok(()) };
        let mut kb = self.world.kb.clone();
        let mut memory = self.world.memory.clone();
        let out = feedback(&pending, &next, &mut kb, &mut memory, &rc, self.cfg.epsilon_mem)?;
        self.emit(
            t,
            Phase::Feedback,
            "analyst",
            EventKind::KbReinforced { updates: out.kb_updates, selected: pending.selected_ids.clone() },
        );
        self.emit(t, Phase::Feedback, "analyst", EventKind::MemoryRecorded { tuple: out.tuple, retained: out.retained });
        Ok(())
    }

    /// Clarifications released this round are offered to the knowledge base.
    fn admit_clarifications(&mut self, t: u32) -> Result<()> {
        let fresh: Vec<Post> = self
            .world
            .posts
            .values()
            .filter(|p| p.polarity == NewsPolarity::Clarification && p.publish_step == t)
            .cloned()
            .collect();
        for post in fresh {
            let item = EvidenceItem {
                id: format!("kb-{}", post.id),
                claim_text: post.text.clone(),
                persuasiveness: 0.5,
                topic_tags: vec![post.tag.clone()],
                source_label: post.source_label.clone(),
            };
            if self.world.kb.get(&item.id).is_some() {
                continue;
            }
            let topic = post
                .origin_id
                .as_ref()
                .and_then(|o| self.world.posts.get(o))
                .map(|o| o.topic_tokens.clone())
                .unwrap_or_default();
            let admitted = self.world.kb.clone().admit(item.clone(), &topic)?;
            self.emit(t, Phase::Feedback, "analyst", EventKind::KbAdmission { item, admitted });
        }
        Ok(())
    }

    // ---- metrics ----

    fn all_comments(&self) -> Vec<Comment> {
        self.world.comments.values().cloned().collect()
    }

    fn snapshot_now(&self, t: u32) -> MetricSnapshot {
        snapshot(&self.all_comments(), t, self.grader)
    }

    /// Snapshots over the finished comment log.
    fn final_metrics(&self) -> Vec<MetricSnapshot> {
        let comments = self.all_comments();
        self.cfg.snapshot_steps().into_iter().map(|t| snapshot(&comments, t, self.grader)).collect()
    }
}

/// Ordinary-user comments on `post` closest to neutral, which immediate
/// amplifiers like to lift them in the thread ranking.
fn moderate_voices(world: &World, post: &Post, t: u32) -> Vec<String> {
    let mut normal: Vec<&Comment> = post
        .comment_ids
        .iter()
        .filter_map(|id| world.comments.get(id))
        .filter(|c| c.agent_type == AgentType::Normal && c.time_step <= t)
        .collect();
    normal.sort_by(|a, b| {
        a.stance
            .abs()
            .total_cmp(&b.stance.abs())
            .then(b.likes.cmp(&a.likes))
            .then(a.id.cmp(&b.id))
    });
    normal.into_iter().take(MODERATE_VOICES).map(|c| c.id.clone()).collect()
}

fn collect_texts(responses: Vec<crate::gateway::Completion>) -> Result<Vec<String>> {
    responses
        .into_iter()
        .map(|r| r.map(|r| r.text.trim().to_string()).map_err(SimError::from))
        .collect()
}

/// Ids a remote user may legally target this round.
struct FeedIds {
    posts: BTreeSet<String>,
    comments: BTreeSet<String>,
    authors: BTreeSet<String>,
}

impl FeedIds {
    fn of(feed: &Feed<'_>) -> Self {
        let comments = feed.visible_comments();
        Self {
            posts: feed.posts.iter().map(|p| p.post.id.clone()).collect(),
            comments: comments.iter().map(|c| c.id.clone()).collect(),
            authors: comments.iter().map(|c| c.author_id.clone()).collect(),
        }
    }
}

fn feed_listing(feed: &Feed<'_>) -> String {
    let mut out = String::new();
    for fp in &feed.posts {
        out.push_str(&format!(
            "[post {}] {} ({} likes, {} comments)\n",
            fp.post.id, fp.post.text, fp.post.likes, fp.comment_count
        ));
        if let Some(label) = fp.post.fact_label {
            out.push_str(&format!("  fact-check label: {label:?}\n"));
        }
        for c in &fp.top_comments {
            out.push_str(&format!("  [comment {} by {}, {} likes] {}\n", c.id, c.author_id, c.likes, c.text));
        }
    }
    out
}

/// Actions from a remote reply. Comment attributes start from the scalar
/// model and are refined by grading later.
fn remote_actions(v: &serde_json::Value, user: &OrdinaryUser, stance_sd: f64, rng: &mut SimRng) -> Vec<UserAction> {
    let jitter = Normal::new(0.0, stance_sd.max(0.0)).ok();
    let mut commented = BTreeSet::new();
    let mut out = Vec::new();
    for a in v["actions"].as_array().into_iter().flatten().take(8) {
        let Some(kind) = a["type"].as_str().and_then(ActionKind::parse) else { continue };
        let target = a["target"].as_str().filter(|s| !s.is_empty()).map(str::to_string);
        let mut action = UserAction { kind, target, draft: None, content: None };
        if kind == ActionKind::CommentPost {
            let text = a["content"].as_str().unwrap_or_default().trim().to_string();
            let fresh = action.target.as_ref().is_some_and(|t| commented.insert(t.clone()));
            if text.is_empty() || !fresh {
                continue;
            }
            let zeta = jitter.map_or(0.0, |d| d.sample(rng));
            action.draft = Some(CommentDraft {
                stance: (user.opinion + zeta).clamp(-1.0, 1.0),
                sentiment: user.mood,
                toxicity: toxicity(user.opinion, user.mood),
            });
            action.content = Some(text);
        }
        out.push(action);
    }
    out
}
