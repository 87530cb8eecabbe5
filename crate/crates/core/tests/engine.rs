//! End-to-end behavior of the round driver, replay and on-disk output.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use discourse_core::engine::{read_memory, replay, replay_digest, run_with, EventKind, Inputs, Prober, RunOutcome};
use discourse_core::gateway::ScriptedBackend;
use discourse_core::metrics::{ExtremityLabel, SentimentLabel};
use discourse_core::output::{write_memory, write_run};
use discourse_core::social::{AgentType, Comment};
use discourse_core::{CaseId, RunLog, ScenarioConfig, SimError};

fn small(case: CaseId, seed: u64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::new(case, seed);
    cfg.horizon = 8;
    cfg.snapshots = vec![1, 4, 8];
    cfg
}

fn run(cfg: &ScenarioConfig) -> RunOutcome {
    run_with(cfg, &Inputs::bundled().unwrap(), &ScriptedBackend::new()).unwrap()
}

fn case4() -> &'static RunOutcome {
    static OUT: OnceLock<RunOutcome> = OnceLock::new();
    OUT.get_or_init(|| run(&small(CaseId::Case4, 5)))
}

fn count(log: &RunLog, name: &str) -> usize {
    log.of_kind(name).count()
}

#[test]
fn replay_reconstructs_the_final_world() {
    let out = case4();
    assert!(out.log.complete);
    let world = replay(&out.log).unwrap();
    assert_eq!(world, out.world);
    assert_eq!(world.digest(), out.world.digest());
}

#[test]
fn same_seed_same_stream() {
    let a = case4();
    let b = run(&small(CaseId::Case4, 5));
    assert_eq!(replay_digest(&a.log).unwrap(), replay_digest(&b.log).unwrap());
    let c = run(&small(CaseId::Case4, 6));
    assert_ne!(replay_digest(&a.log).unwrap(), replay_digest(&c.log).unwrap());
}

#[test]
fn tampered_digest_is_detected() {
    let mut log = case4().log.clone();
    let i = log.events.iter().position(|e| matches!(e.kind, EventKind::StepDigest { .. })).unwrap();
    log.events[i].kind = EventKind::StepDigest { digest: "0".repeat(64) };
    match replay(&log) {
        Err(SimError::Replay { seq, .. }) => assert_eq!(seq, log.events[i].seq),
        other => panic!("expected replay error, got {other:?}"),
    }
}

#[test]
fn tampered_state_change_is_detected() {
    let mut log = case4().log.clone();
    let i = log.events.iter().position(|e| matches!(e.kind, EventKind::UserUpdated { .. })).unwrap();
    if let EventKind::UserUpdated { opinion, .. } = &mut log.events[i].kind {
        *opinion = if *opinion > 0.0 { -0.99 } else { 0.99 };
    }
    assert!(matches!(replay(&log), Err(SimError::Replay { .. })));
}

#[test]
fn incomplete_logs_have_no_digest() {
    let mut log = case4().log.clone();
    log.events.pop();
    log.complete = false;
    assert!(matches!(replay_digest(&log), Err(SimError::IncompleteLog)));
}

#[test]
fn events_are_ordered_and_closed() {
    let log = &case4().log;
    assert!(log.events.windows(2).all(|w| w[0].order_key() < w[1].order_key()));
    assert!(log.events.iter().enumerate().all(|(i, e)| e.seq == i as u64));
    assert_eq!(log.events.first().unwrap().kind.name(), "run_started");
    assert_eq!(log.events.last().unwrap().kind.name(), "run_completed");
    // One digest per step, initialization and the terminal pass included.
    assert_eq!(count(log, "step_digest"), log.config.horizon as usize + 2);
    assert_eq!(count(log, "round_started"), log.config.horizon as usize);
}

#[test]
fn event_names_match_the_serialized_tag() {
    for e in &case4().log.events {
        let v = serde_json::to_value(e).unwrap();
        assert_eq!(v["action_kind"], e.kind.name());
        assert_eq!(serde_json::from_value::<discourse_core::engine::EventRecord>(v).unwrap(), *e);
    }
}

#[test]
fn one_reward_per_round_in_the_team_case() {
    let out = case4();
    assert_eq!(out.log.rewards.len(), out.log.config.horizon as usize);
    assert_eq!(out.world.rewards.len(), out.log.rewards.len());
    assert!(count(&out.log, "leader_comment") > 0);
}

#[test]
fn baseline_has_no_adversary_team_or_moderation() {
    let out = run(&small(CaseId::Case1, 5));
    for name in ["malicious_comment", "boost", "leader_comment", "amplifier_comment", "verdict", "reward"] {
        assert_eq!(count(&out.log, name), 0, "{name}");
    }
    assert!(out.world.comments.values().all(|c| c.agent_type == AgentType::Normal));
}

#[test]
fn moderation_only_in_the_fact_check_case() {
    let out = run(&small(CaseId::Case3, 5));
    assert!(count(&out.log, "malicious_comment") > 0);
    assert!(count(&out.log, "verdict") > 0);
    assert_eq!(count(&out.log, "leader_comment"), 0);
}

#[test]
fn probes_leave_the_world_untouched() {
    let out = case4();
    let inputs = Inputs::bundled().unwrap();
    let backend = ScriptedBackend::new();
    let prober = Prober {
        backend: &backend,
        prompts: &inputs.prompts,
        personas: &inputs.personas,
        max_tokens: 128,
    };
    let before = out.world.digest();
    let user = out.world.users.keys().next().unwrap();
    let stimulus = out.world.posts.keys().next().unwrap();
    let rec = prober.probe_user(&out.world, user, stimulus).unwrap();
    assert_eq!(rec.stance, out.world.users[user].opinion);
    assert_eq!(out.world.digest(), before);
    assert!(!out.log.probes().is_empty());
}

#[test]
fn memory_round_trips_and_seeds_a_new_run() {
    let out = case4();
    // Every recorded tuple, kept or not, so the export is never empty.
    let recorded: Vec<_> = out
        .log
        .events
        .iter()
        .filter_map(|e| match &e.kind {
            EventKind::MemoryRecorded { tuple, retained } => {
                assert_eq!(*retained, tuple.reward > out.log.config.epsilon_mem);
                Some(tuple.clone())
            }
            _ => None,
        })
        .collect();
    assert!(!recorded.is_empty());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("memory.jsonl");
    write_memory(&path, &recorded).unwrap();
    let tuples = read_memory(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(tuples, recorded);

    let mut inputs = Inputs::bundled().unwrap();
    inputs.memory = tuples.clone();
    let next = run_with(&small(CaseId::Case4, 9), &inputs, &ScriptedBackend::new()).unwrap();
    assert_eq!(count(&next.log, "memory_imported"), 1);
    assert_eq!(&next.world.memory.tuples()[..tuples.len()], &tuples[..]);
    assert_eq!(replay(&next.log).unwrap(), next.world);
}

fn read_comments(dir: &Path) -> Vec<Comment> {
    let mut out = Vec::new();
    for post in fs::read_dir(dir).unwrap() {
        let text = fs::read_to_string(post.unwrap().path().join("comments.jsonl")).unwrap();
        out.extend(text.lines().map(|l| serde_json::from_str::<Comment>(l).unwrap()));
    }
    out
}

fn close(a: Option<f64>, b: f64) -> bool {
    a.is_some_and(|a| (a - b).abs() < 1e-9)
}

#[test]
fn written_outputs_reproduce_the_metrics() {
    let out = case4();
    let dir = tempfile::tempdir().unwrap();
    write_run(dir.path(), &out.log, &out.world).unwrap();
    for f in ["run_log.jsonl", "metrics.csv", "reward.csv", "probes.jsonl", "memory.jsonl"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }

    let comments = read_comments(&dir.path().join("data").join("scenario_4"));
    assert_eq!(comments.len(), out.world.comments.len());
    let mut sizes: HashMap<&str, usize> = HashMap::new();
    for c in &comments {
        *sizes.entry(&c.post_id).or_default() += 1;
    }
    for m in &out.log.metrics {
        let eligible: Vec<&Comment> = comments
            .iter()
            .filter(|c| c.agent_type == AgentType::Normal && c.time_step <= m.t && sizes[c.post_id.as_str()] > 50)
            .collect();
        assert_eq!(m.n_comments, eligible.len(), "t={}", m.t);
        if eligible.is_empty() {
            assert!(m.sentiment.is_none());
            continue;
        }
        let n = eligible.len() as f64;
        let mean = |f: &dyn Fn(&Comment) -> f64| 100.0 * eligible.iter().map(|c| f(c)).sum::<f64>() / n;
        assert!(close(m.toxicity, mean(&|c| c.toxicity)));
        assert!(close(m.evidence, mean(&|c| f64::from(u8::from(c.evidence)))));
        assert!(close(m.sentiment, mean(&|c| SentimentLabel::from_unit(c.sentiment).score())));
        assert!(close(m.extremity, mean(&|c| ExtremityLabel::from_unit(c.stance.abs()).score())));
    }

    let mut rdr = csv::Reader::from_path(dir.path().join("metrics.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), out.log.metrics.len());
    for (row, m) in rows.iter().zip(&out.log.metrics) {
        assert_eq!(&row[0], "4");
        assert_eq!(row[1].parse::<u32>().unwrap(), m.t);
        assert_eq!(row[8].parse::<usize>().unwrap(), m.n_comments);
    }

    let text = fs::read_to_string(dir.path().join("run_log.jsonl")).unwrap();
    let events = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let rebuilt = RunLog::from_events(events).unwrap();
    assert!(rebuilt.complete);
    assert_eq!(rebuilt.config, out.log.config);
    assert_eq!(replay(&rebuilt).unwrap(), out.world);
    assert_eq!(replay_digest(&rebuilt).unwrap(), replay_digest(&out.log).unwrap());
}

#[test]
fn invalid_configs_are_rejected() {
    let mut cfg = small(CaseId::Case4, 1);
    cfg.population_size = 0;
    let inputs = Inputs::bundled().unwrap();
    assert!(run_with(&cfg, &inputs, &ScriptedBackend::new()).is_err());

    let mut inputs = Inputs::bundled().unwrap();
    inputs.personas.negative.clear();
    assert!(run_with(&small(CaseId::Case2, 1), &inputs, &ScriptedBackend::new()).is_err());
}
