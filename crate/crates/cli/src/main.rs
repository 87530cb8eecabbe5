use std::collections::BTreeSet;
use std::fs;
use std::io::BufRead;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use discourse_core::engine::{replay, replay_digest, run_with, EventRecord, Inputs, RunLog};
use discourse_core::gateway::build_backend;
use discourse_core::{output, Ablation, BackendKind, CaseId, ScenarioConfig};

#[derive(Parser)]
#[command(name = "discourse", version, about = "Run seeded discussion-platform scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its artifacts to --out.
    Run(Box<RunArgs>),
    /// Replay a run_log.jsonl, verify its step digests and print the stream digest.
    Digest {
        /// Path to run_log.jsonl or to a run output directory.
        path: PathBuf,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML file with ScenarioConfig fields; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    case: Option<u8>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    steps: Option<u32>,
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    backend: Option<BackendKind>,
    /// analyst, strategist, leader or amplifiers; repeatable.
    #[arg(long)]
    ablation: Vec<Ablation>,
    #[arg(long, value_delimiter = ',')]
    snapshots: Option<Vec<u32>>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    news: Option<PathBuf>,
    #[arg(long)]
    knowledge_base: Option<PathBuf>,
    #[arg(long)]
    neutral_personas: Option<PathBuf>,
    #[arg(long)]
    positive_personas: Option<PathBuf>,
    #[arg(long)]
    negative_personas: Option<PathBuf>,
    #[arg(long)]
    prompts_dir: Option<PathBuf>,
    /// Team memory to start from (JSONL of memory tuples).
    #[arg(long)]
    memory_import: Option<PathBuf>,
    /// Where to write the team memory after the run.
    #[arg(long)]
    memory_export: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(p) => ScenarioConfig::from_file(p).with_context(|| format!("reading {}", p.display()))?,
            None => ScenarioConfig::default(),
        };
        if let Some(n) = self.case {
            cfg.case_id = CaseId::from_number(n).context("case must be 1-4")?;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(s) = self.steps {
            cfg.horizon = s;
        }
        if let Some(u) = self.users {
            cfg.population_size = u;
        }
        if let Some(b) = self.backend {
            cfg.backend.kind = b;
        }
        if !self.ablation.is_empty() {
            cfg.ablation = self.ablation.iter().copied().collect::<BTreeSet<_>>();
        }
        if let Some(s) = &self.snapshots {
            cfg.snapshots = s.clone();
        }
        let i = &mut cfg.inputs;
        for (slot, flag) in [
            (&mut i.news, &self.news),
            (&mut i.knowledge_base, &self.knowledge_base),
            (&mut i.neutral_personas, &self.neutral_personas),
            (&mut i.positive_personas, &self.positive_personas),
            (&mut i.negative_personas, &self.negative_personas),
            (&mut i.prompts_dir, &self.prompts_dir),
            (&mut i.memory_import, &self.memory_import),
        ] {
            if flag.is_some() {
                *slot = flag.clone();
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(args: RunArgs) -> Result<()> {
    let cfg = args.config()?;
    let inputs = Inputs::load(&cfg)?;
    let backend = build_backend(&cfg.backend)?;
    log::info!(
        "case {} seed {} for {} steps with {} users",
        cfg.case_id.number(),
        cfg.seed,
        cfg.horizon,
        cfg.population_size
    );
    let outcome = run_with(&cfg, &inputs, backend.as_ref())?;
    output::write_run(&args.out, &outcome.log, &outcome.world)?;
    if let Some(p) = &args.memory_export {
        output::write_memory(p, outcome.world.memory.tuples())?;
    }
    for m in &outcome.log.metrics {
        let f = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.2}"));
        println!(
            "t={:<3} sentiment={} toxicity={} extremity={} aqs={} fallacy={} evidence={} n={}",
            m.t,
            f(m.sentiment),
            f(m.toxicity),
            f(m.extremity),
            f(m.aqs),
            f(m.fallacy),
            f(m.evidence),
            m.n_comments
        );
    }
    if let Some(c) = outcome.log.rewards.cumulative.last() {
        println!("cumulative reward {c:.4} over {} rounds", outcome.log.rewards.len());
    }
    println!("wrote {}", args.out.display());
    if !outcome.log.complete {
        bail!("run aborted: {}", outcome.log.abort_reason.unwrap_or_default());
    }
    Ok(())
}

fn digest(path: PathBuf) -> Result<()> {
    let path = if path.is_dir() { path.join("run_log.jsonl") } else { path };
    let file = fs::File::open(&path).with_context(|| format!("opening {}", path.display()))?;
    let mut events = Vec::new();
    for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let e: EventRecord = serde_json::from_str(&line).with_context(|| format!("line {}", n + 1))?;
        events.push(e);
    }
    let log = RunLog::from_events(events).context("log has no run_started event")?;
    let world = replay(&log)?;
    println!("replayed {} events to step {}", log.events.len(), world.step);
    println!("world {}", world.digest());
    println!("stream {}", replay_digest(&log)?);
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run(args) => run(*args),
        Command::Digest { path } => digest(path),
    }
}
