//! Writes a finished run to disk.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::cognition::MemoryTuple;
use crate::engine::{RunLog, World};
use crate::error::{Result, SimError};
use crate::social::Comment;

fn write_jsonl<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for row in rows {
        serde_json::to_writer(&mut w, &row)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> SimError {
    SimError::Io(std::io::Error::other(e))
}

fn fmt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// Comments grouped per post, as recorded at the end of the run.
pub fn write_comments(dir: &Path, case: u8, comments: &[&Comment]) -> Result<()> {
    let mut by_post: BTreeMap<&str, Vec<&Comment>> = BTreeMap::new();
    for c in comments {
        by_post.entry(c.post_id.as_str()).or_default().push(c);
    }
    for (post, rows) in by_post {
        let d = dir.join("data").join(format!("scenario_{case}")).join(format!("post-{post}"));
        fs::create_dir_all(&d)?;
        write_jsonl(&d.join("comments.jsonl"), rows)?;
    }
    Ok(())
}

pub fn write_metrics(path: &Path, log: &RunLog) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["case", "t", "sentiment", "toxicity", "extremity", "aqs", "fallacy", "evidence", "n_comments"])
        .map_err(csv_err)?;
    let case = log.config.case_id.number().to_string();
    for m in &log.metrics {
        w.write_record([
            case.clone(),
            m.t.to_string(),
            fmt(m.sentiment),
            fmt(m.toxicity),
            fmt(m.extremity),
            fmt(m.aqs),
            fmt(m.fallacy),
            fmt(m.evidence),
            m.n_comments.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rewards(path: &Path, log: &RunLog) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["round", "reward", "cumulative", "average"]).map_err(csv_err)?;
    let s = &log.rewards;
    for k in 0..s.len() {
        w.write_record([
            (k + 1).to_string(),
            format!("{:.9}", s.rewards[k]),
            format!("{:.9}", s.cumulative[k]),
            format!("{:.9}", s.average[k]),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_memory(path: &Path, tuples: &[MemoryTuple]) -> Result<()> {
    write_jsonl(path, tuples)
}

/// Every artifact of one run: event log, per-post comments, metric and
/// reward tables, probe records and the team's memory.
pub fn write_run(dir: &Path, log: &RunLog, world: &World) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_jsonl(&dir.join("run_log.jsonl"), &log.events)?;
    let comments: Vec<&Comment> = world.comments.values().collect();
    write_comments(dir, log.config.case_id.number(), &comments)?;
    write_metrics(&dir.join("metrics.csv"), log)?;
    write_rewards(&dir.join("reward.csv"), log)?;
    write_jsonl(&dir.join("probes.jsonl"), log.probes())?;
    if log.config.case_id.has_team() {
        write_memory(&dir.join("memory.jsonl"), world.memory.tuples())?;
    }
    Ok(())
}
