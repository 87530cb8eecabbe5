//! Rebuilding a world from its event log.

use sha2::{Digest, Sha256};

use super::events::{EventKind, RunLog};
use super::world::World;
use crate::error::{Result, SimError};

/// Applies every event to a fresh world, checking each recorded step
/// digest along the way.
pub fn replay(log: &RunLog) -> Result<World> {
    let mut world = World::default();
    for e in &log.events {
        if let EventKind::StepDigest { digest } = &e.kind {
            let got = world.digest();
            if &got != digest {
                return Err(SimError::Replay {
                    seq: e.seq,
                    reason: format!("step {} digest {got} != recorded {digest}", e.step),
                });
            }
        }
        world.apply(e);
    }
    Ok(world)
}

/// Digest of the whole event stream, one JSON line per event.
pub fn replay_digest(log: &RunLog) -> Result<String> {
    if !log.complete {
        return Err(SimError::IncompleteLog);
    }
    let mut h = Sha256::new();
    for e in &log.events {
        h.update(serde_json::to_vec(e)?);
        h.update(b"\n");
    }
    Ok(hex::encode(h.finalize()))
}
