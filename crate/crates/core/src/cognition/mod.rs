//! Evidence knowledge base and action–outcome memory.

pub mod kb;
pub mod memory;
pub mod text;

pub use kb::{EvidenceItem, KnowledgeBase, ScoredEvidence};
pub use memory::{ActionDescriptor, ActionMemory, MemoryTuple, ObservationRef};
pub use text::{jaccard, tokenize, TokenSet};
