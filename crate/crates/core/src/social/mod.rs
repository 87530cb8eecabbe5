//! Environment actors: news, posts and comments, ordinary users, and the
//! coordinated adversary.

pub mod adversary;
pub mod content;
pub mod feed;
pub mod news;
pub mod persona;
pub mod user;

pub use adversary::{attack, boost, BoostEvent, MaliciousDraft};
pub use content::{AgentType, Comment, Post};
pub use feed::{build_feed, rank_feed, Feed, FeedPost};
pub use news::{build_stream, NewsItem, NewsPolarity, NewsRecord};
pub use persona::{PersonaPool, PersonaRecord, PersonaType};
pub use user::{act, engaged, session, update_user, ActionKind, CommentDraft, OrdinaryUser, ProfileTag, UpdateParams, UserAction};
