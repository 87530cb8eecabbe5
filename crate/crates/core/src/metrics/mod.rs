//! Comment grading, snapshot aggregation and the round reward.

pub mod graders;
pub mod labels;
pub mod lexicon;
pub mod perspective;
pub mod reward;
pub mod series;
pub mod snapshot;

pub use graders::{aqs_rubric, detect_evidence, fallacy_rule, CommentGrade, Grader, RemoteGrader, ScriptedGrader, ToxicitySource};
pub use labels::{extremity_score, sentiment_score, ExtremityLabel, SentimentLabel, FALLACY_TYPES};
pub use lexicon::Lexicon;
pub use perspective::PerspectiveClient;
pub use reward::{reward, RewardConfig};
pub use series::RewardSeries;
pub use snapshot::{eligible_comments, snapshot, MetricSnapshot};
