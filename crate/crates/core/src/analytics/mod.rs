//! Performance measures derived from session logs, and the statistics
//! applied to them.

pub mod metrics;
pub mod stats;

pub use metrics::{
    brute_force_flag, derive_metrics, participant_record, ParticipantRecord, TaskMetrics,
};
pub use stats::StatsError;
