//! Per-task performance variables from a session log.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::engine::Stage;
use crate::event::{Event, EventRecord, ShownTask};
use crate::time::{Millis, Pseudonym};
use crate::zvt::{ScorePolicy, ZvtKind, ZvtScore, ZvtState};

/// Mean gap between confirms below which a task counts as brute-forced.
pub const BRUTE_FORCE_GAP: Millis = Millis::from_secs(10);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskMetrics {
    pub task: String,
    /// Position in the participant's experiment order, from 0.
    pub position: usize,
    pub solved: bool,
    pub solved_first_attempt: bool,
    pub brute_forced: bool,
    pub skipped: bool,
    pub timed_out: bool,
    /// Seconds from first view to the correct confirm; only for solved tasks.
    pub time_in_task: Option<f64>,
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("log is empty")]
    Empty,
    #[error("log does not start with session creation")]
    MissingCreation,
    #[error("record {0}: sequence or time out of order")]
    OutOfOrder(u64),
    #[error("record {seq}: task {task} is not in the session queue")]
    UnknownTask { seq: u64, task: String },
    #[error("record {0}: confirm outside a shown task")]
    OrphanConfirm(u64),
}

/// `true` when at least two confirms were made at a mean gap under ten
/// seconds.
pub fn brute_force_flag(confirms: &[Millis]) -> bool {
    match (confirms.first(), confirms.last()) {
        (Some(&first), Some(&last)) if confirms.len() >= 2 => {
            let gaps = (confirms.len() - 1) as u64;
            (last - first).0 < BRUTE_FORCE_GAP.0 * gaps
        }
        _ => false,
    }
}

#[derive(Default)]
struct Track {
    shown: Option<Millis>,
    confirms: Vec<Millis>,
    solved_at: Option<Millis>,
    skipped: bool,
    timed_out: bool,
}

fn check_order(log: &[EventRecord]) -> Result<(), MetricsError> {
    let first = log.first().ok_or(MetricsError::Empty)?;
    if !matches!(first.event, Event::SessionCreated { .. }) {
        return Err(MetricsError::MissingCreation);
    }
    for w in log.windows(2) {
        if w[1].seq <= w[0].seq || w[1].server_time < w[0].server_time {
            return Err(MetricsError::OutOfOrder(w[1].seq));
        }
    }
    Ok(())
}

/// One row per experiment task in the participant's presentation order.
pub fn derive_metrics(log: &[EventRecord]) -> Result<Vec<TaskMetrics>, MetricsError> {
    check_order(log)?;
    let Event::SessionCreated { queue, .. } = &log[0].event else {
        unreachable!("checked above");
    };
    let mut tracks: Vec<Track> = queue.iter().map(|_| Track::default()).collect();
    let mut current: Option<usize> = None;
    let show =
        |tracks: &mut [Track], seq: u64, t: Millis, shown: Option<&ShownTask>| {
            let Some(s) = shown.filter(|s| s.stage == Stage::Experiment) else {
                return Ok(None);
            };
            let p = queue.iter().position(|id| *id == s.id).ok_or_else(|| {
                MetricsError::UnknownTask {
                    seq,
                    task: s.id.clone(),
                }
            })?;
            tracks[p].shown.get_or_insert(t);
            Ok(Some(p))
        };
    for rec in &log[1..] {
        let t = rec.server_time;
        match &rec.event {
            Event::PhaseChanged { task, .. } => {
                current = show(&mut tracks, rec.seq, t, task.as_ref())?
            }
            Event::TaskShown { task } => current = show(&mut tracks, rec.seq, t, Some(task))?,
            Event::TaskSkipped { next, .. } => {
                if let Some(p) = current {
                    tracks[p].skipped = true;
                }
                current = show(&mut tracks, rec.seq, t, next.as_ref())?;
            }
            Event::ConfirmSubmitted { task, correct, .. } => {
                let Some(p) = current else {
                    // qualification confirms are not experiment attempts
                    if queue.contains(task) {
                        return Err(MetricsError::OrphanConfirm(rec.seq));
                    }
                    continue;
                };
                if queue[p] != *task {
                    return Err(MetricsError::OrphanConfirm(rec.seq));
                }
                tracks[p].confirms.push(t);
                if *correct {
                    tracks[p].solved_at = Some(t);
                }
            }
            Event::Timeout => {
                if let Some(p) = current {
                    tracks[p].timed_out = true;
                }
                current = None;
            }
            Event::SessionEnded { .. } => current = None,
            _ => {}
        }
    }
    Ok(queue
        .iter()
        .zip(tracks)
        .enumerate()
        .map(|(position, (id, tr))| {
            let brute_forced = brute_force_flag(&tr.confirms);
            let solved = tr.solved_at.is_some() && !brute_forced;
            let attempts = tr.confirms.len() as u32;
            TaskMetrics {
                task: id.clone(),
                position,
                solved,
                solved_first_attempt: solved && attempts == 1,
                brute_forced,
                skipped: tr.skipped,
                timed_out: tr.timed_out,
                time_in_task: match (solved, tr.shown, tr.solved_at) {
                    (true, Some(v), Some(s)) => Some((s - v).as_secs_f64()),
                    _ => None,
                },
                attempts,
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticipantRecord {
    pub pseudonym: Pseudonym,
    pub tasks: Vec<TaskMetrics>,
    /// Absent when the test was disabled or not finished.
    pub zvt: Option<ZvtScore>,
    /// Supplied from the external questionnaire.
    pub prior_knowledge: Option<f64>,
    pub qualification_attempts: u32,
    pub timed_out: bool,
    pub completed: bool,
}

/// ZVT state rebuilt from the click events of a log.
pub fn zvt_from_log(log: &[EventRecord]) -> Option<ZvtState> {
    let mut kinds: Vec<ZvtKind> = Vec::new();
    for rec in log {
        if let Event::ZvtMatrixStarted {
            matrix,
            matrix_kind,
            ..
        } = rec.event
        {
            if matrix == kinds.len() {
                kinds.push(matrix_kind);
            }
        }
    }
    if kinds.is_empty() {
        return None;
    }
    let mut z = ZvtState::new(kinds);
    for rec in log {
        match rec.event {
            Event::ZvtMatrixStarted { .. } => {
                z.start_matrix(rec.server_time).ok()?;
            }
            Event::ZvtClick { number, .. } => {
                z.register_click(number, rec.server_time).ok()?;
            }
            _ => {}
        }
    }
    Some(z)
}

pub fn participant_record(
    log: &[EventRecord],
    policy: &ScorePolicy,
    prior_knowledge: Option<f64>,
) -> Result<ParticipantRecord, MetricsError> {
    let tasks = derive_metrics(log)?;
    let zvt = zvt_from_log(log).and_then(|z| z.score(policy).ok());
    let qualification_attempts = log
        .iter()
        .filter(|r| matches!(&r.event, Event::ConfirmSubmitted { task, .. } if !tasks.iter().any(|m| m.task == *task)))
        .count() as u32;
    Ok(ParticipantRecord {
        pseudonym: log[0].pseudonym,
        timed_out: log.iter().any(|r| r.event == Event::Timeout),
        completed: log
            .iter()
            .any(|r| matches!(r.event, Event::SessionEnded { .. })),
        tasks,
        zvt,
        prior_knowledge,
        qualification_attempts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn secs(v: &[u64]) -> Vec<Millis> {
        v.iter().map(|&s| Millis::from_secs(s)).collect()
    }

    #[test]
    fn brute_force_rule() {
        assert!(brute_force_flag(&secs(&[0, 5, 10, 15, 20, 25, 30])));
        assert!(!brute_force_flag(&secs(&[0, 30])));
        assert!(!brute_force_flag(&secs(&[0])));
        assert!(!brute_force_flag(&[]));
        // exactly ten seconds apart is not faster than one per ten seconds
        assert!(!brute_force_flag(&secs(&[0, 10, 20])));
        assert!(!brute_force_flag(&[Millis(0), Millis(19_999)]));
        assert!(brute_force_flag(&[Millis(0), Millis(9_999)]));
    }
}
