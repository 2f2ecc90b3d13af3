//! Log directory to metrics CSV, and CSV inputs for the statistics.

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use circuitlab_core::analytics::metrics::{participant_record, MetricsError, ParticipantRecord};
use circuitlab_core::reference;
use circuitlab_core::task::{Group, Library};
use circuitlab_core::zvt::ScorePolicy;

use crate::store::{list_logs, read_log, StoreError};

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("{}: {source}", path.display())]
    Metrics { path: PathBuf, source: MetricsError },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Input(String),
}

/// One row of the metrics CSV: a participant and one experiment task.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub pseudonym: String,
    pub task: String,
    pub group: String,
    pub position: usize,
    pub solved: bool,
    pub solved_first_attempt: bool,
    pub brute_forced: bool,
    pub skipped: bool,
    pub timed_out: bool,
    pub time_in_task: Option<f64>,
    pub attempts: u32,
    pub qualification_attempts: u32,
    pub processing_speed: Option<f64>,
    pub zvt_excluded: Option<bool>,
}

/// Participant records for every log in `dir`.
pub fn load_records(
    dir: &Path,
    policy: &ScorePolicy,
) -> Result<Vec<ParticipantRecord>, AnalysisError> {
    list_logs(dir)?
        .into_iter()
        .map(|path| {
            let log = read_log(&path)?;
            participant_record(&log.records, policy, None)
                .map_err(|source| AnalysisError::Metrics { path, source })
        })
        .collect()
}

/// Flattens records into CSV rows. Task groups come from `library` when
/// given, otherwise from the reference table.
pub fn metrics_rows(records: &[ParticipantRecord], library: Option<&Library>) -> Vec<MetricsRow> {
    let group_of = |id: &str| -> String {
        library
            .and_then(|l| l.task(id).map(|t| t.group))
            .or_else(|| reference::lookup(id).map(|r| r.group))
            .map(|g: Group| g.to_string())
            .unwrap_or_default()
    };
    let mut rows = Vec::new();
    for r in records {
        for m in &r.tasks {
            rows.push(MetricsRow {
                pseudonym: r.pseudonym.to_string(),
                task: m.task.clone(),
                group: group_of(&m.task),
                position: m.position,
                solved: m.solved,
                solved_first_attempt: m.solved_first_attempt,
                brute_forced: m.brute_forced,
                skipped: m.skipped,
                timed_out: m.timed_out,
                time_in_task: m.time_in_task,
                attempts: m.attempts,
                qualification_attempts: r.qualification_attempts,
                processing_speed: r.zvt.as_ref().and_then(|z| z.processing_speed),
                zvt_excluded: r.zvt.as_ref().map(|z| z.excluded),
            });
        }
    }
    rows
}

pub fn write_metrics_csv<W: io::Write>(rows: &[MetricsRow], out: W) -> Result<(), AnalysisError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// A CSV file held as text cells under named columns.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read<R: io::Read>(input: R) -> Result<Table, AnalysisError> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<Result<_, _>>()?;
        Ok(Table { headers, rows })
    }

    pub fn column_index(&self, name: &str) -> Result<usize, AnalysisError> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| AnalysisError::Input(format!("no column named '{name}'")))
    }

    fn number(&self, row: usize, col: usize) -> Result<f64, AnalysisError> {
        let cell = self.rows[row].get(col).map(|s| s.trim()).unwrap_or("");
        cell.parse().map_err(|_| {
            AnalysisError::Input(format!(
                "row {}, column '{}': '{cell}' is not a number",
                row + 2,
                self.headers[col]
            ))
        })
    }

    pub fn column(&self, col: usize) -> Result<Vec<f64>, AnalysisError> {
        (0..self.rows.len()).map(|r| self.number(r, col)).collect()
    }

    /// Complete numeric pairs from two columns; rows with an empty cell in
    /// either column are dropped.
    pub fn pairs(&self, a: usize, b: usize) -> Result<(Vec<f64>, Vec<f64>), AnalysisError> {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for r in 0..self.rows.len() {
            let blank = |c: usize| self.rows[r].get(c).is_none_or(|s| s.trim().is_empty());
            if blank(a) || blank(b) {
                continue;
            }
            x.push(self.number(r, a)?);
            y.push(self.number(r, b)?);
        }
        Ok((x, y))
    }

    /// All columns as items, one row per participant.
    pub fn matrix(&self) -> Result<Vec<Vec<f64>>, AnalysisError> {
        (0..self.rows.len())
            .map(|r| (0..self.headers.len()).map(|c| self.number(r, c)).collect())
            .collect()
    }

    /// Values of `value` grouped by the label in `group`, in label order.
    pub fn grouped(
        &self,
        group: usize,
        value: usize,
    ) -> Result<BTreeMap<String, Vec<f64>>, AnalysisError> {
        let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for r in 0..self.rows.len() {
            let label = self.rows[r].get(group).cloned().unwrap_or_default();
            out.entry(label).or_default().push(self.number(r, value)?);
        }
        Ok(out)
    }
}
