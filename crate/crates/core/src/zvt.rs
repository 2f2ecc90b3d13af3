//! Digital number-connection test.
//!
//! A run consists of example matrices (numbers 1..=20) followed by test
//! matrices (numbers 1..=90). Before the first click on a matrix only the
//! numbers 1 to 3 are shown; clicking `1` starts the matrix timer and
//! reveals the rest. Clicking the highest number stops the timer.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::time::Millis;

/// Numbers visible before the first click.
pub const PREVIEW: u16 = 3;
pub const DEFAULT_EXCLUSION_LIMIT: Millis = Millis::from_secs(600);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZvtKind {
    Example,
    Test,
}

impl ZvtKind {
    pub fn max_number(self) -> u16 {
        match self {
            ZvtKind::Example => 20,
            ZvtKind::Test => 90,
        }
    }

    /// Grid `(columns, rows)`.
    pub fn grid(self) -> (u16, u16) {
        match self {
            ZvtKind::Example => (5, 4),
            ZvtKind::Test => (10, 9),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZvtMatrix {
    pub id: alloc::string::String,
    pub kind: ZvtKind,
    /// `positions[n - 1]` is the `(column, row)` cell of number `n`.
    pub positions: Vec<(u16, u16)>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MatrixError {
    #[error("matrix has {got} numbers, expected {expected}")]
    WrongCount { expected: usize, got: usize },
    #[error("number {0} lies outside the grid")]
    OutOfBounds(u16),
    #[error("numbers {0} and {1} share a cell")]
    SharedCell(u16, u16),
}

impl ZvtMatrix {
    pub fn new(
        id: impl Into<alloc::string::String>,
        kind: ZvtKind,
        positions: Vec<(u16, u16)>,
    ) -> Result<Self, MatrixError> {
        let m = ZvtMatrix {
            id: id.into(),
            kind,
            positions,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), MatrixError> {
        let expected = usize::from(self.kind.max_number());
        if self.positions.len() != expected {
            return Err(MatrixError::WrongCount {
                expected,
                got: self.positions.len(),
            });
        }
        let (cols, rows) = self.kind.grid();
        let mut seen: alloc::collections::BTreeMap<(u16, u16), u16> = Default::default();
        for (i, &(c, r)) in self.positions.iter().enumerate() {
            let n = i as u16 + 1;
            if c >= cols || r >= rows {
                return Err(MatrixError::OutOfBounds(n));
            }
            if let Some(prev) = seen.insert((c, r), n) {
                return Err(MatrixError::SharedCell(prev, n));
            }
        }
        Ok(())
    }

    /// Pseudo-random layout filling the grid of `kind`.
    pub fn generate(id: impl Into<alloc::string::String>, kind: ZvtKind, seed: u64) -> Self {
        let (cols, rows) = kind.grid();
        let mut cells: Vec<(u16, u16)> = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| (c, r)))
            .collect();
        cells.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        cells.truncate(usize::from(kind.max_number()));
        ZvtMatrix {
            id: id.into(),
            kind,
            positions: cells,
        }
    }

    pub fn max_number(&self) -> u16 {
        self.kind.max_number()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZvtClick {
    pub matrix: usize,
    pub number: u16,
    pub at: Millis,
    pub correct: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixSlot {
    pub kind: ZvtKind,
    pub max: u16,
    /// Time of the click on `1`.
    pub started: Option<Millis>,
    pub finished: Option<Millis>,
}

impl MatrixSlot {
    pub fn elapsed(&self) -> Option<Millis> {
        Some(self.finished? - self.started?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClickOutcome {
    Advance,
    Misclick,
    MatrixComplete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum ZvtError {
    #[error("a matrix is already active")]
    AlreadyActive,
    #[error("all matrices are complete")]
    AllComplete,
    #[error("no matrix is active")]
    NoActiveMatrix,
    #[error("number {0} is not on this matrix")]
    UnknownNumber(u16),
    #[error("test matrices are incomplete")]
    Incomplete,
    #[error("test matrix {0} does not exist")]
    NoSuchMatrix(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZvtState {
    pub slots: Vec<MatrixSlot>,
    /// Index of the matrix being worked on, if one was started.
    pub active: Option<usize>,
    /// Matrices finished so far; the next `start` opens `slots[completed]`.
    pub completed: usize,
    pub next_expected: u16,
    pub clicks: Vec<ZvtClick>,
}

impl ZvtState {
    pub fn new(kinds: impl IntoIterator<Item = ZvtKind>) -> Self {
        ZvtState {
            slots: kinds
                .into_iter()
                .map(|kind| MatrixSlot {
                    kind,
                    max: kind.max_number(),
                    started: None,
                    finished: None,
                })
                .collect(),
            active: None,
            completed: 0,
            next_expected: 1,
            clicks: Vec::new(),
        }
    }

    /// The standard sequence: two example matrices and four test matrices.
    pub fn standard() -> Self {
        Self::new([
            ZvtKind::Example,
            ZvtKind::Example,
            ZvtKind::Test,
            ZvtKind::Test,
            ZvtKind::Test,
            ZvtKind::Test,
        ])
    }

    pub fn is_finished(&self) -> bool {
        self.completed == self.slots.len()
    }

    pub fn start_matrix(&mut self, _at: Millis) -> Result<usize, ZvtError> {
        if self.active.is_some() {
            return Err(ZvtError::AlreadyActive);
        }
        if self.is_finished() {
            return Err(ZvtError::AllComplete);
        }
        self.active = Some(self.completed);
        self.next_expected = 1;
        Ok(self.completed)
    }

    pub fn register_click(&mut self, number: u16, at: Millis) -> Result<ClickOutcome, ZvtError> {
        let idx = self.active.ok_or(ZvtError::NoActiveMatrix)?;
        let slot = &mut self.slots[idx];
        if number == 0 || number > slot.max {
            return Err(ZvtError::UnknownNumber(number));
        }
        let correct = number == self.next_expected;
        self.clicks.push(ZvtClick {
            matrix: idx,
            number,
            at,
            correct,
        });
        if !correct {
            return Ok(ClickOutcome::Misclick);
        }
        if number == 1 {
            slot.started = Some(at);
        }
        if number == slot.max {
            slot.finished = Some(at);
            self.active = None;
            self.completed += 1;
            self.next_expected = 1;
            return Ok(ClickOutcome::MatrixComplete);
        }
        self.next_expected += 1;
        Ok(ClickOutcome::Advance)
    }

    /// Numbers currently visible on the active matrix.
    pub fn visible(&self) -> Vec<u16> {
        match self.active {
            None => Vec::new(),
            Some(idx) => {
                let max = self.slots[idx].max;
                let upto = if self.next_expected == 1 {
                    PREVIEW.min(max)
                } else {
                    max
                };
                (1..=upto).collect()
            }
        }
    }

    /// Numbers already connected on the active matrix.
    pub fn done(&self) -> Vec<u16> {
        match self.active {
            None => Vec::new(),
            Some(_) => (1..self.next_expected).collect(),
        }
    }

    pub fn score(&self, policy: &ScorePolicy) -> Result<ZvtScore, ZvtError> {
        let tests: Vec<&MatrixSlot> = self
            .slots
            .iter()
            .filter(|s| s.kind == ZvtKind::Test)
            .collect();
        let times: Vec<Millis> = tests
            .iter()
            .map(|s| s.elapsed())
            .collect::<Option<_>>()
            .ok_or(ZvtError::Incomplete)?;
        score_times(&times, policy)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScorePolicy {
    /// 1-based test matrix numbers averaged into processing speed.
    pub included: Vec<usize>,
    pub exclusion_limit: Millis,
}

impl Default for ScorePolicy {
    fn default() -> Self {
        ScorePolicy {
            included: vec![1, 2, 3],
            exclusion_limit: DEFAULT_EXCLUSION_LIMIT,
        }
    }
}

impl ScorePolicy {
    pub fn all_four() -> Self {
        ScorePolicy {
            included: vec![1, 2, 3, 4],
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZvtScore {
    pub matrix_times: Vec<Millis>,
    pub included: Vec<usize>,
    /// Mean seconds per included matrix; absent when excluded.
    pub processing_speed: Option<f64>,
    pub excluded: bool,
}

/// Scores per-matrix test times.
pub fn score_times(times: &[Millis], policy: &ScorePolicy) -> Result<ZvtScore, ZvtError> {
    for &i in &policy.included {
        if i == 0 || i > times.len() {
            return Err(ZvtError::NoSuchMatrix(i));
        }
    }
    let total: u64 = times.iter().map(|t| t.0).sum();
    let excluded = total > policy.exclusion_limit.0;
    let processing_speed = if excluded || policy.included.is_empty() {
        None
    } else {
        let sum_ms: u64 = policy.included.iter().map(|&i| times[i - 1].0).sum();
        Some(sum_ms as f64 / 1000.0 / policy.included.len() as f64)
    };
    Ok(ZvtScore {
        matrix_times: times.to_vec(),
        included: policy.included.clone(),
        processing_speed,
        excluded,
    })
}
