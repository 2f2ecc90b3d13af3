//! Session events. Every state change of a session produces exactly one
//! [`Event`]; the ordered list of [`EventRecord`]s is the session log.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::circuit::{OutputCheck, SwitchAssignment};
use crate::engine::{Command, EndReason, Phase, Stage, StudyConfig};
use crate::time::{Millis, Pseudonym};
use crate::zvt::{ClickOutcome, ZvtKind};

/// Largest polyline kept in a drawing summary.
pub const MAX_STROKE_POINTS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrawTool {
    Red,
    Green,
    Blue,
    Eraser,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x0: i32,
    pub y0: i32,
    pub x1: i32,
    pub y1: i32,
}

/// Summary of one pen or eraser stroke.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stroke {
    pub tool: DrawTool,
    /// Number of raw points before downsampling.
    pub points: u32,
    pub bbox: BoundingBox,
    /// Downsampled polyline, at most [`MAX_STROKE_POINTS`] entries.
    #[serde(default)]
    pub path: Vec<[i32; 2]>,
}

/// A task as it was put in front of the participant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShownTask {
    pub id: String,
    pub stage: Stage,
    pub index: usize,
    pub initial: SwitchAssignment,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transition {
    /// The participant pressed Next.
    Next,
    /// Voluntary return to the tutorial from qualification.
    Revisit,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    SessionCreated {
        study: String,
        seed: u64,
        config: StudyConfig,
        qualification: Vec<String>,
        queue: Vec<String>,
        phase: Phase,
    },
    ZvtMatrixStarted {
        matrix: usize,
        matrix_kind: ZvtKind,
        max: u16,
    },
    ZvtClick {
        matrix: usize,
        number: u16,
        correct: bool,
        outcome: ClickOutcome,
    },
    TutorialNavigated {
        page: usize,
    },
    PhaseChanged {
        to: Phase,
        cause: Transition,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        task: Option<ShownTask>,
    },
    TaskShown {
        task: ShownTask,
    },
    SwitchToggled {
        switch: String,
        closed: bool,
    },
    ConfirmSubmitted {
        task: String,
        assignment: SwitchAssignment,
        correct: bool,
        attempts: u32,
        score: u32,
        outputs: Vec<OutputCheck>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        retry_at: Option<Millis>,
        #[serde(default)]
        requalify: bool,
    },
    ConfirmRejected {
        task: String,
        retry_at: Millis,
    },
    TaskSkipped {
        task: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        next: Option<ShownTask>,
    },
    DrawAction {
        #[serde(flatten)]
        stroke: Stroke,
    },
    DrawCleared,
    Timeout,
    SessionEnded {
        reason: EndReason,
    },
}

impl Event {
    /// Snake-case kind tag as written to the log.
    pub fn kind(&self) -> &'static str {
        match self {
            Event::SessionCreated { .. } => "session_created",
            Event::ZvtMatrixStarted { .. } => "zvt_matrix_started",
            Event::ZvtClick { .. } => "zvt_click",
            Event::TutorialNavigated { .. } => "tutorial_navigated",
            Event::PhaseChanged { .. } => "phase_changed",
            Event::TaskShown { .. } => "task_shown",
            Event::SwitchToggled { .. } => "switch_toggled",
            Event::ConfirmSubmitted { .. } => "confirm_submitted",
            Event::ConfirmRejected { .. } => "confirm_rejected",
            Event::TaskSkipped { .. } => "task_skipped",
            Event::DrawAction { .. } => "draw_action",
            Event::DrawCleared => "draw_cleared",
            Event::Timeout => "timeout",
            Event::SessionEnded { .. } => "session_ended",
        }
    }

    /// The command that produced this event, for replay. `None` for
    /// session creation and timeouts, which are not participant commands.
    pub fn command(&self) -> Option<Command> {
        Some(match self {
            Event::SessionCreated { .. } | Event::Timeout => return None,
            Event::ZvtMatrixStarted { .. } => Command::StartZvtMatrix,
            Event::ZvtClick { number, .. } => Command::ZvtClick { number: *number },
            Event::TutorialNavigated { page } => Command::NavigateTutorial { page: *page },
            Event::PhaseChanged {
                cause: Transition::Revisit,
                ..
            } => Command::RevisitTutorial,
            Event::PhaseChanged { .. } | Event::TaskShown { .. } | Event::SessionEnded { .. } => {
                Command::Next
            }
            Event::SwitchToggled { switch, .. } => Command::Toggle {
                switch: switch.clone(),
            },
            Event::ConfirmSubmitted { .. } | Event::ConfirmRejected { .. } => Command::Confirm,
            Event::TaskSkipped { .. } => Command::Skip,
            Event::DrawAction { stroke } => Command::Draw {
                stroke: stroke.clone(),
            },
            Event::DrawCleared => Command::ClearDrawing,
        })
    }
}

/// One line of a session log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: u64,
    pub server_time: Millis,
    pub pseudonym: Pseudonym,
    /// Client batch that carried the command, when there was one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch: Option<u64>,
    #[serde(flatten)]
    pub event: Event,
}
