//! Participant-facing payloads.
//!
//! Views are built only from display information: obfuscated gates appear
//! with their displayed symbol (or an ink blot) and nothing else. Wire
//! levels are included only where the configuration allows live
//! highlighting, or after a correct confirm.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, DisplayKind, Netlist, OutputCheck, SwitchAssignment};
use crate::engine::{Phase, Session, Stage};
use crate::time::{Millis, Pseudonym};
use crate::zvt::ZvtKind;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementView {
    pub id: String,
    pub kind: DisplayKind,
    pub x: i32,
    pub y: i32,
    /// Declared input ports drawn on the symbol.
    pub ports: u8,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireView {
    pub from: String,
    pub to: String,
    pub to_port: u8,
    /// Present only when highlighting is shown.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub powered: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitView {
    pub elements: Vec<ElementView>,
    pub wires: Vec<WireView>,
    /// Switch ids top to bottom with their positions.
    pub switches: Vec<SwitchView>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchView {
    pub id: String,
    pub closed: bool,
}

impl CircuitView {
    /// Redacted rendering of `netlist`. When `circuit` is given, wire
    /// levels for `switches` are attached.
    pub fn build(
        netlist: &Netlist,
        switches: &SwitchAssignment,
        circuit: Option<&Circuit>,
    ) -> Self {
        let levels = circuit.and_then(|c| c.evaluate(switches).ok());
        CircuitView {
            elements: netlist
                .elements
                .iter()
                .map(|e| ElementView {
                    id: e.id.clone(),
                    kind: e.kind.display(),
                    x: e.pos.x,
                    y: e.pos.y,
                    ports: e.kind.input_ports() as u8,
                })
                .collect(),
            wires: netlist
                .wires
                .iter()
                .enumerate()
                .map(|(i, w)| WireView {
                    from: w.from.clone(),
                    to: w.to.clone(),
                    to_port: w.to_port,
                    powered: levels.as_ref().map(|l| l.wire_levels[i]),
                })
                .collect(),
            switches: netlist
                .inputs()
                .iter()
                .zip(&switches.0)
                .map(|(e, &closed)| SwitchView {
                    id: e.id.clone(),
                    closed,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NumberCell {
    pub number: u16,
    pub column: u16,
    pub row: u16,
    pub done: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZvtView {
    /// Index of the current or next matrix.
    pub matrix: usize,
    pub matrices: usize,
    pub matrix_kind: ZvtKind,
    pub columns: u16,
    pub rows: u16,
    pub active: bool,
    pub next_expected: u16,
    pub visible: Vec<NumberCell>,
    pub finished: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TutorialView {
    pub page: usize,
    pub pages: usize,
    pub id: String,
    pub title: String,
    pub body: String,
    pub free_navigation: bool,
    /// Highest page that may be opened next.
    pub reachable: usize,
    pub can_continue: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circuit: Option<CircuitView>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskView {
    pub id: String,
    pub stage: Stage,
    pub index: usize,
    pub total: usize,
    pub circuit: CircuitView,
    pub switch_clicks: u32,
    pub confirm_clicks: u32,
    pub attempts: u32,
    pub score: u32,
    pub solved: bool,
    pub skip_offered: bool,
    /// Earliest time the next confirm is accepted, while a delay runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retry_at: Option<Millis>,
    /// Output feedback from the latest judged confirm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<Vec<OutputCheck>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticipantView {
    pub pseudonym: Pseudonym,
    pub phase: Phase,
    pub server_time: Millis,
    pub deadline: Millis,
    pub total_score: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zvt: Option<ZvtView>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tutorial: Option<TutorialView>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<TaskView>,
}

impl Session {
    /// The redacted payload shown to the participant at `now`.
    pub fn view(&self, now: Millis) -> ParticipantView {
        let st = self.state();
        let content = self.content();
        let live = |stage: Stage| st.config.live_highlighting.contains(&stage);
        let zvt = (st.phase == Phase::PsychometricTest).then(|| {
            let z = &st.zvt;
            let matrix = z
                .active
                .unwrap_or(z.completed.min(z.slots.len().saturating_sub(1)));
            let layout = content.zvt.get(matrix);
            let kind = z.slots.get(matrix).map_or(ZvtKind::Example, |s| s.kind);
            let (columns, rows) = kind.grid();
            let done = z.done();
            ZvtView {
                matrix,
                matrices: z.slots.len(),
                matrix_kind: kind,
                columns,
                rows,
                active: z.active.is_some(),
                next_expected: z.next_expected,
                visible: z
                    .visible()
                    .into_iter()
                    .filter_map(|n| {
                        let &(column, row) = layout?.positions.get(usize::from(n) - 1)?;
                        Some(NumberCell {
                            number: n,
                            column,
                            row,
                            done: done.contains(&n),
                        })
                    })
                    .collect(),
                finished: z.is_finished(),
            }
        });
        let tutorial = (st.phase == Phase::Tutorial).then(|| {
            let pages = content.tutorial.pages.len();
            let page = &content.tutorial.pages[st.tutorial.page];
            let reachable = if st.tutorial.free {
                pages.saturating_sub(1)
            } else {
                (st.tutorial.furthest + 1).min(pages.saturating_sub(1))
            };
            TutorialView {
                page: st.tutorial.page,
                pages,
                id: page.id.clone(),
                title: page.title.clone(),
                body: page.body.clone(),
                free_navigation: st.tutorial.free,
                reachable,
                can_continue: st.tutorial.finished(pages),
                circuit: page.circuit.as_ref().map(|n| {
                    let sw = SwitchAssignment(st.tutorial_switches.clone());
                    CircuitView::build(n, &sw, content.tutorial_circuit(st.tutorial.page))
                }),
            }
        });
        let task = st.current.as_ref().and_then(|cur| {
            let t = content.task(&cur.task)?;
            let show_levels = live(cur.stage) || cur.solved;
            let circuit = show_levels.then(|| content.circuit(&cur.task)).flatten();
            Some(TaskView {
                id: cur.task.clone(),
                stage: cur.stage,
                index: cur.index,
                total: match cur.stage {
                    Stage::Qualification => st.qualification.len(),
                    _ => st.queue.len(),
                },
                circuit: CircuitView::build(&t.netlist, &cur.switches, circuit),
                switch_clicks: cur.switch_clicks,
                confirm_clicks: cur.confirm_clicks,
                attempts: cur.attempts,
                score: cur.score,
                solved: cur.solved,
                skip_offered: self.skip_eligible(now),
                retry_at: (cur.next_confirm_allowed > now).then_some(cur.next_confirm_allowed),
                outputs: cur.last_outputs.clone(),
            })
        });
        ParticipantView {
            pseudonym: st.pseudonym,
            phase: st.phase,
            server_time: now,
            deadline: self.deadline(),
            total_score: st
                .results
                .iter()
                .filter(|r| r.stage == Stage::Experiment)
                .map(|r| r.score)
                .sum(),
            zvt,
            tutorial,
            task,
        }
    }
}
