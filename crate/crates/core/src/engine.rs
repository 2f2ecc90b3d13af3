//! Per-participant study state machine.
//!
//! A session moves through the psychometric test, the tutorial, the
//! qualification tasks and the experiment tasks, and ends either when the
//! last task is closed or when the global time limit is reached. All
//! timestamps are server times and must be non-decreasing.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, CircuitError, OutputCheck, SwitchAssignment};
use crate::event::{Event, EventRecord, ShownTask, Stroke, Transition, MAX_STROKE_POINTS};
use crate::task::{Group, InitialSwitches, Library, Task, TaskGroup};
use crate::time::{Millis, Pseudonym};
use crate::tutorial::{Tutorial, TutorialProgress};
use crate::zvt::{ZvtError, ZvtMatrix, ZvtState};

/// Where a task is presented.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Tutorial,
    Qualification,
    Experiment,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndReason {
    Completed,
    Timeout,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Phase {
    PsychometricTest,
    Tutorial,
    Qualification { task: usize },
    Experiment { task: usize },
    Ended { reason: EndReason },
}

impl Phase {
    pub fn stage(&self) -> Option<Stage> {
        match self {
            Phase::Tutorial => Some(Stage::Tutorial),
            Phase::Qualification { .. } => Some(Stage::Qualification),
            Phase::Experiment { .. } => Some(Stage::Experiment),
            _ => None,
        }
    }

    pub fn is_ended(&self) -> bool {
        matches!(self, Phase::Ended { .. })
    }
}

/// Skip time limits per experiment group, in seconds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSeconds {
    pub a: u32,
    pub b: u32,
    pub c: u32,
    pub d: u32,
}

impl GroupSeconds {
    pub fn get(&self, group: Group) -> Option<u32> {
        match group {
            Group::A => Some(self.a),
            Group::B => Some(self.b),
            Group::C => Some(self.c),
            Group::D => Some(self.d),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    /// Seconds from session creation until the session times out.
    pub global_time_limit: u32,
    /// Incorrect attempts on one qualification task before the participant
    /// is sent back to the tutorial.
    pub qualification_attempt_cap: u32,
    /// Incorrect attempts after which an experiment task may be skipped.
    pub skip_attempt_limit: u32,
    pub skip_time_limit: GroupSeconds,
    pub score_start: u32,
    pub score_penalty: u32,
    /// Seconds to wait after the k-th incorrect attempt (1-based); the last
    /// entry repeats.
    pub delay_schedule: Vec<u32>,
    pub zvt_enabled: bool,
    pub live_highlighting: Vec<Stage>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            global_time_limit: 4500,
            qualification_attempt_cap: 2,
            skip_attempt_limit: 4,
            skip_time_limit: GroupSeconds {
                a: 180,
                b: 600,
                c: 720,
                d: 900,
            },
            score_start: 100,
            score_penalty: 10,
            delay_schedule: vec![2, 4, 8, 16, 30],
            zvt_enabled: true,
            live_highlighting: vec![Stage::Tutorial, Stage::Qualification],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("delay schedule is empty")]
    EmptyDelaySchedule,
    #[error("delay schedule decreases at entry {0}")]
    DecreasingDelay(usize),
}

impl StudyConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("global_time_limit", self.global_time_limit),
            ("qualification_attempt_cap", self.qualification_attempt_cap),
            ("skip_attempt_limit", self.skip_attempt_limit),
            ("skip_time_limit.a", self.skip_time_limit.a),
            ("skip_time_limit.b", self.skip_time_limit.b),
            ("skip_time_limit.c", self.skip_time_limit.c),
            ("skip_time_limit.d", self.skip_time_limit.d),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(ConfigError::NotPositive(name));
            }
        }
        if self.delay_schedule.is_empty() {
            return Err(ConfigError::EmptyDelaySchedule);
        }
        if self.delay_schedule.contains(&0) {
            return Err(ConfigError::NotPositive("delay_schedule"));
        }
        if let Some(i) = self.delay_schedule.windows(2).position(|w| w[1] < w[0]) {
            return Err(ConfigError::DecreasingDelay(i + 1));
        }
        Ok(())
    }

    /// Wait imposed after the `failures`-th incorrect attempt.
    pub fn delay_after(&self, failures: u32) -> Millis {
        let i = (failures.max(1) as usize - 1).min(self.delay_schedule.len().saturating_sub(1));
        Millis::from_secs(u64::from(self.delay_schedule.get(i).copied().unwrap_or(0)))
    }

    pub fn global_limit(&self) -> Millis {
        Millis::from_secs(u64::from(self.global_time_limit))
    }
}

/// Everything a session needs besides its own state: tasks, tutorial
/// pages and ZVT matrices, with circuits compiled once.
#[derive(Debug)]
pub struct StudyContent {
    pub qualification: Vec<Task>,
    pub experiment: Vec<TaskGroup>,
    pub tutorial: Tutorial,
    pub zvt: Vec<ZvtMatrix>,
    circuits: BTreeMap<String, Circuit>,
    tutorial_circuits: Vec<Option<Circuit>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ContentError {
    #[error("library has no qualification tasks")]
    NoQualification,
    #[error("library has no experiment tasks")]
    NoExperiment,
    #[error("task id {0} appears twice")]
    DuplicateTask(String),
    #[error("circuit of {0}: {1}")]
    Circuit(String, CircuitError),
}

impl StudyContent {
    pub fn new(
        library: &Library,
        tutorial: Tutorial,
        zvt: Vec<ZvtMatrix>,
    ) -> Result<Self, ContentError> {
        let qualification: Vec<Task> = library
            .group(Group::Qualification)
            .map(|g| g.tasks.clone())
            .unwrap_or_default();
        let experiment: Vec<TaskGroup> = library
            .groups
            .iter()
            .filter(|g| g.group.is_experiment() && !g.tasks.is_empty())
            .cloned()
            .collect();
        if qualification.is_empty() {
            return Err(ContentError::NoQualification);
        }
        if experiment.is_empty() {
            return Err(ContentError::NoExperiment);
        }
        let mut circuits = BTreeMap::new();
        for t in qualification
            .iter()
            .chain(experiment.iter().flat_map(|g| &g.tasks))
        {
            let c = t
                .netlist
                .compile()
                .map_err(|e| ContentError::Circuit(t.id.clone(), e))?;
            if circuits.insert(t.id.clone(), c).is_some() {
                return Err(ContentError::DuplicateTask(t.id.clone()));
            }
        }
        let tutorial_circuits = tutorial
            .pages
            .iter()
            .map(|p| {
                p.circuit
                    .as_ref()
                    .map(|n| {
                        n.compile()
                            .map_err(|e| ContentError::Circuit(p.id.clone(), e))
                    })
                    .transpose()
            })
            .collect::<Result<_, _>>()?;
        Ok(StudyContent {
            qualification,
            experiment,
            tutorial,
            zvt,
            circuits,
            tutorial_circuits,
        })
    }

    pub fn task(&self, id: &str) -> Option<&Task> {
        self.qualification
            .iter()
            .chain(self.experiment.iter().flat_map(|g| &g.tasks))
            .find(|t| t.id == id)
    }

    pub fn circuit(&self, id: &str) -> Option<&Circuit> {
        self.circuits.get(id)
    }

    pub fn tutorial_circuit(&self, page: usize) -> Option<&Circuit> {
        self.tutorial_circuits.get(page).and_then(Option::as_ref)
    }
}

/// Participant input, as sent by a client.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Command {
    StartZvtMatrix,
    ZvtClick {
        number: u16,
    },
    NavigateTutorial {
        page: usize,
    },
    /// The Next button: leaves the test, the tutorial, or a solved task.
    Next,
    RevisitTutorial,
    Toggle {
        switch: String,
    },
    Confirm,
    Skip,
    Draw {
        #[serde(flatten)]
        stroke: Stroke,
    },
    ClearDrawing,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("invalid study configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("psychometric test is enabled but no matrices are configured")]
    NoZvtMatrices,
    #[error("timestamp {got} precedes the last accepted time {last}")]
    ClockWentBackwards { last: Millis, got: Millis },
    #[error("the session time limit has passed")]
    Expired,
    #[error("{command} is not allowed in the current phase")]
    PhaseMismatch { command: &'static str },
    #[error("unknown switch {0}")]
    UnknownSwitch(String),
    #[error("the current task is already solved")]
    TaskClosed,
    #[error("the current task is not solved yet")]
    TaskOpen,
    #[error("skipping is not available yet")]
    SkipNotEligible,
    #[error("the psychometric test is not finished")]
    ZvtIncomplete,
    #[error(transparent)]
    Zvt(#[from] ZvtError),
    #[error("page {0} cannot be opened")]
    PageUnavailable(usize),
    #[error("the tutorial has not been read to the end")]
    TutorialUnfinished,
    #[error("drawing summary has {0} points, more than allowed")]
    StrokeTooLong(usize),
    #[error("task {0} is not in the study content")]
    UnknownTask(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReplayError {
    #[error("log is empty")]
    Empty,
    #[error("first record is not session creation")]
    MissingCreation,
    #[error("record {seq}: {source}")]
    Rejected { seq: u64, source: EngineError },
    #[error("record {seq}: replay produced a different event")]
    Diverged { seq: u64 },
    #[error("record {seq}: sequence number out of order")]
    Sequence { seq: u64 },
    #[error("record {seq}: belongs to another session")]
    ForeignRecord { seq: u64 },
}

/// State of the task in front of the participant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskProgress {
    pub task: String,
    pub group: Group,
    pub stage: Stage,
    pub index: usize,
    pub first_view: Millis,
    /// Judged confirms, correct or not.
    pub attempts: u32,
    pub failures: u32,
    pub score: u32,
    pub next_confirm_allowed: Millis,
    pub skip_offered: bool,
    pub solved: bool,
    pub switches: SwitchAssignment,
    pub switch_clicks: u32,
    /// All confirm clicks, including those rejected during a delay.
    pub confirm_clicks: u32,
    pub last_outputs: Option<Vec<OutputCheck>>,
    pub draw_actions: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskOutcome {
    Solved,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskResult {
    pub task: String,
    pub stage: Stage,
    pub outcome: TaskOutcome,
    pub attempts: u32,
    pub score: u32,
    pub first_view: Millis,
    pub closed_at: Millis,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionState {
    pub study: String,
    pub pseudonym: Pseudonym,
    pub seed: u64,
    pub config: StudyConfig,
    pub phase: Phase,
    pub qualification: Vec<String>,
    /// Experiment task ids in presentation order.
    pub queue: Vec<String>,
    pub current: Option<TaskProgress>,
    pub tutorial: TutorialProgress,
    /// Switch positions on the current tutorial page's circuit.
    pub tutorial_switches: Vec<bool>,
    pub results: Vec<TaskResult>,
    pub zvt: ZvtState,
    pub session_start: Millis,
    pub last_time: Millis,
    /// Tasks shown so far; selects the random stream for initial switches.
    pub shown: u64,
    /// Times the participant was sent back to the tutorial.
    pub requalifications: u32,
}

/// A live session: shared content plus this participant's state.
#[derive(Clone, Debug)]
pub struct Session {
    content: Arc<StudyContent>,
    state: SessionState,
}

/// Experiment order: groups in library order, tasks shuffled within each.
pub fn experiment_order(content: &StudyContent, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut queue = Vec::new();
    for g in &content.experiment {
        let mut ids: Vec<String> = g.tasks.iter().map(|t| t.id.clone()).collect();
        ids.shuffle(&mut rng);
        queue.extend(ids);
    }
    queue
}

impl Session {
    pub fn create(
        content: Arc<StudyContent>,
        config: StudyConfig,
        study: &str,
        pseudonym: Pseudonym,
        seed: u64,
        now: Millis,
    ) -> Result<(Session, Event), EngineError> {
        config.validate()?;
        if config.zvt_enabled && content.zvt.is_empty() {
            return Err(EngineError::NoZvtMatrices);
        }
        let queue = experiment_order(&content, seed);
        let qualification: Vec<String> =
            content.qualification.iter().map(|t| t.id.clone()).collect();
        let phase = if config.zvt_enabled {
            Phase::PsychometricTest
        } else {
            Phase::Tutorial
        };
        let zvt = if config.zvt_enabled {
            ZvtState::new(content.zvt.iter().map(|m| m.kind))
        } else {
            ZvtState::new([])
        };
        let mut session = Session {
            state: SessionState {
                study: study.to_string(),
                pseudonym,
                seed,
                config: config.clone(),
                phase,
                qualification: qualification.clone(),
                queue: queue.clone(),
                current: None,
                tutorial: TutorialProgress::first_pass(),
                tutorial_switches: Vec::new(),
                results: Vec::new(),
                zvt,
                session_start: now,
                last_time: now,
                shown: 0,
                requalifications: 0,
            },
            content,
        };
        if phase == Phase::Tutorial {
            session.reset_tutorial_switches();
        }
        let event = Event::SessionCreated {
            study: study.to_string(),
            seed,
            config,
            qualification,
            queue,
            phase,
        };
        Ok((session, event))
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn content(&self) -> &Arc<StudyContent> {
        &self.content
    }

    pub fn phase(&self) -> Phase {
        self.state.phase
    }

    pub fn deadline(&self) -> Millis {
        self.state.session_start + self.state.config.global_limit()
    }

    /// Ends the session if its time limit has been reached.
    pub fn tick(&mut self, now: Millis) -> Option<Event> {
        if self.state.phase.is_ended() || now < self.deadline() || now < self.state.last_time {
            return None;
        }
        self.state.phase = Phase::Ended {
            reason: EndReason::Timeout,
        };
        self.state.current = None;
        self.state.last_time = now;
        Some(Event::Timeout)
    }

    /// Whether the current experiment task may be skipped at `now`.
    pub fn skip_eligible(&self, now: Millis) -> bool {
        let Some(cur) = &self.state.current else {
            return false;
        };
        if cur.stage != Stage::Experiment || cur.solved {
            return false;
        }
        cur.skip_offered || self.skip_threshold_met(cur, now)
    }

    fn skip_threshold_met(&self, cur: &TaskProgress, now: Millis) -> bool {
        let task = self.content.task(&cur.task);
        let cfg = &self.state.config;
        let attempt_limit = task
            .and_then(|t| t.skip_attempt_limit)
            .unwrap_or(cfg.skip_attempt_limit);
        let time_limit = task
            .and_then(|t| t.skip_time_limit)
            .or_else(|| cfg.skip_time_limit.get(cur.group))
            .unwrap_or(u32::MAX);
        cur.failures >= attempt_limit
            || now.saturating_sub(cur.first_view) >= Millis::from_secs(u64::from(time_limit))
    }

    pub fn apply(&mut self, command: &Command, now: Millis) -> Result<Event, EngineError> {
        if now < self.state.last_time {
            return Err(EngineError::ClockWentBackwards {
                last: self.state.last_time,
                got: now,
            });
        }
        if !self.state.phase.is_ended() && now >= self.deadline() {
            return Err(EngineError::Expired);
        }
        let event = match command {
            Command::StartZvtMatrix => self.start_zvt_matrix(now)?,
            Command::ZvtClick { number } => self.zvt_click(*number, now)?,
            Command::NavigateTutorial { page } => self.navigate(*page)?,
            Command::Next => self.next(now)?,
            Command::RevisitTutorial => self.revisit()?,
            Command::Toggle { switch } => self.toggle(switch)?,
            Command::Confirm => self.confirm(now)?,
            Command::Skip => self.skip(now)?,
            Command::Draw { stroke } => self.draw(stroke)?,
            Command::ClearDrawing => {
                self.current_mut("clear_drawing")?;
                Event::DrawCleared
            }
        };
        if let Some(cur) = &self.state.current {
            if !cur.skip_offered && self.skip_eligible(now) {
                self.state.current.as_mut().unwrap().skip_offered = true;
            }
        }
        self.state.last_time = now;
        Ok(event)
    }

    fn start_zvt_matrix(&mut self, now: Millis) -> Result<Event, EngineError> {
        if self.state.phase != Phase::PsychometricTest {
            return Err(EngineError::PhaseMismatch {
                command: "start_zvt_matrix",
            });
        }
        let matrix = self.state.zvt.start_matrix(now)?;
        let slot = self.state.zvt.slots[matrix];
        Ok(Event::ZvtMatrixStarted {
            matrix,
            matrix_kind: slot.kind,
            max: slot.max,
        })
    }

    fn zvt_click(&mut self, number: u16, now: Millis) -> Result<Event, EngineError> {
        if self.state.phase != Phase::PsychometricTest {
            return Err(EngineError::PhaseMismatch {
                command: "zvt_click",
            });
        }
        let matrix = self.state.zvt.active.ok_or(ZvtError::NoActiveMatrix)?;
        let outcome = self.state.zvt.register_click(number, now)?;
        Ok(Event::ZvtClick {
            matrix,
            number,
            correct: outcome != crate::zvt::ClickOutcome::Misclick,
            outcome,
        })
    }

    fn navigate(&mut self, page: usize) -> Result<Event, EngineError> {
        if self.state.phase != Phase::Tutorial {
            return Err(EngineError::PhaseMismatch {
                command: "navigate_tutorial",
            });
        }
        let pages = self.content.tutorial.pages.len();
        if !self.state.tutorial.can_open(page, pages) {
            return Err(EngineError::PageUnavailable(page));
        }
        self.state.tutorial.open(page);
        self.reset_tutorial_switches();
        Ok(Event::TutorialNavigated { page })
    }

    fn reset_tutorial_switches(&mut self) {
        let n = self
            .content
            .tutorial_circuit(self.state.tutorial.page)
            .map_or(0, |c| c.switch_count());
        self.state.tutorial_switches = vec![false; n];
    }

    fn next(&mut self, now: Millis) -> Result<Event, EngineError> {
        match self.state.phase {
            Phase::PsychometricTest => {
                if !self.state.zvt.is_finished() {
                    return Err(EngineError::ZvtIncomplete);
                }
                self.enter_tutorial(TutorialProgress::first_pass());
                Ok(Event::PhaseChanged {
                    to: Phase::Tutorial,
                    cause: Transition::Next,
                    task: None,
                })
            }
            Phase::Tutorial => {
                if !self
                    .state
                    .tutorial
                    .finished(self.content.tutorial.pages.len())
                {
                    return Err(EngineError::TutorialUnfinished);
                }
                let shown = self.show(Stage::Qualification, 0, now)?;
                Ok(Event::PhaseChanged {
                    to: self.state.phase,
                    cause: Transition::Next,
                    task: Some(shown),
                })
            }
            Phase::Qualification { task } => {
                self.require_solved()?;
                if task + 1 < self.state.qualification.len() {
                    let shown = self.show(Stage::Qualification, task + 1, now)?;
                    Ok(Event::TaskShown { task: shown })
                } else {
                    let shown = self.show(Stage::Experiment, 0, now)?;
                    Ok(Event::PhaseChanged {
                        to: self.state.phase,
                        cause: Transition::Next,
                        task: Some(shown),
                    })
                }
            }
            Phase::Experiment { task } => {
                self.require_solved()?;
                if task + 1 < self.state.queue.len() {
                    let shown = self.show(Stage::Experiment, task + 1, now)?;
                    Ok(Event::TaskShown { task: shown })
                } else {
                    self.finish();
                    Ok(Event::SessionEnded {
                        reason: EndReason::Completed,
                    })
                }
            }
            Phase::Ended { .. } => Err(EngineError::PhaseMismatch { command: "next" }),
        }
    }

    fn require_solved(&self) -> Result<(), EngineError> {
        match &self.state.current {
            Some(c) if c.solved => Ok(()),
            _ => Err(EngineError::TaskOpen),
        }
    }

    fn finish(&mut self) {
        self.state.phase = Phase::Ended {
            reason: EndReason::Completed,
        };
        self.state.current = None;
    }

    fn enter_tutorial(&mut self, progress: TutorialProgress) {
        self.state.phase = Phase::Tutorial;
        self.state.tutorial = progress;
        self.state.current = None;
        self.reset_tutorial_switches();
    }

    fn revisit(&mut self) -> Result<Event, EngineError> {
        if !matches!(self.state.phase, Phase::Qualification { .. }) {
            return Err(EngineError::PhaseMismatch {
                command: "revisit_tutorial",
            });
        }
        self.enter_tutorial(TutorialProgress::revisit(self.content.tutorial.pages.len()));
        Ok(Event::PhaseChanged {
            to: Phase::Tutorial,
            cause: Transition::Revisit,
            task: None,
        })
    }

    /// Puts task `index` of `stage` in front of the participant.
    fn show(&mut self, stage: Stage, index: usize, now: Millis) -> Result<ShownTask, EngineError> {
        let id = match stage {
            Stage::Qualification => &self.state.qualification[index],
            _ => &self.state.queue[index],
        }
        .clone();
        let task = self
            .content
            .task(&id)
            .ok_or_else(|| EngineError::UnknownTask(id.clone()))?;
        let n = task.netlist.switch_count();
        let initial = match &task.initial_switches {
            InitialSwitches::Fixed(a) => a.clone(),
            InitialSwitches::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.state.seed);
                rng.set_stream(self.state.shown);
                SwitchAssignment((0..n).map(|_| rng.gen()).collect())
            }
        };
        self.state.shown += 1;
        self.state.phase = match stage {
            Stage::Qualification => Phase::Qualification { task: index },
            _ => Phase::Experiment { task: index },
        };
        self.state.current = Some(TaskProgress {
            task: id.clone(),
            group: task.group,
            stage,
            index,
            first_view: now,
            attempts: 0,
            failures: 0,
            score: self.state.config.score_start,
            next_confirm_allowed: now,
            skip_offered: false,
            solved: false,
            switches: initial.clone(),
            switch_clicks: 0,
            confirm_clicks: 0,
            last_outputs: None,
            draw_actions: 0,
        });
        Ok(ShownTask {
            id,
            stage,
            index,
            initial,
        })
    }

    fn current_mut(&mut self, command: &'static str) -> Result<&mut TaskProgress, EngineError> {
        self.state
            .current
            .as_mut()
            .ok_or(EngineError::PhaseMismatch { command })
    }

    fn toggle(&mut self, switch: &str) -> Result<Event, EngineError> {
        if self.state.phase == Phase::Tutorial {
            let circuit = self
                .content
                .tutorial_circuit(self.state.tutorial.page)
                .ok_or(EngineError::PhaseMismatch { command: "toggle" })?;
            let page = &self.content.tutorial.pages[self.state.tutorial.page];
            let net = page.circuit.as_ref().expect("compiled page has a circuit");
            let rank = switch_rank(net, switch)?;
            debug_assert!(rank < circuit.switch_count());
            let bit = &mut self.state.tutorial_switches[rank];
            *bit = !*bit;
            return Ok(Event::SwitchToggled {
                switch: switch.to_string(),
                closed: *bit,
            });
        }
        let content = Arc::clone(&self.content);
        let cur = self.current_mut("toggle")?;
        if cur.solved {
            return Err(EngineError::TaskClosed);
        }
        let task = content
            .task(&cur.task)
            .ok_or_else(|| EngineError::UnknownTask(cur.task.clone()))?;
        let rank = switch_rank(&task.netlist, switch)?;
        let bit = &mut cur.switches.0[rank];
        *bit = !*bit;
        let closed = *bit;
        cur.switch_clicks += 1;
        Ok(Event::SwitchToggled {
            switch: switch.to_string(),
            closed,
        })
    }

    fn confirm(&mut self, now: Millis) -> Result<Event, EngineError> {
        let content = Arc::clone(&self.content);
        let config = self.state.config.clone();
        let cur = self.current_mut("confirm")?;
        if cur.solved {
            return Err(EngineError::TaskClosed);
        }
        cur.confirm_clicks += 1;
        if now < cur.next_confirm_allowed {
            return Ok(Event::ConfirmRejected {
                task: cur.task.clone(),
                retry_at: cur.next_confirm_allowed,
            });
        }
        let circuit = content
            .circuit(&cur.task)
            .ok_or_else(|| EngineError::UnknownTask(cur.task.clone()))?;
        let verdict = circuit
            .check(&cur.switches)
            .expect("switch vector matches its compiled circuit");
        cur.attempts += 1;
        cur.last_outputs = Some(verdict.outputs.clone());
        let mut retry_at = None;
        let mut requalify = false;
        if verdict.correct {
            cur.solved = true;
        } else {
            cur.failures += 1;
            cur.score = cur.score.saturating_sub(config.score_penalty);
            cur.next_confirm_allowed = now + config.delay_after(cur.failures);
            retry_at = Some(cur.next_confirm_allowed);
            requalify = cur.stage == Stage::Qualification
                && cur.failures >= config.qualification_attempt_cap;
        }
        let event = Event::ConfirmSubmitted {
            task: cur.task.clone(),
            assignment: cur.switches.clone(),
            correct: verdict.correct,
            attempts: cur.attempts,
            score: cur.score,
            outputs: verdict.outputs,
            retry_at,
            requalify,
        };
        if verdict.correct {
            let result = TaskResult {
                task: cur.task.clone(),
                stage: cur.stage,
                outcome: TaskOutcome::Solved,
                attempts: cur.attempts,
                score: cur.score,
                first_view: cur.first_view,
                closed_at: now,
            };
            self.state.results.push(result);
        }
        if requalify {
            self.state.requalifications += 1;
            self.enter_tutorial(TutorialProgress::revisit(self.content.tutorial.pages.len()));
        }
        Ok(event)
    }

    fn skip(&mut self, now: Millis) -> Result<Event, EngineError> {
        if !matches!(self.state.phase, Phase::Experiment { .. }) {
            return Err(EngineError::PhaseMismatch { command: "skip" });
        }
        if !self.skip_eligible(now) {
            return Err(EngineError::SkipNotEligible);
        }
        let cur = self
            .state
            .current
            .take()
            .expect("experiment phase has a task");
        self.state.results.push(TaskResult {
            task: cur.task.clone(),
            stage: cur.stage,
            outcome: TaskOutcome::Skipped,
            attempts: cur.attempts,
            score: 0,
            first_view: cur.first_view,
            closed_at: now,
        });
        let next = if cur.index + 1 < self.state.queue.len() {
            Some(self.show(Stage::Experiment, cur.index + 1, now)?)
        } else {
            self.finish();
            None
        };
        Ok(Event::TaskSkipped {
            task: cur.task,
            next,
        })
    }

    fn draw(&mut self, stroke: &Stroke) -> Result<Event, EngineError> {
        if stroke.path.len() > MAX_STROKE_POINTS {
            return Err(EngineError::StrokeTooLong(stroke.path.len()));
        }
        self.current_mut("draw")?.draw_actions += 1;
        Ok(Event::DrawAction {
            stroke: stroke.clone(),
        })
    }

    /// Rebuilds a session from its log, checking that every logged event
    /// is reproduced exactly.
    pub fn replay(content: Arc<StudyContent>, log: &[EventRecord]) -> Result<Session, ReplayError> {
        let (first, rest) = log.split_first().ok_or(ReplayError::Empty)?;
        let Event::SessionCreated {
            study,
            seed,
            config,
            ..
        } = &first.event
        else {
            return Err(ReplayError::MissingCreation);
        };
        let (mut session, created) = Session::create(
            content,
            config.clone(),
            study,
            first.pseudonym,
            *seed,
            first.server_time,
        )
        .map_err(|source| ReplayError::Rejected {
            seq: first.seq,
            source,
        })?;
        if created != first.event {
            return Err(ReplayError::Diverged { seq: first.seq });
        }
        let mut prev = first.seq;
        for rec in rest {
            if rec.seq <= prev {
                return Err(ReplayError::Sequence { seq: rec.seq });
            }
            if rec.pseudonym != first.pseudonym {
                return Err(ReplayError::ForeignRecord { seq: rec.seq });
            }
            prev = rec.seq;
            let produced = match rec.event.command() {
                None => session.tick(rec.server_time),
                Some(cmd) => Some(session.apply(&cmd, rec.server_time).map_err(|source| {
                    ReplayError::Rejected {
                        seq: rec.seq,
                        source,
                    }
                })?),
            };
            if produced.as_ref() != Some(&rec.event) {
                return Err(ReplayError::Diverged { seq: rec.seq });
            }
        }
        Ok(session)
    }
}

fn switch_rank(netlist: &crate::circuit::Netlist, id: &str) -> Result<usize, EngineError> {
    netlist
        .inputs()
        .iter()
        .position(|e| e.id == id)
        .ok_or_else(|| EngineError::UnknownSwitch(id.to_string()))
}
