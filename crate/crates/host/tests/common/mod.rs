//! Shared test support: the shipped study, independent oracles, and a
//! random session walker that checks every transition it makes.

#![allow(dead_code)]

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use circuitlab::library::load_library;
use circuitlab::study::{load_studies, Study};
use circuitlab_core::circuit::{ElementKind, Netlist, SwitchAssignment};
use circuitlab_core::engine::{
    Command, EndReason, EngineError, Phase, Session, SessionState, Stage, StudyConfig, StudyContent,
};
use circuitlab_core::event::{BoundingBox, DrawTool, Event, EventRecord, Stroke};
use circuitlab_core::task::{DesignConstraints, Library};
use circuitlab_core::time::{Millis, Pseudonym};

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn shipped_study() -> Study {
    load_studies(&data_dir().join("study.toml"))
        .unwrap()
        .remove("main")
        .unwrap()
}

pub fn shipped_library() -> Library {
    load_library(&data_dir().join("library"), &DesignConstraints::default()).unwrap()
}

// ---------------------------------------------------------------------------
// circuit oracle

/// Output levels (top to bottom) and wire levels (in netlist order) by
/// direct recursion over the netlist, without compilation.
pub fn naive_evaluate(net: &Netlist, assignment: &SwitchAssignment) -> (Vec<bool>, Vec<bool>) {
    let screen = |kind: fn(&ElementKind) -> bool| {
        let mut v: Vec<_> = net.elements.iter().filter(|e| kind(&e.kind)).collect();
        v.sort_by_key(|e| (e.pos.y, e.pos.x, e.id.clone()));
        v
    };
    let rank: HashMap<&str, usize> = screen(|k| *k == ElementKind::Switch)
        .iter()
        .enumerate()
        .map(|(i, e)| (e.id.as_str(), i))
        .collect();

    fn level(net: &Netlist, id: &str, a: &SwitchAssignment, rank: &HashMap<&str, usize>) -> bool {
        let driver = |port: u8| {
            let w = net
                .wires
                .iter()
                .find(|w| w.to == id && w.to_port == port)
                .expect("driven port");
            level(net, &w.from, a, rank)
        };
        let el = net.element(id).expect("known element");
        match &el.kind {
            ElementKind::Battery => true,
            ElementKind::Switch => a.0[rank[id]] && driver(0),
            ElementKind::AndGate => driver(0) && driver(1),
            ElementKind::OrGate => driver(0) || driver(1),
            ElementKind::NotGate => !driver(0),
            ElementKind::Wire | ElementKind::Lamp | ElementKind::DangerSign => driver(0),
            ElementKind::CamouflagedGate(t) | ElementKind::CovertGate { truth: t, .. } => {
                let ins: Vec<bool> = t.effective_inputs.iter().map(|&p| driver(p)).collect();
                t.actual.apply(&ins)
            }
        }
    }

    let outputs = screen(ElementKind::is_output)
        .iter()
        .map(|e| level(net, &e.id, assignment, &rank))
        .collect();
    let wires = net
        .wires
        .iter()
        .map(|w| level(net, &w.from, assignment, &rank))
        .collect();
    (outputs, wires)
}

// ---------------------------------------------------------------------------
// statistics oracles, written from the textbook definitions

pub fn o_mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn o_var(x: &[f64]) -> f64 {
    let m = o_mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64
}

pub fn o_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

/// Rank = 1 + number of smaller values + half the number of other equal values.
pub fn o_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let less = x.iter().filter(|&&u| u < v).count() as f64;
            let equal = x.iter().filter(|&&u| u == v).count() as f64;
            1.0 + less + (equal - 1.0) / 2.0
        })
        .collect()
}

pub fn o_spearman(x: &[f64], y: &[f64]) -> f64 {
    o_pearson(&o_ranks(x), &o_ranks(y))
}

pub fn o_kendall_b(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let (mut concordant, mut discordant, mut tie_x, mut tie_y) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 && dy == 0.0 {
                continue;
            } else if dx == 0.0 {
                tie_x += 1;
            } else if dy == 0.0 {
                tie_y += 1;
            } else if (dx > 0.0) == (dy > 0.0) {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    let (c, d) = (concordant as f64, discordant as f64);
    (c - d) / ((c + d + tie_x as f64) * (c + d + tie_y as f64)).sqrt()
}

pub fn o_zscores(x: &[f64]) -> Vec<f64> {
    let (m, s) = (o_mean(x), o_var(x).sqrt());
    x.iter().map(|v| (v - m) / s).collect()
}

pub fn o_alpha(rows: &[Vec<f64>]) -> f64 {
    let k = rows[0].len();
    let item_var: f64 = (0..k)
        .map(|j| o_var(&rows.iter().map(|r| r[j]).collect::<Vec<_>>()))
        .sum();
    let totals: Vec<f64> = rows.iter().map(|r| r.iter().sum()).collect();
    k as f64 / (k as f64 - 1.0) * (1.0 - item_var / o_var(&totals))
}

/// Welch (1951): F, numerator df, denominator df.
pub fn o_welch(groups: &[Vec<f64>]) -> (f64, f64, f64) {
    let k = groups.len() as f64;
    let w: Vec<f64> = groups.iter().map(|g| g.len() as f64 / o_var(g)).collect();
    let sw: f64 = w.iter().sum();
    let grand: f64 = groups
        .iter()
        .zip(&w)
        .map(|(g, wi)| wi * o_mean(g))
        .sum::<f64>()
        / sw;
    let a = groups
        .iter()
        .zip(&w)
        .map(|(g, wi)| wi * (o_mean(g) - grand).powi(2))
        .sum::<f64>()
        / (k - 1.0);
    let lambda: f64 = groups
        .iter()
        .zip(&w)
        .map(|(g, wi)| (1.0 - wi / sw).powi(2) / (g.len() as f64 - 1.0))
        .sum();
    let b = 1.0 + 2.0 * (k - 2.0) / (k * k - 1.0) * lambda;
    (a / b, k - 1.0, (k * k - 1.0) / (3.0 * lambda))
}

// ---------------------------------------------------------------------------
// random walks

fn edge_ok(from: Phase, to: Phase, quals: usize, tasks: usize) -> bool {
    use Phase::*;
    match (from, to) {
        (a, b) if a == b => true,
        (Ended { .. }, _) => false,
        (
            _,
            Ended {
                reason: EndReason::Timeout,
            },
        ) => true,
        (PsychometricTest, Tutorial) => true,
        (Tutorial, Qualification { task: 0 }) => true,
        (Qualification { task: a }, Qualification { task: b }) => b == a + 1,
        (Qualification { task }, Experiment { task: 0 }) => task + 1 == quals,
        (Qualification { .. }, Tutorial) => true,
        (Experiment { task: a }, Experiment { task: b }) => b == a + 1,
        (
            Experiment { task },
            Ended {
                reason: EndReason::Completed,
            },
        ) => task + 1 == tasks,
        _ => false,
    }
}

/// Checks one applied command against the study rules, computed here from
/// the configuration rather than taken from the engine.
pub fn check_transition(
    content: &StudyContent,
    pre: &SessionState,
    cmd: &Command,
    now: Millis,
    result: &Result<Event, EngineError>,
    post: &SessionState,
) -> Result<(), String> {
    let cfg = &pre.config;
    let deadline = pre.session_start + cfg.global_limit();
    let fail = |m: String| Err(format!("{cmd:?} at {now}: {m}"));
    let event = match result {
        Err(_) => {
            if pre != post {
                return fail("rejected command changed the state".into());
            }
            // a legal skip must never be refused
            if let (Command::Skip, Err(EngineError::SkipNotEligible)) = (cmd, result) {
                if let Some(cur) = &pre.current {
                    if skip_allowed(content, cfg, cur, now) {
                        return fail("eligible skip refused".into());
                    }
                }
            }
            return Ok(());
        }
        Ok(e) => e,
    };
    if pre.phase.is_ended() {
        return fail("command accepted after the session ended".into());
    }
    if now >= deadline {
        return fail("command accepted at or after the deadline".into());
    }
    if post.last_time != now {
        return fail("last_time not advanced".into());
    }
    if event.command().as_ref() != Some(cmd) {
        return fail(format!(
            "event {} does not map back to the command",
            event.kind()
        ));
    }
    if !edge_ok(
        pre.phase,
        post.phase,
        pre.qualification.len(),
        pre.queue.len(),
    ) {
        return fail(format!("illegal edge {:?} -> {:?}", pre.phase, post.phase));
    }
    if post.results.len() < pre.results.len() || post.results.len() > pre.results.len() + 1 {
        return fail("results changed by more than one entry".into());
    }
    if post.results[..pre.results.len()] != pre.results[..] {
        return fail("earlier results rewritten".into());
    }
    if let Some(cur) = &post.current {
        let expected = cfg
            .score_start
            .saturating_sub(cfg.score_penalty.saturating_mul(cur.failures));
        if cur.score != expected {
            return fail(format!("score {} but {} expected", cur.score, expected));
        }
    }
    if matches!(post.phase, Phase::Experiment { task: 0 })
        && !matches!(pre.phase, Phase::Experiment { .. })
    {
        let solved = pre.current.as_ref().is_some_and(|c| c.solved);
        if !solved {
            return fail("experiment entered without a solved last qualification task".into());
        }
    }
    if let (Phase::Experiment { task: a }, Phase::Experiment { task: b }) = (pre.phase, post.phase)
    {
        if b == a + 1
            && !matches!(cmd, Command::Skip)
            && !pre.current.as_ref().is_some_and(|c| c.solved)
        {
            return fail("advanced past an unsolved task".into());
        }
    }
    match (cmd, event) {
        (Command::Confirm, Event::ConfirmRejected { retry_at, .. }) => {
            let cur = pre.current.as_ref().unwrap();
            if now >= cur.next_confirm_allowed || *retry_at != cur.next_confirm_allowed {
                return fail("confirm rejected outside a delay".into());
            }
            let mut expect = cur.clone();
            expect.confirm_clicks += 1;
            expect.skip_offered = post.current.as_ref().unwrap().skip_offered;
            if post.current.as_ref() != Some(&expect) {
                return fail("rejected confirm changed more than the click count".into());
            }
        }
        (
            Command::Confirm,
            Event::ConfirmSubmitted {
                correct,
                retry_at,
                requalify,
                score,
                ..
            },
        ) => {
            let cur = pre.current.as_ref().unwrap();
            if now < cur.next_confirm_allowed {
                return fail("confirm judged during a delay".into());
            }
            let task = content.task(&cur.task).unwrap();
            let (outs, _) = naive_evaluate(&task.netlist, &cur.switches);
            let truth = outs.iter().zip(&task.target_outputs.0).all(|(&lvl, kind)| {
                lvl == matches!(kind, circuitlab_core::circuit::OutputKind::Lamp)
            });
            if truth != *correct {
                return fail("verdict differs from the naive evaluator".into());
            }
            let failures = cur.failures + u32::from(!truth);
            if *score
                != cfg
                    .score_start
                    .saturating_sub(cfg.score_penalty.saturating_mul(failures))
            {
                return fail("score after confirm".into());
            }
            if !truth {
                let i = (failures as usize - 1).min(cfg.delay_schedule.len() - 1);
                let wait = Millis::from_secs(u64::from(cfg.delay_schedule[i]));
                if *retry_at != Some(now + wait) {
                    return fail("delay does not follow the schedule".into());
                }
                if i > 0 && cfg.delay_schedule[i] < cfg.delay_schedule[i - 1] {
                    return fail("delay decreased".into());
                }
            }
            let should = cur.stage == Stage::Qualification
                && !truth
                && failures >= cfg.qualification_attempt_cap;
            if *requalify != should {
                return fail("requalification rule".into());
            }
            if should && post.phase != Phase::Tutorial {
                return fail("requalification did not return to the tutorial".into());
            }
        }
        (Command::Skip, Event::TaskSkipped { .. }) => {
            let cur = pre.current.as_ref().unwrap();
            if !skip_allowed(content, cfg, cur, now) {
                return fail("skip accepted before the limits".into());
            }
        }
        (Command::Toggle { .. }, Event::SwitchToggled { .. }) => {
            if let (Some(a), Some(b)) = (&pre.current, &post.current) {
                let flipped = a
                    .switches
                    .0
                    .iter()
                    .zip(&b.switches.0)
                    .filter(|(x, y)| x != y)
                    .count();
                if flipped != 1 {
                    return fail(format!("{flipped} switches changed"));
                }
            }
        }
        (Command::Next, _) => {
            if pre.phase == Phase::PsychometricTest && !pre.zvt.is_finished() {
                return fail("left the test before finishing".into());
            }
            if pre.phase == Phase::Tutorial && !pre.tutorial.finished(content.tutorial.pages.len())
            {
                return fail("left the tutorial before reading it".into());
            }
        }
        _ => {}
    }
    Ok(())
}

fn skip_allowed(
    content: &StudyContent,
    cfg: &StudyConfig,
    cur: &circuitlab_core::engine::TaskProgress,
    now: Millis,
) -> bool {
    if cur.stage != Stage::Experiment || cur.solved {
        return false;
    }
    let task = content.task(&cur.task).unwrap();
    let attempts = task.skip_attempt_limit.unwrap_or(cfg.skip_attempt_limit);
    let secs = task
        .skip_time_limit
        .or(cfg.skip_time_limit.get(cur.group))
        .unwrap();
    cur.failures >= attempts
        || now.saturating_sub(cur.first_view) >= Millis::from_secs(u64::from(secs))
}

/// A session driven by random commands, logged like the server logs it.
pub struct Walk {
    pub session: Session,
    pub log: Vec<EventRecord>,
    pub now: Millis,
    pub rng: ChaCha8Rng,
    solutions: HashMap<String, Vec<SwitchAssignment>>,
}

impl Walk {
    pub fn new(content: Arc<StudyContent>, config: StudyConfig, seed: u64) -> Walk {
        let now = Millis(1_700_000_000_000 + seed * 1000);
        let pseudonym = Pseudonym(u128::from(seed) * 0x9e37_79b9_7f4a_7c15 + 1);
        let (session, event) =
            Session::create(content.clone(), config, "main", pseudonym, seed, now).unwrap();
        let solutions = content
            .qualification
            .iter()
            .chain(content.experiment.iter().flat_map(|g| &g.tasks))
            .map(|t| {
                (
                    t.id.clone(),
                    content.circuit(&t.id).unwrap().solutions(20).unwrap(),
                )
            })
            .collect();
        let mut w = Walk {
            session,
            log: Vec::new(),
            now,
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x5eed),
            solutions,
        };
        w.record(event);
        w
    }

    fn record(&mut self, event: Event) {
        self.log.push(EventRecord {
            seq: self.log.len() as u64,
            server_time: self.now,
            pseudonym: self.session.state().pseudonym,
            batch: None,
            event,
        });
    }

    /// A config drawn for variety: test on or off, several time limits.
    pub fn random_config(rng: &mut impl Rng) -> StudyConfig {
        StudyConfig {
            zvt_enabled: rng.gen_bool(0.2),
            global_time_limit: [600, 1800, 4500][rng.gen_range(0..3)],
            ..StudyConfig::default()
        }
    }

    fn advance_time(&mut self) {
        let r: f64 = self.rng.gen();
        let ms = if r < 0.6 {
            self.rng.gen_range(0..3_000)
        } else if r < 0.9 {
            self.rng.gen_range(0..20_000)
        } else if r < 0.99 {
            self.rng.gen_range(0..200_000)
        } else {
            self.rng.gen_range(0..1_500_000)
        };
        self.now = self.now + Millis(ms);
    }

    /// Server-side timeout check, as done before every request.
    pub fn tick(&mut self) -> Result<(), String> {
        let pre = self.session.state().clone();
        let deadline = self.session.deadline();
        match self.session.tick(self.now) {
            Some(e) => {
                if pre.phase.is_ended() || self.now < deadline {
                    return Err(format!(
                        "timeout at {} before the deadline {deadline}",
                        self.now
                    ));
                }
                if self.session.phase()
                    != (Phase::Ended {
                        reason: EndReason::Timeout,
                    })
                {
                    return Err("timeout did not end the session".into());
                }
                self.record(e);
            }
            None => {
                if !pre.phase.is_ended() && self.now >= deadline {
                    return Err("deadline passed without a timeout".into());
                }
            }
        }
        Ok(())
    }

    fn random_stroke(&mut self) -> Stroke {
        let n = if self.rng.gen_bool(0.05) {
            70
        } else {
            self.rng.gen_range(0..10)
        };
        Stroke {
            tool: [
                DrawTool::Red,
                DrawTool::Green,
                DrawTool::Blue,
                DrawTool::Eraser,
            ][self.rng.gen_range(0..4)],
            points: n as u32 * 3,
            bbox: BoundingBox {
                x0: 0,
                y0: 0,
                x1: 10,
                y1: 10,
            },
            path: (0..n).map(|i| [i, i]).collect(),
        }
    }

    fn any_command(&mut self) -> Command {
        match self.rng.gen_range(0..10) {
            0 => Command::StartZvtMatrix,
            1 => Command::ZvtClick {
                number: self.rng.gen_range(0..95),
            },
            2 => Command::NavigateTutorial {
                page: self.rng.gen_range(0..14),
            },
            3 => Command::Next,
            4 => Command::RevisitTutorial,
            5 => Command::Toggle {
                switch: ["s1", "s2", "s3", "b1", "x"][self.rng.gen_range(0..5)].into(),
            },
            6 => Command::Confirm,
            7 => Command::Skip,
            8 => Command::Draw {
                stroke: self.random_stroke(),
            },
            _ => Command::ClearDrawing,
        }
    }

    pub fn choose(&mut self) -> Command {
        let st = self.session.state().clone();
        let r: f64 = self.rng.gen();
        match st.phase {
            Phase::PsychometricTest if r < 0.9 => match st.zvt.active {
                None => Command::StartZvtMatrix,
                Some(_) if r < 0.86 => Command::ZvtClick {
                    number: st.zvt.next_expected,
                },
                Some(_) => Command::ZvtClick {
                    number: self.rng.gen_range(1..25),
                },
            },
            Phase::PsychometricTest if r < 0.95 => Command::Next,
            Phase::Tutorial if r < 0.55 => Command::NavigateTutorial {
                page: if r < 0.45 {
                    st.tutorial.furthest + 1
                } else {
                    self.rng.gen_range(0..12)
                },
            },
            Phase::Tutorial if r < 0.85 => Command::Next,
            Phase::Tutorial if r < 0.92 => {
                let page = &self.session.content().tutorial.pages[st.tutorial.page];
                match &page.circuit {
                    Some(net) => {
                        let ins = net.inputs();
                        if ins.is_empty() {
                            Command::Toggle {
                                switch: "s1".into(),
                            }
                        } else {
                            Command::Toggle {
                                switch: ins[self.rng.gen_range(0..ins.len())].id.clone(),
                            }
                        }
                    }
                    None => Command::Toggle {
                        switch: "s1".into(),
                    },
                }
            }
            Phase::Qualification { .. } | Phase::Experiment { .. } => {
                let cur = st.current.clone().unwrap();
                if cur.solved {
                    return if r < 0.85 {
                        Command::Next
                    } else {
                        self.any_command()
                    };
                }
                if r < 0.4 {
                    let target = self.solutions[&cur.task][0].clone();
                    let pick = match cur
                        .switches
                        .0
                        .iter()
                        .zip(&target.0)
                        .position(|(a, b)| a != b)
                    {
                        Some(i) if self.rng.gen_bool(0.7) => i,
                        _ => self.rng.gen_range(0..cur.switches.len()),
                    };
                    let task = self.session.content().task(&cur.task).unwrap();
                    Command::Toggle {
                        switch: task.netlist.inputs()[pick].id.clone(),
                    }
                } else if r < 0.65 {
                    Command::Confirm
                } else if r < 0.75 {
                    Command::Skip
                } else if r < 0.77 {
                    Command::RevisitTutorial
                } else if r < 0.82 {
                    Command::Draw {
                        stroke: self.random_stroke(),
                    }
                } else if r < 0.85 {
                    Command::ClearDrawing
                } else {
                    self.any_command()
                }
            }
            _ => self.any_command(),
        }
    }

    /// Advances time, ticks, and applies one random command, checking the
    /// transition.
    pub fn step(&mut self) -> Result<(), String> {
        self.advance_time();
        self.tick()?;
        let cmd = self.choose();
        self.apply_checked(&cmd)
    }

    pub fn apply_checked(&mut self, cmd: &Command) -> Result<(), String> {
        let pre = self.session.state().clone();
        let result = self.session.apply(cmd, self.now);
        let post = self.session.state().clone();
        check_transition(self.session.content(), &pre, cmd, self.now, &result, &post)?;
        if let Ok(e) = result {
            self.record(e);
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// scripted sessions

/// A session driven step by step by a test script.
pub struct Drive {
    pub session: Session,
    pub now: Millis,
    pub log: Vec<EventRecord>,
}

impl Drive {
    pub fn new(content: Arc<StudyContent>, config: StudyConfig, seed: u64) -> Drive {
        let now = Millis(1_700_000_000_000);
        let (session, event) = Session::create(
            content,
            config,
            "main",
            Pseudonym(u128::from(seed) + 7),
            seed,
            now,
        )
        .unwrap();
        let mut d = Drive {
            session,
            now,
            log: Vec::new(),
        };
        d.record(event);
        d
    }

    fn record(&mut self, event: Event) {
        self.log.push(EventRecord {
            seq: self.log.len() as u64,
            server_time: self.now,
            pseudonym: self.session.state().pseudonym,
            batch: None,
            event,
        });
    }

    pub fn wait(&mut self, ms: u64) {
        self.now = self.now + Millis(ms);
    }

    pub fn tick(&mut self) -> Option<Event> {
        let e = self.session.tick(self.now)?;
        self.record(e.clone());
        Some(e)
    }

    pub fn cmd(&mut self, c: Command) -> Result<Event, EngineError> {
        let e = self.session.apply(&c, self.now)?;
        self.record(e.clone());
        Ok(e)
    }

    pub fn current(&self) -> &circuitlab_core::engine::TaskProgress {
        self.session
            .state()
            .current
            .as_ref()
            .expect("a task is shown")
    }

    pub fn solution(&self) -> SwitchAssignment {
        let c = self
            .session
            .content()
            .circuit(&self.current().task)
            .unwrap();
        c.solutions(20).unwrap().remove(0)
    }

    pub fn wrong(&self) -> SwitchAssignment {
        let c = self
            .session
            .content()
            .circuit(&self.current().task)
            .unwrap();
        let n = c.switch_count();
        (0..1 << n)
            .map(|i| SwitchAssignment::from_index(i, n))
            .find(|a| !c.check(a).unwrap().correct)
            .unwrap()
    }

    pub fn set(&mut self, target: &SwitchAssignment) {
        let task = self
            .session
            .content()
            .task(&self.current().task)
            .unwrap()
            .clone();
        let ids: Vec<String> = task.netlist.inputs().iter().map(|e| e.id.clone()).collect();
        for (i, id) in ids.iter().enumerate() {
            if self.current().switches.0[i] != target.0[i] {
                self.cmd(Command::Toggle { switch: id.clone() }).unwrap();
            }
        }
    }

    /// Sets `target`, waits out any delay, and confirms.
    pub fn submit(&mut self, target: &SwitchAssignment) -> Event {
        self.set(target);
        let ready = self.current().next_confirm_allowed;
        if self.now < ready {
            self.now = ready;
        }
        self.cmd(Command::Confirm).unwrap()
    }

    pub fn fail(&mut self) -> Event {
        let w = self.wrong();
        self.submit(&w)
    }

    pub fn solve_and_next(&mut self) -> Event {
        let s = self.solution();
        self.submit(&s);
        self.cmd(Command::Next).unwrap()
    }

    pub fn through_zvt(&mut self, step_ms: u64) {
        while !self.session.state().zvt.is_finished() {
            self.cmd(Command::StartZvtMatrix).unwrap();
            let z = &self.session.state().zvt;
            let max = z.slots[z.active.unwrap()].max;
            for n in 1..=max {
                self.wait(step_ms);
                self.cmd(Command::ZvtClick { number: n }).unwrap();
            }
        }
        self.cmd(Command::Next).unwrap();
    }

    pub fn through_tutorial(&mut self) {
        let pages = self.session.content().tutorial.pages.len();
        for p in 1..pages {
            self.wait(1000);
            self.cmd(Command::NavigateTutorial { page: p }).unwrap();
        }
        self.cmd(Command::Next).unwrap();
    }
}
