//! Acceptance checks. Each criterion runs at its stated tolerance and time
//! budget and prints one PASS or FAIL line.

mod common;

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command as Process, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use circuitlab::analysis::load_records;
use circuitlab::server::{
    router, BatchRequest, BatchResponse, CommandResponse, CommandResult, CreatedSession, Host,
    ManualClock,
};
use circuitlab::store::{read_log, Store};
use circuitlab_core::analytics::metrics::{brute_force_flag, derive_metrics, zvt_from_log};
use circuitlab_core::analytics::stats;
use circuitlab_core::circuit::{
    DisplayKind, Element, ElementKind, GateFn, GateTruth, Netlist, SwitchAssignment, Wire,
};
use circuitlab_core::engine::{
    Command, EndReason, EngineError, Phase, Session, StudyConfig, StudyContent,
};
use circuitlab_core::event::{Event, EventRecord};
use circuitlab_core::nonlinearity::nonlinearity;
use circuitlab_core::reference::REFERENCE_TASKS;
use circuitlab_core::task::{Group, Library, TaskGroup};
use circuitlab_core::time::{Millis, Pseudonym};
use circuitlab_core::zvt::{ScorePolicy, ZvtKind, ZvtMatrix};

use common::*;

type Check = fn() -> Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn main() -> ExitCode {
    let criteria: [(&str, u64, Check); 10] = [
        ("library fidelity", 5, library_fidelity),
        ("nonlinearity", 10, nonlinearity_spectrum),
        ("circuit oracle", 10, circuit_oracle),
        ("study flow", 60, study_flow),
        ("redaction", 60, redaction),
        ("replay", 60, replay),
        ("brute force", 5, brute_force),
        ("zvt", 5, zvt_timing),
        ("statistics", 30, statistics),
        ("end to end", 300, end_to_end),
    ];
    let mut failed = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > Duration::from_secs(budget) => {
                Err(format!("{detail}; took {elapsed:.2?}, budget {budget} s"))
            }
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {name} ({elapsed:.2?}): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name} ({elapsed:.2?}): {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}

// ---------------------------------------------------------------------------

fn library_fidelity() -> Result<String, String> {
    let out = Process::new(env!("CARGO_BIN_EXE_taskctl"))
        .arg("validate")
        .arg(data_dir().join("library"))
        .output()
        .map_err(|e| e.to_string())?;
    let text = String::from_utf8_lossy(&out.stdout);
    ensure!(out.status.success(), "taskctl validate failed:\n{text}");
    ensure!(text.contains("all tasks valid"), "no summary line");
    let checked = text.matches("reference row: checked").count();
    ensure!(checked == 16, "{checked} reference rows checked");

    // independent comparison: counts from the netlist, solutions by the naive evaluator
    let lib = shipped_library();
    ensure!(lib.tasks().count() == REFERENCE_TASKS.len(), "library size");
    for r in &REFERENCE_TASKS {
        let t = lib.task(r.id).ok_or(format!("{} missing", r.id))?;
        ensure!(t.group == r.group, "{} group", r.id);
        let count = |f: fn(&ElementKind) -> bool| {
            t.netlist.elements.iter().filter(|e| f(&e.kind)).count() as u32
        };
        let got = (
            count(|k| *k == ElementKind::AndGate),
            count(|k| *k == ElementKind::OrGate),
            count(|k| *k == ElementKind::NotGate),
            count(|k| {
                matches!(
                    k,
                    ElementKind::CamouflagedGate(_) | ElementKind::CovertGate { .. }
                )
            }),
        );
        ensure!(
            got == (r.and, r.or, r.inverters, r.camouflaged),
            "{} gate counts {got:?}",
            r.id
        );
        ensure!(got.0 + got.1 + got.2 + got.3 == r.total, "{} total", r.id);
        ensure!(
            t.target_outputs.to_string() == r.target,
            "{} target {}",
            r.id,
            t.target_outputs
        );
        let n = t.netlist.switch_count();
        let mut sols = Vec::new();
        for i in 0..1 << n {
            let a = SwitchAssignment::from_index(i, n);
            let (outs, _) = naive_evaluate(&t.netlist, &a);
            ensure!(outs.len() as u32 == r.outputs, "{} output count", r.id);
            let target: Vec<bool> = r.target.chars().map(|c| c == '1').collect();
            if outs == target {
                sols.push(a.to_string());
            }
        }
        let mut expect: Vec<String> = r.solutions.iter().map(|s| s.to_string()).collect();
        expect.sort();
        sols.sort();
        ensure!(sols == expect, "{} solutions {sols:?}", r.id);
    }
    Ok("16 tasks match gate counts, outputs, targets and solution sets".into())
}

/// Hamming distance to the nearest affine function, by enumeration.
fn affine_distance(table: &[bool]) -> u32 {
    let len = table.len();
    (0..len)
        .flat_map(|a| [false, true].map(move |c| (a, c)))
        .map(|(a, c)| {
            (0..len)
                .filter(|&x| ((((a & x).count_ones() % 2) == 1) ^ c) != table[x])
                .count() as u32
        })
        .min()
        .unwrap()
}

fn nonlinearity_spectrum() -> Result<String, String> {
    let table =
        |n: u32, bits: u64| -> Vec<bool> { (0..1usize << n).map(|i| bits >> i & 1 == 1).collect() };
    for bits in 0..256 {
        let t = table(3, bits);
        ensure!(
            nonlinearity(&t).unwrap() == affine_distance(&t),
            "3-variable function {bits:08b}"
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xa11);
    for _ in 0..1000 {
        let bits = u64::from(rng.gen::<u16>());
        let t = table(4, bits);
        ensure!(
            nonlinearity(&t).unwrap() == affine_distance(&t),
            "4-variable function {bits:016b}"
        );
    }
    Ok("256 three-variable and 1000 four-variable functions exact".into())
}

/// One or two switches into a covert gate whose output drives a lamp.
fn covert_circuit(displayed: GateFn, truth: GateTruth) -> Netlist {
    let mut elements = Vec::new();
    let mut wires = Vec::new();
    for i in 0..displayed.arity() {
        let (b, s) = (format!("b{i}"), format!("s{i}"));
        elements.push(Element::new(b.clone(), ElementKind::Battery, 0, i as i32));
        elements.push(Element::new(s.clone(), ElementKind::Switch, 1, i as i32));
        wires.push(Wire::new(b, s.clone(), 0));
        wires.push(Wire::new(s, "g", i as u8));
    }
    elements.push(Element::new(
        "g",
        ElementKind::CovertGate { displayed, truth },
        2,
        0,
    ));
    elements.push(Element::new("l", ElementKind::Lamp, 3, 0));
    wires.push(Wire::new("g", "l", 0));
    Netlist::new(elements, wires)
}

fn circuit_oracle() -> Result<String, String> {
    let lib = shipped_library();
    let mut evaluations = 0;
    for t in lib.tasks() {
        let c = t.netlist.compile().map_err(|e| e.to_string())?;
        for i in 0..8 {
            let a = SwitchAssignment::from_index(i, 3);
            let (outs, wires) = naive_evaluate(&t.netlist, &a);
            let st = c.evaluate(&a).map_err(|e| e.to_string())?;
            ensure!(st.output_levels == outs, "{} outputs at {a}", t.id);
            ensure!(st.wire_levels == wires, "{} wire levels at {a}", t.id);
            evaluations += 1;
        }
    }

    let fns = [GateFn::And, GateFn::Or, GateFn::Not];
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0de);
    let cases = 10_000;
    for case in 0..cases {
        let displayed = fns[rng.gen_range(0..3)];
        let ports = displayed.arity();
        let actual = loop {
            let f = fns[rng.gen_range(0..3)];
            if f.arity() <= ports {
                break f;
            }
        };
        let mut effective: Vec<u8> = (0..ports as u8).collect();
        rand::seq::SliceRandom::shuffle(effective.as_mut_slice(), &mut rng);
        effective.truncate(actual.arity());
        let net = covert_circuit(displayed, GateTruth::new(actual, effective.clone()));
        let c = net.compile().map_err(|e| e.to_string())?;
        let a = SwitchAssignment((0..ports).map(|_| rng.gen()).collect());
        let base = c.evaluate(&a).map_err(|e| e.to_string())?.output_levels[0];
        let ins: Vec<bool> = effective.iter().map(|&p| a.0[p as usize]).collect();
        ensure!(
            base == actual.apply(&ins),
            "case {case}: output differs from the hidden function"
        );
        ensure!(
            base == naive_evaluate(&net, &a).0[0],
            "case {case}: naive evaluator"
        );
        for p in (0..ports).filter(|p| !effective.contains(&(*p as u8))) {
            let mut b = a.clone();
            b.0[p] = !b.0[p];
            let flipped = c.evaluate(&b).map_err(|e| e.to_string())?.output_levels[0];
            ensure!(
                flipped == base,
                "case {case}: flipping port {p} changed the output"
            );
        }
    }
    Ok(format!(
        "{evaluations} task evaluations, {cases} covert cases"
    ))
}

// ---------------------------------------------------------------------------

fn shipped_content() -> (Arc<StudyContent>, StudyConfig) {
    let s = shipped_study();
    (s.content, s.config)
}

fn no_zvt() -> StudyConfig {
    StudyConfig {
        zvt_enabled: false,
        ..shipped_content().1
    }
}

/// Solves experiment tasks until one of `group` is shown.
fn drive_to_group(d: &mut Drive, group: Group) {
    d.through_tutorial();
    while matches!(d.session.phase(), Phase::Qualification { .. }) {
        d.wait(5_000);
        d.solve_and_next();
    }
    while d.current().group != group {
        d.wait(5_000);
        d.solve_and_next();
    }
}

fn study_flow() -> Result<String, String> {
    let (content, config) = shipped_content();
    ensure!(
        config.global_time_limit == 4500,
        "global limit {}",
        config.global_time_limit
    );

    // second failed qualification attempt leads back to the tutorial
    let mut d = Drive::new(content.clone(), no_zvt(), 1);
    d.through_tutorial();
    let Event::ConfirmSubmitted { requalify, .. } = d.fail() else {
        return Err("no verdict".into());
    };
    ensure!(
        !requalify && d.session.phase() == (Phase::Qualification { task: 0 }),
        "first failure"
    );
    let Event::ConfirmSubmitted { requalify, .. } = d.fail() else {
        return Err("no verdict".into());
    };
    ensure!(
        requalify && d.session.phase() == Phase::Tutorial,
        "second failure stays in qualification"
    );
    d.cmd(Command::Next).map_err(|e| e.to_string())?;
    ensure!(
        d.session.phase() == (Phase::Qualification { task: 0 }),
        "qualification restarts"
    );

    // skip after four failures; delays non-decreasing; score floor
    let mut d = Drive::new(content.clone(), no_zvt(), 2);
    drive_to_group(&mut d, Group::D);
    let mut delays = Vec::new();
    for k in 1..=12u32 {
        ensure!(
            d.session.skip_eligible(d.now) == (k > 4),
            "skip eligibility after {} failures",
            k - 1
        );
        let Event::ConfirmSubmitted {
            retry_at, score, ..
        } = d.fail()
        else {
            return Err("no verdict".into());
        };
        delays.push((retry_at.unwrap() - d.now).0 / 1000);
        ensure!(
            score == 100u32.saturating_sub(10 * k),
            "score {score} after {k} failures"
        );
    }
    ensure!(
        delays == [2, 4, 8, 16, 30, 30, 30, 30, 30, 30, 30, 30],
        "delays {delays:?}"
    );
    ensure!(delays.windows(2).all(|w| w[0] <= w[1]), "delays decrease");
    ensure!(d.current().score == 0, "score floor");

    // group time limits
    for (group, secs) in [
        (Group::A, 180),
        (Group::B, 600),
        (Group::C, 720),
        (Group::D, 900),
    ] {
        let mut d = Drive::new(content.clone(), no_zvt(), 3);
        drive_to_group(&mut d, group);
        let shown = d.current().first_view;
        ensure!(
            !d.session.skip_eligible(shown + Millis(secs * 1000 - 1)),
            "{group} eligible before {secs} s"
        );
        ensure!(
            d.session.skip_eligible(shown + Millis::from_secs(secs)),
            "{group} not eligible at {secs} s"
        );
        d.now = shown + Millis::from_secs(secs);
        d.cmd(Command::Skip).map_err(|e| format!("{group}: {e}"))?;
    }

    // global time limit
    let mut d = Drive::new(content.clone(), no_zvt(), 4);
    d.through_tutorial();
    let start = d.session.state().session_start;
    d.now = start + Millis(4_499_999);
    ensure!(d.tick().is_none(), "timeout before 4500 s");
    d.cmd(Command::RevisitTutorial).map_err(|e| e.to_string())?;
    d.now = start + Millis::from_secs(4500);
    ensure!(
        d.cmd(Command::Next) == Err(EngineError::Expired),
        "command accepted at 4500 s"
    );
    ensure!(d.tick() == Some(Event::Timeout), "no timeout at 4500 s");
    ensure!(
        d.session.phase()
            == (Phase::Ended {
                reason: EndReason::Timeout
            }),
        "not ended"
    );

    // random walks
    let walks = 10_000;
    let mut steps = 0;
    let mut ended = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for seed in 0..walks {
        let mut w = Walk::new(content.clone(), Walk::random_config(&mut rng), seed);
        let depth = rng.gen_range(1..=200);
        for _ in 0..depth {
            w.step().map_err(|e| format!("walk {seed}: {e}"))?;
            steps += 1;
        }
        ended += usize::from(w.session.phase().is_ended());
    }
    Ok(format!(
        "fixed scenarios hold; {walks} walks, {steps} steps, {ended} ended, no illegal transition"
    ))
}

// ---------------------------------------------------------------------------

/// Qualification tasks plus the two camouflaged group D tasks and a covert
/// variant of each, so every experiment task hides a gate.
fn obfuscated_content() -> (Arc<StudyContent>, Vec<(String, String, DisplayKind)>) {
    let lib = shipped_library();
    let mut hidden = Vec::new();
    let mut tasks = Vec::new();
    for (i, t) in lib.group(Group::D).unwrap().tasks.iter().enumerate() {
        let mut covert = t.clone();
        covert.id = format!("D{}", i + 8);
        for e in &mut covert.netlist.elements {
            if let ElementKind::CamouflagedGate(truth) = &e.kind {
                let displayed = if i % 2 == 0 { GateFn::Or } else { GateFn::And };
                e.kind = ElementKind::CovertGate {
                    displayed,
                    truth: truth.clone(),
                };
                hidden.push((covert.id.clone(), e.id.clone(), e.kind.display()));
            }
        }
        for e in &t.netlist.elements {
            if e.kind.truth().is_some() {
                hidden.push((t.id.clone(), e.id.clone(), e.kind.display()));
            }
        }
        tasks.push(t.clone());
        tasks.push(covert);
    }
    let library = Library {
        groups: vec![
            lib.group(Group::Qualification).unwrap().clone(),
            TaskGroup {
                group: Group::D,
                tasks,
            },
        ],
    };
    let tutorial = shipped_study().content.tutorial.clone();
    (
        Arc::new(StudyContent::new(&library, tutorial, Vec::new()).unwrap()),
        hidden,
    )
}

const FORBIDDEN: [&str; 6] = [
    "actual",
    "effective",
    "truth",
    "camouflag",
    "covert",
    "hidden",
];

fn redaction() -> Result<String, String> {
    let (content, hidden) = obfuscated_content();
    ensure!(hidden.len() == 4, "expected four obfuscated gates");
    let mut payloads = 0;
    let mut seed = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    while payloads < 1000 {
        seed += 1;
        let mut w = Walk::new(
            content.clone(),
            StudyConfig {
                zvt_enabled: false,
                ..StudyConfig::default()
            },
            seed,
        );
        for _ in 0..400 {
            if w.session.phase().is_ended() {
                break;
            }
            w.step()?;
            if !matches!(w.session.phase(), Phase::Experiment { .. }) {
                continue;
            }
            let view = w.session.view(w.now);
            let last = w.log.last().unwrap().clone();
            let response = BatchResponse {
                batch: rng.gen(),
                duplicate: false,
                results: vec![CommandResult::Applied {
                    seq: last.seq,
                    event: last.event,
                }],
                view: view.clone(),
            };
            let bytes = serde_json::to_vec(&response).unwrap();
            let text = String::from_utf8(bytes).unwrap().to_lowercase();
            for term in FORBIDDEN {
                ensure!(!text.contains(term), "payload contains {term}: {text}");
            }
            let task = view.task.as_ref().unwrap();
            for (tid, gate, shown) in &hidden {
                if *tid != task.id {
                    continue;
                }
                let el = task
                    .circuit
                    .elements
                    .iter()
                    .find(|e| e.id == *gate)
                    .unwrap();
                let json = serde_json::to_value(el).unwrap();
                ensure!(el.kind == *shown, "{tid}/{gate} shown as {:?}", el.kind);
                ensure!(
                    json.as_object().unwrap().len() == 5,
                    "{tid}/{gate} has extra fields: {json}"
                );
            }
            if !task.solved {
                ensure!(
                    task.circuit.wires.iter().all(|w| w.powered.is_none()),
                    "wire levels shown for an open task"
                );
            }
            payloads += 1;
        }
    }
    Ok(format!(
        "{payloads} payloads from {seed} sessions, zero hits"
    ))
}

// ---------------------------------------------------------------------------

fn replay() -> Result<String, String> {
    let (content, _) = shipped_content();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let store = Store::open(dir.path()).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut events = 0;
    for seed in 0..100 {
        let mut w = Walk::new(content.clone(), Walk::random_config(&mut rng), 1000 + seed);
        for _ in 0..rng.gen_range(50..400) {
            w.step()?;
        }
        let p = w.session.state().pseudonym;
        let mut log = store.create_log(p).map_err(|e| e.to_string())?;
        for r in &w.log {
            log.append(r).map_err(|e| e.to_string())?;
        }
        drop(log);
        let records = read_log(&store.log_path(p))
            .map_err(|e| e.to_string())?
            .records;
        ensure!(records == w.log, "session {seed}: log changed on disk");
        let a = Session::replay(content.clone(), &records)
            .map_err(|e| format!("session {seed}: {e}"))?;
        let b = Session::replay(content.clone(), &records)
            .map_err(|e| format!("session {seed}: {e}"))?;
        ensure!(
            a.state() == w.session.state(),
            "session {seed}: replayed state differs"
        );
        ensure!(b.state() == a.state(), "session {seed}: replays differ");
        let m1 = derive_metrics(&records).map_err(|e| e.to_string())?;
        let m2 = derive_metrics(&w.log).map_err(|e| e.to_string())?;
        ensure!(m1 == m2, "session {seed}: metrics differ");
        events += records.len();
    }
    Ok(format!(
        "100 sessions, {events} records, identical state and metrics"
    ))
}

fn brute_force() -> Result<String, String> {
    let secs = |v: &[u64]| v.iter().map(|&s| Millis::from_secs(s)).collect::<Vec<_>>();
    ensure!(
        brute_force_flag(&secs(&[0, 5, 10, 15, 20, 25, 30])),
        "7 confirms in 30 s"
    );
    ensure!(!brute_force_flag(&secs(&[0, 30])), "2 confirms 30 s apart");

    // a session with a one-second delay can confirm seven times in 30 s
    let (content, _) = shipped_content();
    let config = StudyConfig {
        delay_schedule: vec![1],
        ..no_zvt()
    };
    let mut d = Drive::new(content, config, 9);
    drive_to_group(&mut d, Group::A);
    let first = d.now;
    for _ in 0..6 {
        d.wait(4_000);
        d.fail();
    }
    d.now = first + Millis::from_secs(30);
    let sol = d.solution();
    let Event::ConfirmSubmitted { correct: true, .. } = d.submit(&sol) else {
        return Err("final confirm not correct".into());
    };
    let id = d.current().task.clone();
    let m = derive_metrics(&d.log).map_err(|e| e.to_string())?;
    let row = m.iter().find(|r| r.task == id).unwrap();
    ensure!(
        row.attempts == 7 && row.brute_forced,
        "task not flagged: {row:?}"
    );
    ensure!(
        !row.solved && row.time_in_task.is_none(),
        "flagged task reported solved"
    );
    Ok("flag rule and unsolved reporting hold".into())
}

fn zvt_timing() -> Result<String, String> {
    let (content, config) = shipped_content();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut runs = 0;
    for round in 0..60 {
        let mut d = Drive::new(content.clone(), config.clone(), round);
        let mut expected = Vec::new();
        for m in 0..d.session.state().zvt.slots.len() {
            d.wait(rng.gen_range(0..5_000));
            d.cmd(Command::StartZvtMatrix).unwrap();
            let slot = d.session.state().zvt.slots[m];
            // the clock starts at the click on 1
            d.wait(rng.gen_range(0..3_000));
            let mut total = 0;
            for n in 1..=slot.max {
                if rng.gen_bool(0.05) {
                    d.wait(300);
                    if n > 1 {
                        total += 300;
                    }
                    let _ = d.cmd(Command::ZvtClick { number: n + 1 });
                }
                let gap = if n == 1 {
                    0
                } else {
                    125 * rng.gen_range(1..60)
                };
                d.wait(gap);
                total += gap;
                d.cmd(Command::ZvtClick { number: n }).unwrap();
            }
            if slot.kind == ZvtKind::Test {
                expected.push(total);
            }
        }
        let z = zvt_from_log(&d.log).ok_or("no test state in log")?;
        let score = z
            .score(&ScorePolicy::default())
            .map_err(|e| e.to_string())?;
        let got: Vec<u64> = score.matrix_times.iter().map(|t| t.0).collect();
        ensure!(
            got == expected,
            "round {round}: times {got:?}, expected {expected:?}"
        );
        let total: u64 = expected.iter().sum();
        ensure!(
            score.excluded == (total > 600_000),
            "round {round}: exclusion"
        );
        if !score.excluded {
            let mean = (expected[0] + expected[1] + expected[2]) as f64 / 3000.0;
            ensure!(score.processing_speed == Some(mean), "round {round}: speed");
        }
        runs += 1;
    }
    // the boundary, and an exactly representable mean
    let policy = ScorePolicy::default();
    let at = circuitlab_core::zvt::score_times(&[Millis(150_000); 4], &policy).unwrap();
    let over = circuitlab_core::zvt::score_times(
        &[
            Millis(150_000),
            Millis(150_000),
            Millis(150_000),
            Millis(150_001),
        ],
        &policy,
    )
    .unwrap();
    ensure!(!at.excluded && over.excluded, "600 s boundary");
    let s = circuitlab_core::zvt::score_times(
        &[
            Millis(40_000),
            Millis(50_375),
            Millis(60_000),
            Millis(10_000),
        ],
        &policy,
    )
    .unwrap();
    ensure!(
        s.processing_speed == Some(50.125),
        "mean {:?}",
        s.processing_speed
    );
    let _ = ZvtMatrix::generate("x", ZvtKind::Test, 1);
    Ok(format!("{runs} logged runs exact to the ms"))
}

// ---------------------------------------------------------------------------

/// Absolute tolerance near zero, relative for large values.
fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs().max(1.0)
}

fn statistics() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let sample = |rng: &mut ChaCha8Rng, n: usize| -> Vec<f64> {
        if rng.gen_bool(0.5) {
            (0..n).map(|_| f64::from(rng.gen_range(0..6))).collect()
        } else {
            (0..n).map(|_| rng.gen_range(-50.0..50.0)).collect()
        }
    };
    let mut compared = 0;
    let mut i = 0;
    while compared < 1000 {
        i += 1;
        let n = rng.gen_range(3..15);
        let x = sample(&mut rng, n);
        let y = sample(&mut rng, n);
        if o_var(&x) == 0.0 || o_var(&y) == 0.0 {
            ensure!(
                stats::pearson(&x, &y).is_err(),
                "dataset {i}: constant column accepted"
            );
            continue;
        }
        let pr = stats::pearson(&x, &y).map_err(|e| e.to_string())?;
        ensure!(close(pr, o_pearson(&x, &y)), "dataset {i}: pearson");
        if o_var(&o_ranks(&x)) > 0.0 && o_var(&o_ranks(&y)) > 0.0 {
            let sp = stats::spearman(&x, &y).map_err(|e| e.to_string())?;
            ensure!(close(sp, o_spearman(&x, &y)), "dataset {i}: spearman");
            let kt = stats::kendall_tau_b(&x, &y).map_err(|e| e.to_string())?;
            ensure!(
                close(kt, o_kendall_b(&x, &y)),
                "dataset {i}: kendall {kt} vs {}",
                o_kendall_b(&x, &y)
            );
        }
        let z = stats::zscores(&x).map_err(|e| e.to_string())?;
        ensure!(
            z.iter().zip(o_zscores(&x)).all(|(a, b)| close(*a, b)),
            "dataset {i}: zscores"
        );

        let k = rng.gen_range(2..6);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| sample(&mut rng, k)).collect();
        let totals: Vec<f64> = rows.iter().map(|r| r.iter().sum()).collect();
        if o_var(&totals) > 0.0 {
            let a = stats::cronbach_alpha(&rows).map_err(|e| e.to_string())?;
            ensure!(
                close(a, o_alpha(&rows)),
                "dataset {i}: alpha {a} vs {} on {rows:?}",
                o_alpha(&rows)
            );
        }

        let groups: Vec<Vec<f64>> = (0..rng.gen_range(2..5))
            .map(|_| {
                let m = rng.gen_range(2..8);
                sample(&mut rng, m)
            })
            .collect();
        if groups.iter().all(|g| o_var(g) > 0.0) {
            let w = stats::welch_anova(&groups).map_err(|e| e.to_string())?;
            let (f, d1, d2) = o_welch(&groups);
            ensure!(
                close(w.f, f) && close(w.df_between, d1) && close(w.df_within, d2),
                "dataset {i}: welch"
            );
        }
        compared += 1;

        // identities
        ensure!(
            stats::pearson(&x, &x).unwrap() == 1.0,
            "dataset {i}: r(x, x)"
        );
        let dup: Vec<Vec<f64>> = x.iter().map(|&v| vec![v; k]).collect();
        ensure!(
            stats::cronbach_alpha(&dup).unwrap() == 1.0,
            "dataset {i}: alpha of duplicated items"
        );
        let m = o_mean(&x);
        let mirrored: Vec<f64> = x.iter().map(|v| 2.0 * m - v).collect();
        let shifted: Vec<f64> = x.iter().rev().copied().collect();
        let eq = stats::welch_anova(&[x.clone(), shifted.clone(), mirrored.clone()]).unwrap();
        if o_mean(&mirrored) == m && o_mean(&shifted) == m {
            ensure!(eq.f == 0.0, "dataset {i}: F on equal means is {}", eq.f);
        }
    }
    let eq = stats::welch_anova(&[
        vec![1.0, 2.0, 3.0],
        vec![3.0, 2.0, 1.0],
        vec![0.0, 2.0, 4.0],
    ])
    .unwrap();
    ensure!(eq.f == 0.0, "F on equal means");
    Ok(format!("{compared} datasets within 1e-9; identities exact"))
}

// ---------------------------------------------------------------------------

struct Client {
    http: reqwest::Client,
    base: String,
    clock: Arc<ManualClock>,
    solutions: Arc<HashMap<String, SwitchAssignment>>,
    batch: u64,
}

impl Client {
    async fn post<T: serde::de::DeserializeOwned>(
        &self,
        path: &str,
        body: Option<&BatchRequest>,
    ) -> Result<(u16, T), String> {
        self.clock.advance(Millis(20));
        let mut req = self.http.post(format!("{}{path}", self.base));
        if let Some(b) = body {
            req = req.json(b);
        }
        let resp = req.send().await.map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let body = resp.json::<T>().await.map_err(|e| format!("{path}: {e}"))?;
        Ok((status, body))
    }

    async fn batch(&mut self, p: Pseudonym, events: Vec<Command>) -> Result<BatchResponse, String> {
        self.batch += 1;
        let req = BatchRequest {
            batch: self.batch,
            events,
        };
        let (status, r): (u16, BatchResponse) = self
            .post(&format!("/session/{p}/events"), Some(&req))
            .await?;
        ensure!(status == 200, "batch status {status}");
        for res in &r.results {
            if let CommandResult::Rejected { error } = res {
                return Err(format!("command rejected: {error}"));
            }
        }
        Ok(r)
    }

    async fn run(mut self) -> Result<Pseudonym, String> {
        let (status, created): (u16, CreatedSession) =
            self.post("/study/main/session", None).await?;
        ensure!(status == 201, "create status {status}");
        let p = created.pseudonym;

        let mut view = created.view;
        while !view.zvt.as_ref().ok_or("no test view")?.finished {
            let r = self.batch(p, vec![Command::StartZvtMatrix]).await?;
            let CommandResult::Applied {
                event: Event::ZvtMatrixStarted { max, .. },
                ..
            } = &r.results[0]
            else {
                return Err("matrix did not start".into());
            };
            let clicks = (1..=*max)
                .map(|n| Command::ZvtClick { number: n })
                .collect();
            view = self.batch(p, clicks).await?.view;
        }
        view = self.batch(p, vec![Command::Next]).await?.view;

        let pages = view.tutorial.as_ref().ok_or("no tutorial view")?.pages;
        let mut nav: Vec<Command> = (1..pages)
            .map(|page| Command::NavigateTutorial { page })
            .collect();
        nav.push(Command::Next);
        view = self.batch(p, nav).await?.view;

        // concurrent batches on one session
        let first = self.batch + 1;
        let handles: Vec<_> = (0..8)
            .map(|i| {
                let http = self.http.clone();
                let url = format!("{}/session/{p}/events", self.base);
                let req = BatchRequest {
                    batch: first + i,
                    events: vec![Command::Draw {
                        stroke: circuitlab_core::event::Stroke {
                            tool: circuitlab_core::event::DrawTool::Red,
                            points: 2,
                            bbox: circuitlab_core::event::BoundingBox {
                                x0: 0,
                                y0: 0,
                                x1: 1,
                                y1: 1,
                            },
                            path: vec![[0, 0], [1, 1]],
                        },
                    }],
                };
                tokio::spawn(async move {
                    http.post(url)
                        .json(&req)
                        .send()
                        .await
                        .map(|r| r.status().as_u16())
                })
            })
            .collect();
        for h in handles {
            let status = h
                .await
                .map_err(|e| e.to_string())?
                .map_err(|e| e.to_string())?;
            ensure!(status == 200, "concurrent batch status {status}");
        }
        self.batch = first + 8;

        loop {
            match view.phase {
                Phase::Ended { reason } => {
                    ensure!(
                        reason == EndReason::Completed,
                        "session ended by {reason:?}"
                    );
                    return Ok(p);
                }
                Phase::Qualification { .. } | Phase::Experiment { .. } => {
                    let task = view.task.as_ref().ok_or("no task view")?;
                    let target = &self.solutions[&task.id];
                    let toggles: Vec<Command> = task
                        .circuit
                        .switches
                        .iter()
                        .zip(&target.0)
                        .filter(|(s, &want)| s.closed != want)
                        .map(|(s, _)| Command::Toggle {
                            switch: s.id.clone(),
                        })
                        .collect();
                    if !toggles.is_empty() {
                        self.batch(p, toggles).await?;
                    }
                    let (status, r): (u16, CommandResponse) =
                        self.post(&format!("/session/{p}/confirm"), None).await?;
                    ensure!(status == 200, "confirm status {status}");
                    let CommandResult::Applied {
                        event: Event::ConfirmSubmitted { correct: true, .. },
                        ..
                    } = r.result
                    else {
                        return Err(format!("confirm on {} not correct", task.id));
                    };
                    view = self.batch(p, vec![Command::Next]).await?.view;
                }
                other => return Err(format!("unexpected phase {other:?}")),
            }
        }
    }
}

fn end_to_end() -> Result<String, String> {
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    rt.block_on(async {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let store = Store::open(dir.path()).map_err(|e| e.to_string())?;
        let study = shipped_study();
        let content = study.content.clone();
        let solutions: HashMap<String, SwitchAssignment> = content
            .qualification
            .iter()
            .chain(content.experiment.iter().flat_map(|g| &g.tasks))
            .map(|t| {
                (
                    t.id.clone(),
                    content
                        .circuit(&t.id)
                        .unwrap()
                        .solutions(20)
                        .unwrap()
                        .remove(0),
                )
            })
            .collect();
        let solutions = Arc::new(solutions);
        let clock = Arc::new(ManualClock::new(Millis(1_700_000_000_000)));
        let studies = [("main".to_string(), study)].into_iter().collect();
        let host = Arc::new(Host::new(studies, store, clock.clone()));
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0")
            .await
            .map_err(|e| e.to_string())?;
        let base = format!("http://{}", listener.local_addr().unwrap());
        let app = router(host.clone());
        tokio::spawn(async move { axum::serve(listener, app).await });

        let http = reqwest::Client::new();
        let handles: Vec<_> = (0..50)
            .map(|_| {
                let c = Client {
                    http: http.clone(),
                    base: base.clone(),
                    clock: clock.clone(),
                    solutions: solutions.clone(),
                    batch: 0,
                };
                tokio::spawn(c.run())
            })
            .collect();
        let mut pseudonyms = Vec::new();
        for h in handles {
            pseudonyms.push(h.await.map_err(|e| e.to_string())??);
        }
        ensure!(
            host.session_count() == 50,
            "{} sessions",
            host.session_count()
        );

        for &p in &pseudonyms {
            let records: Vec<EventRecord> = read_log(&host.store().log_path(p))
                .map_err(|e| e.to_string())?
                .records;
            ensure!(
                records.iter().enumerate().all(|(i, r)| r.seq == i as u64),
                "{p}: sequence numbers not contiguous"
            );
            let draws = records
                .iter()
                .filter(|r| matches!(r.event, Event::DrawAction { .. }))
                .count();
            ensure!(
                (1..=8).contains(&draws),
                "{p}: {draws} concurrent draws logged"
            );
            let replayed =
                Session::replay(content.clone(), &records).map_err(|e| format!("{p}: {e}"))?;
            let live = host.session(&p.to_string()).map_err(|e| e.to_string())?;
            ensure!(
                replayed.state() == live.lock().await.session.state(),
                "{p}: replay differs"
            );
        }

        let records = load_records(&host.store().sessions_dir(), &ScorePolicy::default())
            .map_err(|e| e.to_string())?;
        ensure!(records.len() == 50, "{} analysed sessions", records.len());
        for r in &records {
            ensure!(
                r.tasks.len() == 12,
                "{}: {} task rows",
                r.pseudonym,
                r.tasks.len()
            );
            ensure!(
                r.tasks.iter().all(|t| t.solved),
                "{}: unsolved task",
                r.pseudonym
            );
            ensure!(
                r.completed && r.zvt.is_some(),
                "{}: incomplete record",
                r.pseudonym
            );
        }
        Ok("50 concurrent sessions completed; logs contiguous, replayable, 12 rows each".into())
    })
}
