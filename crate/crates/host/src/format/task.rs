//! Line-oriented task documents.
//!
//! ```text
//! META
//! id = A1
//! group = A
//! target = 1
//! solutions = 001, 100, 101
//! initial = 000
//!
//! ELEMENTS
//! b1 battery 0 1
//! s1 switch 1 1
//! g1 camouflaged 5 2 actual=or inputs=0,1
//! o1 lamp 9 2
//!
//! WIRES
//! b1 -> s1
//! s1 -> g1.0
//! g1 -> o1
//! ```
//!
//! `docs/task-format.md` is the full reference.

use std::collections::HashSet;
use std::fmt::Write as _;

use circuitlab_core::circuit::{Element, ElementKind, GateFn, GateTruth, Netlist, Wire};
use circuitlab_core::task::{InitialSwitches, Task};
use circuitlab_core::SwitchAssignment;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

fn err<T>(line: usize, column: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        line,
        column,
        message: message.into(),
    })
}

/// Whitespace-separated tokens with their 1-based columns.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        match (c.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push((s + 1, &line[s..i]));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Section {
    Meta,
    Elements,
    Wires,
}

struct Line<'a> {
    no: usize,
    text: &'a str,
}

#[derive(Default)]
struct Sections<'a> {
    meta: Option<Vec<Line<'a>>>,
    elements: Option<Vec<Line<'a>>>,
    wires: Option<Vec<Line<'a>>>,
}

fn split_sections(doc: &str) -> Result<Sections<'_>, ParseError> {
    let mut s = Sections::default();
    let mut current: Option<Section> = None;
    for (i, raw) in doc.lines().enumerate() {
        let no = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let header = match trimmed {
            "META" => Some(Section::Meta),
            "ELEMENTS" => Some(Section::Elements),
            "WIRES" => Some(Section::Wires),
            _ => None,
        };
        if let Some(h) = header {
            let slot = match h {
                Section::Meta => &mut s.meta,
                Section::Elements => &mut s.elements,
                Section::Wires => &mut s.wires,
            };
            if slot.is_some() {
                return err(no, 1, format!("section {trimmed} appears twice"));
            }
            *slot = Some(Vec::new());
            current = Some(h);
            continue;
        }
        let slot = match current {
            None => return err(no, 1, "content before the first section header"),
            Some(Section::Meta) => &mut s.meta,
            Some(Section::Elements) => &mut s.elements,
            Some(Section::Wires) => &mut s.wires,
        };
        slot.as_mut()
            .expect("section opened")
            .push(Line { no, text: raw });
    }
    Ok(s)
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn parse_gate_fn(line: usize, col: usize, s: &str) -> Result<GateFn, ParseError> {
    s.parse()
        .or_else(|_| err(line, col, format!("unknown gate function '{s}'")))
}

fn parse_ports(line: usize, col: usize, s: &str) -> Result<Vec<u8>, ParseError> {
    s.split(',')
        .map(|p| {
            p.parse::<u8>()
                .or_else(|_| err(line, col, format!("bad port list '{s}'")))
        })
        .collect()
}

fn parse_element(l: &Line<'_>) -> Result<Element, ParseError> {
    let toks = tokens(l.text);
    if toks.len() < 4 {
        let col = toks.last().map_or(1, |t| t.0);
        return err(l.no, col, "expected: <id> <kind> <x> <y> [attributes]");
    }
    let (id_col, id) = toks[0];
    if !valid_id(id) {
        return err(l.no, id_col, format!("invalid element id '{id}'"));
    }
    let coord = |i: usize| -> Result<i32, ParseError> {
        let (c, t) = toks[i];
        t.parse()
            .or_else(|_| err(l.no, c, format!("expected an integer, found '{t}'")))
    };
    let (x, y) = (coord(2)?, coord(3)?);
    let mut attrs: Vec<(usize, &str, &str)> = Vec::new();
    for &(c, t) in &toks[4..] {
        let Some((k, v)) = t.split_once('=') else {
            return err(l.no, c, format!("expected key=value, found '{t}'"));
        };
        if attrs.iter().any(|a| a.1 == k) {
            return err(l.no, c, format!("attribute '{k}' repeated"));
        }
        attrs.push((c, k, v));
    }
    let (kind_col, kind) = toks[1];
    let allowed: &[&str] = match kind {
        "camouflaged" => &["actual", "inputs"],
        "covert" => &["shows", "actual", "inputs"],
        _ => &[],
    };
    if let Some(a) = attrs.iter().find(|a| !allowed.contains(&a.1)) {
        return err(l.no, a.0, format!("unknown attribute '{}' for {kind}", a.1));
    }
    let attr = |name: &str| -> Result<(usize, &str), ParseError> {
        attrs
            .iter()
            .find(|a| a.1 == name)
            .map(|a| (a.0, a.2))
            .ok_or_else(|| ParseError {
                line: l.no,
                column: kind_col,
                message: format!("{kind} needs attribute '{name}'"),
            })
    };
    let truth = || -> Result<GateTruth, ParseError> {
        let (ac, actual) = attr("actual")?;
        let (ic, inputs) = attr("inputs")?;
        Ok(GateTruth::new(
            parse_gate_fn(l.no, ac, actual)?,
            parse_ports(l.no, ic, inputs)?,
        ))
    };
    let kind = match kind {
        "battery" => ElementKind::Battery,
        "switch" => ElementKind::Switch,
        "and" => ElementKind::AndGate,
        "or" => ElementKind::OrGate,
        "not" => ElementKind::NotGate,
        "wire" => ElementKind::Wire,
        "lamp" => ElementKind::Lamp,
        "danger" => ElementKind::DangerSign,
        "camouflaged" => ElementKind::CamouflagedGate(truth()?),
        "covert" => {
            let (sc, shows) = attr("shows")?;
            ElementKind::CovertGate {
                displayed: parse_gate_fn(l.no, sc, shows)?,
                truth: truth()?,
            }
        }
        other => return err(l.no, kind_col, format!("unknown element kind '{other}'")),
    };
    Ok(Element::new(id, kind, x, y))
}

fn parse_wire(l: &Line<'_>) -> Result<Wire, ParseError> {
    let toks = tokens(l.text);
    if toks.len() != 3 || toks[1].1 != "->" {
        let col = toks.first().map_or(1, |t| t.0);
        return err(l.no, col, "expected: <source> -> <sink>[.<port>]");
    }
    let (sc, src) = toks[0];
    if !valid_id(src) {
        return err(l.no, sc, format!("invalid element id '{src}'"));
    }
    let (dc, dst) = toks[2];
    let (sink, port) = match dst.split_once('.') {
        None => (dst, 0),
        Some((sink, p)) => match p.parse::<u8>() {
            Ok(p) => (sink, p),
            Err(_) => return err(l.no, dc + sink.len() + 1, format!("bad port '{p}'")),
        },
    };
    if !valid_id(sink) {
        return err(l.no, dc, format!("invalid element id '{sink}'"));
    }
    Ok(Wire::new(src, sink, port))
}

fn parse_body(elements: &[Line<'_>], wires: &[Line<'_>]) -> Result<Netlist, ParseError> {
    let mut seen = HashSet::new();
    let mut els = Vec::with_capacity(elements.len());
    for l in elements {
        let e = parse_element(l)?;
        if !seen.insert(e.id.clone()) {
            let col = tokens(l.text)[0].0;
            return err(l.no, col, format!("duplicate element id '{}'", e.id));
        }
        els.push(e);
    }
    let ws = wires.iter().map(parse_wire).collect::<Result<_, _>>()?;
    Ok(Netlist::new(els, ws))
}

/// Parses a document holding only `ELEMENTS` and `WIRES` sections, as used
/// for tutorial circuits.
pub fn parse_netlist(doc: &str) -> Result<Netlist, ParseError> {
    let s = split_sections(doc)?;
    if let Some(meta) = &s.meta {
        let no = meta.first().map_or(1, |l| l.no);
        return err(no, 1, "META is not allowed in a circuit document");
    }
    parse_body(
        s.elements.as_deref().unwrap_or_default(),
        s.wires.as_deref().unwrap_or_default(),
    )
}

const META_KEYS: [&str; 7] = [
    "id",
    "group",
    "target",
    "solutions",
    "initial",
    "skip_time",
    "skip_attempts",
];

pub fn parse_task(doc: &[u8]) -> Result<Task, ParseError> {
    let doc = std::str::from_utf8(doc).or_else(|e| {
        let before = &doc[..e.valid_up_to()];
        let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
        let column = before.iter().rev().take_while(|&&b| b != b'\n').count() + 1;
        err(line, column, "document is not valid UTF-8")
    })?;
    let s = split_sections(doc)?;
    let Some(meta) = &s.meta else {
        return err(1, 1, "missing META section");
    };
    let mut values: Vec<(&str, usize, usize, &str)> = Vec::new();
    for l in meta {
        let Some((k, v)) = l.text.split_once('=') else {
            return err(l.no, 1, "expected key = value");
        };
        let key = k.trim();
        let col = k.len() - k.trim_start().len() + 1;
        if !META_KEYS.contains(&key) {
            return err(l.no, col, format!("unknown key '{key}'"));
        }
        if values.iter().any(|v| v.0 == key) {
            return err(l.no, col, format!("key '{key}' repeated"));
        }
        let vcol = k.len() + 2 + (v.len() - v.trim_start().len());
        values.push((key, l.no, vcol, v.trim()));
    }
    let meta_line = meta.first().map_or(1, |l| l.no);
    let get = |key: &str| values.iter().find(|v| v.0 == key).map(|v| (v.1, v.2, v.3));
    let need = |key: &str| {
        get(key).ok_or_else(|| ParseError {
            line: meta_line,
            column: 1,
            message: format!("missing key '{key}'"),
        })
    };
    let (ln, col, id) = need("id")?;
    if !valid_id(id) {
        return err(ln, col, format!("invalid task id '{id}'"));
    }
    let (ln, col, g) = need("group")?;
    let group = g.parse().or_else(|e| err(ln, col, format!("{e}")))?;
    let (ln, col, t) = need("target")?;
    let target_outputs = t
        .parse()
        .or_else(|_| err(ln, col, format!("bad target outputs '{t}'")))?;
    let (ln, col, sol) = need("solutions")?;
    let declared_solutions = if sol == "-" {
        Vec::new()
    } else {
        sol.split(',')
            .map(|a| {
                a.trim()
                    .parse::<SwitchAssignment>()
                    .or_else(|_| err(ln, col, format!("bad switch assignment '{}'", a.trim())))
            })
            .collect::<Result<_, _>>()?
    };
    let (ln, col, init) = need("initial")?;
    let initial_switches = if init == "random" {
        InitialSwitches::Random
    } else {
        InitialSwitches::Fixed(
            init.parse()
                .or_else(|_| err(ln, col, format!("bad initial switches '{init}'")))?,
        )
    };
    let number = |key: &str| -> Result<Option<u32>, ParseError> {
        get(key)
            .map(|(ln, col, v)| {
                v.parse()
                    .or_else(|_| err(ln, col, format!("expected a whole number, found '{v}'")))
            })
            .transpose()
    };
    let netlist = parse_body(
        s.elements.as_deref().unwrap_or_default(),
        s.wires.as_deref().unwrap_or_default(),
    )?;
    Ok(Task {
        id: id.to_string(),
        group,
        netlist,
        target_outputs,
        declared_solutions,
        initial_switches,
        skip_time_limit: number("skip_time")?,
        skip_attempt_limit: number("skip_attempts")?,
    })
}

fn kind_token(kind: &ElementKind) -> String {
    let truth = |t: &GateTruth| {
        let ports: Vec<String> = t.effective_inputs.iter().map(u8::to_string).collect();
        format!("actual={} inputs={}", t.actual.name(), ports.join(","))
    };
    match kind {
        ElementKind::Battery => "battery".into(),
        ElementKind::Switch => "switch".into(),
        ElementKind::AndGate => "and".into(),
        ElementKind::OrGate => "or".into(),
        ElementKind::NotGate => "not".into(),
        ElementKind::Wire => "wire".into(),
        ElementKind::Lamp => "lamp".into(),
        ElementKind::DangerSign => "danger".into(),
        ElementKind::CamouflagedGate(t) => format!("camouflaged {{}} {}", truth(t)),
        ElementKind::CovertGate {
            displayed,
            truth: t,
        } => {
            format!("covert {{}} shows={} {}", displayed.name(), truth(t))
        }
    }
}

/// `ELEMENTS` and `WIRES` sections of `netlist`.
pub fn serialize_netlist(netlist: &Netlist) -> String {
    let mut out = String::from("ELEMENTS\n");
    for e in &netlist.elements {
        let coords = format!("{} {}", e.pos.x, e.pos.y);
        let kind = kind_token(&e.kind);
        let line = if kind.contains("{}") {
            kind.replacen("{}", &coords, 1)
        } else {
            format!("{kind} {coords}")
        };
        let _ = writeln!(out, "{} {line}", e.id);
    }
    out.push_str("\nWIRES\n");
    for w in &netlist.wires {
        let single = netlist
            .element(&w.to)
            .is_some_and(|e| e.kind.input_ports() == 1);
        if w.to_port == 0 && single {
            let _ = writeln!(out, "{} -> {}", w.from, w.to);
        } else {
            let _ = writeln!(out, "{} -> {}.{}", w.from, w.to, w.to_port);
        }
    }
    out
}

pub fn serialize_task(task: &Task) -> Vec<u8> {
    let mut out = String::from("META\n");
    let _ = writeln!(out, "id = {}", task.id);
    let _ = writeln!(out, "group = {}", task.group);
    let _ = writeln!(out, "target = {}", task.target_outputs);
    let sols: Vec<String> = task
        .declared_solutions
        .iter()
        .map(|s| s.to_string())
        .collect();
    let sols = if sols.is_empty() {
        "-".to_string()
    } else {
        sols.join(", ")
    };
    let _ = writeln!(out, "solutions = {sols}");
    match &task.initial_switches {
        InitialSwitches::Random => out.push_str("initial = random\n"),
        InitialSwitches::Fixed(a) => {
            let _ = writeln!(out, "initial = {a}");
        }
    }
    if let Some(t) = task.skip_time_limit {
        let _ = writeln!(out, "skip_time = {t}");
    }
    if let Some(n) = task.skip_attempt_limit {
        let _ = writeln!(out, "skip_attempts = {n}");
    }
    out.push('\n');
    out.push_str(&serialize_netlist(&task.netlist));
    out.into_bytes()
}
