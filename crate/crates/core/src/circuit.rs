//! Combinational netlists built from batteries, switches, AND/OR/NOT gates,
//! wires, lamps, danger signs and the two obfuscated gate kinds.
//!
//! Switches are ordered top to bottom by screen position (ties broken by x,
//! then by id). Bit 0 of a [`SwitchAssignment`] is the topmost switch, and
//! truth-table index `i` treats switch 0 as the most significant bit, so the
//! assignment string `"001"` is index 1.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

/// Cap on the number of switches for exhaustive enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 20;

/// Boolean function of a gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateFn {
    And,
    Or,
    Not,
}

impl GateFn {
    pub fn arity(self) -> usize {
        match self {
            GateFn::And | GateFn::Or => 2,
            GateFn::Not => 1,
        }
    }

    pub fn apply(self, inputs: &[bool]) -> bool {
        match self {
            GateFn::And => inputs.iter().all(|&b| b),
            GateFn::Or => inputs.iter().any(|&b| b),
            GateFn::Not => !inputs[0],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateFn::And => "and",
            GateFn::Or => "or",
            GateFn::Not => "not",
        }
    }
}

impl FromStr for GateFn {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "and" => Ok(GateFn::And),
            "or" => Ok(GateFn::Or),
            "not" => Ok(GateFn::Not),
            _ => Err(()),
        }
    }
}

/// Hidden behaviour of an obfuscated gate. Never leaves the server.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GateTruth {
    pub actual: GateFn,
    /// Declared input ports that actually feed `actual`, in order.
    pub effective_inputs: Vec<u8>,
}

impl GateTruth {
    pub fn new(actual: GateFn, effective_inputs: Vec<u8>) -> Self {
        Self {
            actual,
            effective_inputs,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ElementKind {
    Battery,
    Switch,
    AndGate,
    OrGate,
    NotGate,
    /// Pass-through junction.
    Wire,
    Lamp,
    DangerSign,
    /// Drawn as an ink blot with two input ports.
    CamouflagedGate(GateTruth),
    /// Drawn with the symbol of `displayed`.
    CovertGate {
        displayed: GateFn,
        truth: GateTruth,
    },
}

/// What a participant sees for an element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisplayKind {
    Battery,
    Switch,
    And,
    Or,
    Not,
    Wire,
    Lamp,
    DangerSign,
    InkBlot,
}

impl ElementKind {
    /// Number of declared input ports.
    pub fn input_ports(&self) -> usize {
        match self {
            ElementKind::Battery => 0,
            ElementKind::AndGate | ElementKind::OrGate => 2,
            ElementKind::Switch
            | ElementKind::NotGate
            | ElementKind::Wire
            | ElementKind::Lamp
            | ElementKind::DangerSign => 1,
            ElementKind::CamouflagedGate(_) => 2,
            ElementKind::CovertGate { displayed, .. } => displayed.arity(),
        }
    }

    pub fn is_output(&self) -> bool {
        matches!(self, ElementKind::Lamp | ElementKind::DangerSign)
    }

    pub fn is_gate(&self) -> bool {
        matches!(
            self,
            ElementKind::AndGate
                | ElementKind::OrGate
                | ElementKind::NotGate
                | ElementKind::CamouflagedGate(_)
                | ElementKind::CovertGate { .. }
        )
    }

    pub fn truth(&self) -> Option<&GateTruth> {
        match self {
            ElementKind::CamouflagedGate(t) | ElementKind::CovertGate { truth: t, .. } => Some(t),
            _ => None,
        }
    }

    pub fn display(&self) -> DisplayKind {
        match self {
            ElementKind::Battery => DisplayKind::Battery,
            ElementKind::Switch => DisplayKind::Switch,
            ElementKind::AndGate => DisplayKind::And,
            ElementKind::OrGate => DisplayKind::Or,
            ElementKind::NotGate => DisplayKind::Not,
            ElementKind::Wire => DisplayKind::Wire,
            ElementKind::Lamp => DisplayKind::Lamp,
            ElementKind::DangerSign => DisplayKind::DangerSign,
            ElementKind::CamouflagedGate(_) => DisplayKind::InkBlot,
            ElementKind::CovertGate { displayed, .. } => match displayed {
                GateFn::And => DisplayKind::And,
                GateFn::Or => DisplayKind::Or,
                GateFn::Not => DisplayKind::Not,
            },
        }
    }
}

#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct Position {
    pub x: i32,
    pub y: i32,
}

impl Position {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Element {
    pub id: String,
    pub kind: ElementKind,
    pub pos: Position,
}

impl Element {
    pub fn new(id: impl Into<String>, kind: ElementKind, x: i32, y: i32) -> Self {
        Self {
            id: id.into(),
            kind,
            pos: Position::new(x, y),
        }
    }
}

/// Directed connection from an element's output to an input port.
/// Every element has a single output, so the source port is always 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Wire {
    pub from: String,
    pub to: String,
    pub to_port: u8,
}

impl Wire {
    pub fn new(from: impl Into<String>, to: impl Into<String>, to_port: u8) -> Self {
        Self {
            from: from.into(),
            to: to.into(),
            to_port,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Netlist {
    pub elements: Vec<Element>,
    pub wires: Vec<Wire>,
}

fn screen_order(a: &Element, b: &Element) -> core::cmp::Ordering {
    (a.pos.y, a.pos.x, &a.id).cmp(&(b.pos.y, b.pos.x, &b.id))
}

impl Netlist {
    pub fn new(elements: Vec<Element>, wires: Vec<Wire>) -> Self {
        Self { elements, wires }
    }

    pub fn element(&self, id: &str) -> Option<&Element> {
        self.elements.iter().find(|e| e.id == id)
    }

    /// Switches, top to bottom.
    pub fn inputs(&self) -> Vec<&Element> {
        let mut v: Vec<&Element> = self
            .elements
            .iter()
            .filter(|e| e.kind == ElementKind::Switch)
            .collect();
        v.sort_by(|a, b| screen_order(a, b));
        v
    }

    /// Lamps and danger signs, top to bottom.
    pub fn outputs(&self) -> Vec<&Element> {
        let mut v: Vec<&Element> = self
            .elements
            .iter()
            .filter(|e| e.kind.is_output())
            .collect();
        v.sort_by(|a, b| screen_order(a, b));
        v
    }

    pub fn switch_count(&self) -> usize {
        self.elements
            .iter()
            .filter(|e| e.kind == ElementKind::Switch)
            .count()
    }

    pub fn gate_counts(&self) -> GateCounts {
        let mut c = GateCounts::default();
        for e in &self.elements {
            match e.kind {
                ElementKind::AndGate => c.and += 1,
                ElementKind::OrGate => c.or += 1,
                ElementKind::NotGate => c.not += 1,
                ElementKind::CamouflagedGate(_) => c.camouflaged += 1,
                ElementKind::CovertGate { .. } => c.covert += 1,
                _ => {}
            }
        }
        c
    }

    /// Checks structure and returns a compiled evaluator.
    pub fn compile(&self) -> Result<Circuit, CircuitError> {
        Circuit::new(self)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCounts {
    pub and: u32,
    pub or: u32,
    pub not: u32,
    pub camouflaged: u32,
    pub covert: u32,
}

impl GateCounts {
    pub fn total(&self) -> u32 {
        self.and + self.or + self.not + self.camouflaged + self.covert
    }
}

impl fmt::Display for GateCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "AND={} OR={} NOT={} camouflaged={} covert={} total={}",
            self.and,
            self.or,
            self.not,
            self.camouflaged,
            self.covert,
            self.total()
        )
    }
}

/// One bit per switch, top to bottom; `true` = closed.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SwitchAssignment(pub Vec<bool>);

impl SwitchAssignment {
    /// Assignment for truth-table index `index` (switch 0 is the MSB).
    pub fn from_index(index: usize, switches: usize) -> Self {
        SwitchAssignment(
            (0..switches)
                .map(|bit| (index >> (switches - 1 - bit)) & 1 == 1)
                .collect(),
        )
    }

    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for SwitchAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("switch assignment must be a non-empty string of 0 and 1")]
pub struct AssignmentParseError;

impl FromStr for SwitchAssignment {
    type Err = AssignmentParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Err(AssignmentParseError);
        }
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(AssignmentParseError),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(SwitchAssignment)
    }
}

impl Serialize for SwitchAssignment {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SwitchAssignment {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = <alloc::borrow::Cow<'de, str>>::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Levels after forward evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CircuitState {
    /// Parallel to `Netlist::wires`; `true` = carrying current.
    pub wire_levels: Vec<bool>,
    /// Parallel to `Netlist::outputs()`.
    pub output_levels: Vec<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Lamp,
    DangerSign,
}

/// Per-output judgement, suitable for client feedback.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputCheck {
    pub id: String,
    pub kind: OutputKind,
    pub powered: bool,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub correct: bool,
    pub outputs: Vec<OutputCheck>,
}

// ---------------------------------------------------------------------------
// validation

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Info,
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ViolationKind {
    DuplicateId,
    UnknownElement {
        name: String,
    },
    PortOutOfRange {
        port: u8,
        ports: u8,
    },
    UndrivenPort {
        port: u8,
    },
    MultipleDrivers {
        port: u8,
    },
    Cycle,
    SwitchNotFedByBattery,
    BatteryNotPaired,
    OutputHasFanOut,
    NoOutputs,
    NoSwitches,
    UnusedElement,
    OutputNotReachable,
    InvalidEffectiveInputs,
    /// Covert gate whose actual arity differs from the displayed symbol.
    CovertArityMismatch,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolationKind::DuplicateId => f.write_str("duplicate element id"),
            ViolationKind::UnknownElement { name } => write!(f, "unknown element '{name}'"),
            ViolationKind::PortOutOfRange { port, ports } => {
                write!(f, "port {port} out of range (element has {ports})")
            }
            ViolationKind::UndrivenPort { port } => write!(f, "undriven port {port}"),
            ViolationKind::MultipleDrivers { port } => write!(f, "multiple drivers on port {port}"),
            ViolationKind::Cycle => f.write_str("combinational cycle"),
            ViolationKind::SwitchNotFedByBattery => f.write_str("switch not fed by a battery"),
            ViolationKind::BatteryNotPaired => {
                f.write_str("battery must drive exactly one switch and nothing else")
            }
            ViolationKind::OutputHasFanOut => f.write_str("output element drives other elements"),
            ViolationKind::NoOutputs => f.write_str("netlist has no outputs"),
            ViolationKind::NoSwitches => f.write_str("netlist has no switches"),
            ViolationKind::UnusedElement => f.write_str("element output is unused"),
            ViolationKind::OutputNotReachable => {
                f.write_str("output is not reachable from any switch")
            }
            ViolationKind::InvalidEffectiveInputs => {
                f.write_str("effective inputs do not match the hidden function")
            }
            ViolationKind::CovertArityMismatch => {
                f.write_str("covert gate arity differs from its displayed symbol")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub severity: Severity,
    #[serde(flatten)]
    pub kind: ViolationKind,
    pub elements: Vec<String>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Info => "info",
            Severity::Error => "error",
        };
        write!(f, "{tag}: {}", self.kind)?;
        if !self.elements.is_empty() {
            write!(f, " [{}]", self.elements.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors().next().is_none()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Violation> {
        self.violations
            .iter()
            .filter(|v| v.severity == Severity::Error)
    }

    pub fn has(&self, pred: impl Fn(&ViolationKind) -> bool) -> bool {
        self.violations.iter().any(|v| pred(&v.kind))
    }

    fn push(&mut self, severity: Severity, kind: ViolationKind, elements: Vec<String>) {
        self.violations.push(Violation {
            severity,
            kind,
            elements,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CircuitError {
    #[error("invalid netlist:\n{0}")]
    Invalid(ValidationReport),
    #[error("assignment has {got} bits but the netlist has {expected} switches")]
    AssignmentLength { expected: usize, got: usize },
    #[error("{count} switches exceed the enumeration cap of {cap}")]
    TooManySwitches { count: usize, cap: usize },
}

/// Structural checks: ids, ports, drivers, acyclicity, battery-switch
/// pairing, output reachability and obfuscated-gate descriptors.
pub fn validate_netlist(netlist: &Netlist) -> ValidationReport {
    Analysis::run(netlist).report
}

struct Analysis {
    report: ValidationReport,
    /// drivers[element][port] = source element indices
    drivers: Vec<Vec<Vec<usize>>>,
    order: Option<Vec<usize>>,
}

impl Analysis {
    fn run(netlist: &Netlist) -> Self {
        use Severity::*;
        let mut report = ValidationReport::default();
        let els = &netlist.elements;

        let mut index: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, e) in els.iter().enumerate() {
            if index.insert(e.id.as_str(), i).is_some() {
                report.push(Error, ViolationKind::DuplicateId, vec![e.id.clone()]);
            }
        }

        let mut drivers: Vec<Vec<Vec<usize>>> = els
            .iter()
            .map(|e| vec![Vec::new(); e.kind.input_ports()])
            .collect();
        let mut fanout: Vec<Vec<usize>> = vec![Vec::new(); els.len()];
        for w in &netlist.wires {
            let (Some(&src), Some(&dst)) = (index.get(w.from.as_str()), index.get(w.to.as_str()))
            else {
                for name in [&w.from, &w.to] {
                    if !index.contains_key(name.as_str()) {
                        report.push(
                            Error,
                            ViolationKind::UnknownElement { name: name.clone() },
                            vec![],
                        );
                    }
                }
                continue;
            };
            let ports = drivers[dst].len();
            if usize::from(w.to_port) >= ports {
                report.push(
                    Error,
                    ViolationKind::PortOutOfRange {
                        port: w.to_port,
                        ports: ports as u8,
                    },
                    vec![els[dst].id.clone()],
                );
                continue;
            }
            drivers[dst][usize::from(w.to_port)].push(src);
            fanout[src].push(dst);
        }

        for (i, e) in els.iter().enumerate() {
            for (port, d) in drivers[i].iter().enumerate() {
                let port = port as u8;
                match d.len() {
                    0 => report.push(
                        Error,
                        ViolationKind::UndrivenPort { port },
                        vec![e.id.clone()],
                    ),
                    1 => {}
                    _ => report.push(
                        Error,
                        ViolationKind::MultipleDrivers { port },
                        vec![e.id.clone()],
                    ),
                }
            }
            match &e.kind {
                ElementKind::Switch => {
                    let fed = drivers[i][0].len() == 1
                        && els[drivers[i][0][0]].kind == ElementKind::Battery;
                    if !fed {
                        report.push(
                            Error,
                            ViolationKind::SwitchNotFedByBattery,
                            vec![e.id.clone()],
                        );
                    }
                }
                ElementKind::Battery => {
                    let paired =
                        fanout[i].len() == 1 && els[fanout[i][0]].kind == ElementKind::Switch;
                    if !paired {
                        report.push(Error, ViolationKind::BatteryNotPaired, vec![e.id.clone()]);
                    }
                }
                ElementKind::Lamp | ElementKind::DangerSign => {
                    if !fanout[i].is_empty() {
                        report.push(Error, ViolationKind::OutputHasFanOut, vec![e.id.clone()]);
                    }
                }
                _ => {
                    if fanout[i].is_empty() {
                        report.push(Error, ViolationKind::UnusedElement, vec![e.id.clone()]);
                    }
                }
            }
            let declared = e.kind.input_ports();
            match &e.kind {
                ElementKind::CamouflagedGate(t) => {
                    if !effective_ok(t, declared) {
                        report.push(
                            Error,
                            ViolationKind::InvalidEffectiveInputs,
                            vec![e.id.clone()],
                        );
                    }
                }
                ElementKind::CovertGate { displayed, truth } => {
                    if !effective_ok(truth, declared) {
                        report.push(
                            Error,
                            ViolationKind::InvalidEffectiveInputs,
                            vec![e.id.clone()],
                        );
                    }
                    if displayed.arity() != truth.actual.arity() {
                        report.push(Info, ViolationKind::CovertArityMismatch, vec![e.id.clone()]);
                    }
                }
                _ => {}
            }
        }

        if !els.iter().any(|e| e.kind.is_output()) {
            report.push(Error, ViolationKind::NoOutputs, vec![]);
        }
        if !els.iter().any(|e| e.kind == ElementKind::Switch) {
            report.push(Error, ViolationKind::NoSwitches, vec![]);
        }

        // Kahn over the element graph, counting one edge per wire.
        let mut indeg: Vec<usize> = drivers
            .iter()
            .map(|ports| ports.iter().map(Vec::len).sum())
            .collect();
        let mut queue: Vec<usize> = (0..els.len()).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(els.len());
        while let Some(n) = queue.pop() {
            order.push(n);
            for &m in &fanout[n] {
                indeg[m] -= 1;
                if indeg[m] == 0 {
                    queue.push(m);
                }
            }
        }
        let order = if order.len() == els.len() {
            Some(order)
        } else {
            let stuck: Vec<String> = (0..els.len())
                .filter(|&i| indeg[i] > 0)
                .map(|i| els[i].id.clone())
                .collect();
            report.push(Error, ViolationKind::Cycle, stuck);
            None
        };

        // Reachability from switches along wires.
        let mut reached = vec![false; els.len()];
        let mut stack: Vec<usize> = (0..els.len())
            .filter(|&i| els[i].kind == ElementKind::Switch)
            .collect();
        while let Some(n) = stack.pop() {
            if reached[n] {
                continue;
            }
            reached[n] = true;
            stack.extend(fanout[n].iter().copied());
        }
        for (i, e) in els.iter().enumerate() {
            if e.kind.is_output() && !reached[i] {
                report.push(Error, ViolationKind::OutputNotReachable, vec![e.id.clone()]);
            }
        }

        Analysis {
            report,
            drivers,
            order,
        }
    }
}

fn effective_ok(t: &GateTruth, declared: usize) -> bool {
    let unique: BTreeSet<u8> = t.effective_inputs.iter().copied().collect();
    t.effective_inputs.len() == t.actual.arity()
        && unique.len() == t.effective_inputs.len()
        && t.effective_inputs
            .iter()
            .all(|&p| usize::from(p) < declared)
}

// ---------------------------------------------------------------------------
// evaluation

#[derive(Clone, Debug)]
enum Node {
    Const,
    Switch { rank: usize, feed: usize },
    Gate(GateFn, Vec<usize>),
    Buffer(usize),
}

/// A validated netlist compiled into topological order.
#[derive(Clone, Debug)]
pub struct Circuit {
    output_ids: Vec<String>,
    order: Vec<usize>,
    nodes: Vec<Node>,
    wire_src: Vec<usize>,
    outputs: Vec<usize>,
    output_kinds: Vec<OutputKind>,
    switches: usize,
}

impl Circuit {
    fn new(netlist: &Netlist) -> Result<Self, CircuitError> {
        let analysis = Analysis::run(netlist);
        if !analysis.report.is_valid() {
            return Err(CircuitError::Invalid(analysis.report));
        }
        let els = &netlist.elements;
        let index: BTreeMap<&str, usize> = els
            .iter()
            .enumerate()
            .map(|(i, e)| (e.id.as_str(), i))
            .collect();
        let switch_rank: BTreeMap<&str, usize> = netlist
            .inputs()
            .iter()
            .enumerate()
            .map(|(rank, e)| (e.id.as_str(), rank))
            .collect();
        let drv = |i: usize, port: usize| analysis.drivers[i][port][0];
        let nodes = els
            .iter()
            .enumerate()
            .map(|(i, e)| match &e.kind {
                ElementKind::Battery => Node::Const,
                ElementKind::Switch => Node::Switch {
                    rank: switch_rank[e.id.as_str()],
                    feed: drv(i, 0),
                },
                ElementKind::AndGate => Node::Gate(GateFn::And, vec![drv(i, 0), drv(i, 1)]),
                ElementKind::OrGate => Node::Gate(GateFn::Or, vec![drv(i, 0), drv(i, 1)]),
                ElementKind::NotGate => Node::Gate(GateFn::Not, vec![drv(i, 0)]),
                ElementKind::Wire | ElementKind::Lamp | ElementKind::DangerSign => {
                    Node::Buffer(drv(i, 0))
                }
                ElementKind::CamouflagedGate(t) | ElementKind::CovertGate { truth: t, .. } => {
                    Node::Gate(
                        t.actual,
                        t.effective_inputs
                            .iter()
                            .map(|&p| drv(i, usize::from(p)))
                            .collect(),
                    )
                }
            })
            .collect();
        let outs = netlist.outputs();
        Ok(Circuit {
            output_ids: outs.iter().map(|e| e.id.clone()).collect(),
            order: analysis.order.expect("valid netlist is acyclic"),
            nodes,
            wire_src: netlist
                .wires
                .iter()
                .map(|w| index[w.from.as_str()])
                .collect(),
            outputs: outs.iter().map(|e| index[e.id.as_str()]).collect(),
            output_kinds: outs
                .iter()
                .map(|e| match e.kind {
                    ElementKind::Lamp => OutputKind::Lamp,
                    _ => OutputKind::DangerSign,
                })
                .collect(),
            switches: switch_rank.len(),
        })
    }

    /// Output ids, top to bottom.
    pub fn output_ids(&self) -> &[String] {
        &self.output_ids
    }

    pub fn switch_count(&self) -> usize {
        self.switches
    }

    pub fn output_kinds(&self) -> &[OutputKind] {
        &self.output_kinds
    }

    fn check_len(&self, assignment: &SwitchAssignment) -> Result<(), CircuitError> {
        if assignment.len() != self.switches {
            return Err(CircuitError::AssignmentLength {
                expected: self.switches,
                got: assignment.len(),
            });
        }
        Ok(())
    }

    /// Output level of every element.
    pub fn element_levels(&self, assignment: &SwitchAssignment) -> Result<Vec<bool>, CircuitError> {
        self.check_len(assignment)?;
        let mut level = vec![false; self.nodes.len()];
        let mut ins: Vec<bool> = Vec::with_capacity(2);
        for &n in &self.order {
            level[n] = match &self.nodes[n] {
                Node::Const => true,
                Node::Switch { rank, feed } => assignment.0[*rank] && level[*feed],
                Node::Gate(f, srcs) => {
                    ins.clear();
                    ins.extend(srcs.iter().map(|&s| level[s]));
                    f.apply(&ins)
                }
                Node::Buffer(s) => level[*s],
            };
        }
        Ok(level)
    }

    pub fn evaluate(&self, assignment: &SwitchAssignment) -> Result<CircuitState, CircuitError> {
        let level = self.element_levels(assignment)?;
        Ok(CircuitState {
            wire_levels: self.wire_src.iter().map(|&s| level[s]).collect(),
            output_levels: self.outputs.iter().map(|&o| level[o]).collect(),
        })
    }

    pub fn check(&self, assignment: &SwitchAssignment) -> Result<Verdict, CircuitError> {
        let state = self.evaluate(assignment)?;
        let outputs: Vec<OutputCheck> = self
            .output_ids
            .iter()
            .zip(&self.output_kinds)
            .zip(&state.output_levels)
            .map(|((id, &kind), &powered)| OutputCheck {
                id: id.clone(),
                kind,
                powered,
                ok: match kind {
                    OutputKind::Lamp => powered,
                    OutputKind::DangerSign => !powered,
                },
            })
            .collect();
        Ok(Verdict {
            correct: outputs.iter().all(|o| o.ok),
            outputs,
        })
    }

    pub fn truth_table(&self) -> Result<Vec<Vec<bool>>, CircuitError> {
        if self.switches > DEFAULT_ENUMERATION_CAP {
            return Err(CircuitError::TooManySwitches {
                count: self.switches,
                cap: DEFAULT_ENUMERATION_CAP,
            });
        }
        let rows = 1usize << self.switches;
        let mut tables = vec![Vec::with_capacity(rows); self.outputs.len()];
        for i in 0..rows {
            let levels = self.element_levels(&SwitchAssignment::from_index(i, self.switches))?;
            for (t, &o) in tables.iter_mut().zip(&self.outputs) {
                t.push(levels[o]);
            }
        }
        Ok(tables)
    }

    pub fn solutions(&self, cap: usize) -> Result<Vec<SwitchAssignment>, CircuitError> {
        if self.switches > cap {
            return Err(CircuitError::TooManySwitches {
                count: self.switches,
                cap,
            });
        }
        let mut out = Vec::new();
        for i in 0..(1usize << self.switches) {
            let a = SwitchAssignment::from_index(i, self.switches);
            if self.check(&a)?.correct {
                out.push(a);
            }
        }
        Ok(out)
    }
}

pub fn evaluate(
    netlist: &Netlist,
    assignment: &SwitchAssignment,
) -> Result<CircuitState, CircuitError> {
    netlist.compile()?.evaluate(assignment)
}

/// Correct iff every lamp is powered and every danger sign is not.
pub fn check_solution(
    netlist: &Netlist,
    assignment: &SwitchAssignment,
) -> Result<Verdict, CircuitError> {
    netlist.compile()?.check(assignment)
}

/// One table per output (top to bottom), each of length `2^switches`.
pub fn truth_table(netlist: &Netlist) -> Result<Vec<Vec<bool>>, CircuitError> {
    netlist.compile()?.truth_table()
}

/// Every correct assignment, in truth-table index order.
pub fn enumerate_solutions(
    netlist: &Netlist,
    cap: usize,
) -> Result<Vec<SwitchAssignment>, CircuitError> {
    netlist.compile()?.solutions(cap)
}
