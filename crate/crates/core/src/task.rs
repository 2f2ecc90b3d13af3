//! Tasks: a netlist plus the metadata needed to run and audit it.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circuit::{
    validate_netlist, GateCounts, Netlist, OutputKind, SwitchAssignment, ValidationReport,
    DEFAULT_ENUMERATION_CAP,
};
use crate::nonlinearity::{distance_up_to_complement, nonlinearity};
use crate::reference;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Group {
    #[serde(rename = "qualification")]
    Qualification,
    A,
    B,
    C,
    D,
    #[serde(rename = "tutorial")]
    Tutorial,
}

impl Group {
    pub const EXPERIMENT: [Group; 4] = [Group::A, Group::B, Group::C, Group::D];

    pub fn as_str(self) -> &'static str {
        match self {
            Group::Qualification => "qualification",
            Group::A => "A",
            Group::B => "B",
            Group::C => "C",
            Group::D => "D",
            Group::Tutorial => "tutorial",
        }
    }

    pub fn is_experiment(self) -> bool {
        matches!(self, Group::A | Group::B | Group::C | Group::D)
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown group '{0}'")]
pub struct GroupParseError(pub String);

impl FromStr for Group {
    type Err = GroupParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "qualification" => Ok(Group::Qualification),
            "A" => Ok(Group::A),
            "B" => Ok(Group::B),
            "C" => Ok(Group::C),
            "D" => Ok(Group::D),
            "tutorial" => Ok(Group::Tutorial),
            other => Err(GroupParseError(other.to_string())),
        }
    }
}

/// Output types top to bottom, written `1` (lamp) / `0` (danger sign).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TargetOutputs(pub Vec<OutputKind>);

impl fmt::Display for TargetOutputs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in &self.0 {
            f.write_str(match k {
                OutputKind::Lamp => "1",
                OutputKind::DangerSign => "0",
            })?;
        }
        Ok(())
    }
}

impl FromStr for TargetOutputs {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        if s.is_empty() {
            return Err(());
        }
        s.chars()
            .map(|c| match c {
                '1' => Ok(OutputKind::Lamp),
                '0' => Ok(OutputKind::DangerSign),
                _ => Err(()),
            })
            .collect::<Result<_, _>>()
            .map(TargetOutputs)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum InitialSwitches {
    Fixed(SwitchAssignment),
    /// Drawn from the session seed.
    Random,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Task {
    pub id: String,
    pub group: Group,
    pub netlist: Netlist,
    pub target_outputs: TargetOutputs,
    pub declared_solutions: Vec<SwitchAssignment>,
    pub initial_switches: InitialSwitches,
    /// Per-task overrides; when absent the study configuration decides.
    pub skip_time_limit: Option<u32>,
    pub skip_attempt_limit: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DesignConstraints {
    pub min_io_nonlinearity: u32,
    pub min_output_pair_distance: u32,
    pub required_switch_count: usize,
    pub outputs_per_group: OutputsPerGroup,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsPerGroup {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub d: usize,
}

impl OutputsPerGroup {
    pub fn expected(&self, group: Group) -> Option<usize> {
        match group {
            Group::A => Some(self.a),
            Group::B => Some(self.b),
            Group::C => Some(self.c),
            Group::D => Some(self.d),
            _ => None,
        }
    }
}

impl Default for DesignConstraints {
    fn default() -> Self {
        Self {
            min_io_nonlinearity: 1,
            min_output_pair_distance: 1,
            required_switch_count: 3,
            outputs_per_group: OutputsPerGroup {
                a: 1,
                b: 2,
                c: 3,
                d: 2,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "issue", rename_all = "snake_case")]
pub enum TaskIssue {
    InvalidNetlist,
    SwitchCount {
        expected: usize,
        actual: usize,
    },
    TargetLength {
        expected: usize,
        actual: usize,
    },
    TargetKind {
        output: usize,
    },
    SolutionMismatch {
        missing: Vec<SwitchAssignment>,
        unexpected: Vec<SwitchAssignment>,
    },
    LowNonlinearity {
        output: usize,
        value: u32,
        min: u32,
    },
    OutputFollowsTrivially {
        first: usize,
        second: usize,
        distance: u32,
        min: u32,
    },
    OutputCount {
        expected: usize,
        actual: usize,
    },
    ReferenceGateCounts {
        expected: GateCounts,
        actual: GateCounts,
    },
    ReferenceTarget {
        expected: String,
        actual: String,
    },
    ReferenceSolutions {
        expected: Vec<String>,
        actual: Vec<String>,
    },
    ReferenceGroup {
        expected: Group,
        actual: Group,
    },
    NonPositiveSkipLimit,
}

fn join(v: &[SwitchAssignment]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

impl fmt::Display for TaskIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaskIssue::InvalidNetlist => f.write_str("netlist is structurally invalid"),
            TaskIssue::SwitchCount { expected, actual } => {
                write!(f, "expected {expected} switches, found {actual}")
            }
            TaskIssue::TargetLength { expected, actual } => {
                write!(f, "target string has {actual} outputs, netlist has {expected}")
            }
            TaskIssue::TargetKind { output } => {
                write!(f, "target output {output} does not match the element kind")
            }
            TaskIssue::SolutionMismatch { missing, unexpected } => write!(
                f,
                "declared solutions differ from enumeration: declared but wrong {{{}}}, correct but undeclared {{{}}}",
                join(unexpected),
                join(missing)
            ),
            TaskIssue::LowNonlinearity { output, value, min } => {
                write!(f, "output {output} has nonlinearity {value} < {min}")
            }
            TaskIssue::OutputFollowsTrivially {
                first,
                second,
                distance,
                min,
            } => write!(
                f,
                "output follows trivially: outputs {first} and {second} are {distance} apart (min {min})"
            ),
            TaskIssue::OutputCount { expected, actual } => {
                write!(f, "group expects {expected} outputs, found {actual}")
            }
            TaskIssue::ReferenceGateCounts { expected, actual } => {
                write!(f, "gate counts {actual} differ from reference {expected}")
            }
            TaskIssue::ReferenceTarget { expected, actual } => {
                write!(f, "target {actual} differs from reference {expected}")
            }
            TaskIssue::ReferenceSolutions { expected, actual } => write!(
                f,
                "solutions {{{}}} differ from reference {{{}}}",
                actual.join(","),
                expected.join(",")
            ),
            TaskIssue::ReferenceGroup { expected, actual } => {
                write!(f, "group {actual} differs from reference {expected}")
            }
            TaskIssue::NonPositiveSkipLimit => f.write_str("skip limits must be positive"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskReport {
    pub task: String,
    pub netlist: ValidationReport,
    pub gate_counts: GateCounts,
    pub solutions: Vec<SwitchAssignment>,
    pub nonlinearity: Vec<u32>,
    /// Whether the task id matched a published reference row.
    pub reference_checked: bool,
    pub issues: Vec<TaskIssue>,
}

impl TaskReport {
    pub fn is_valid(&self) -> bool {
        self.netlist.is_valid() && self.issues.is_empty()
    }
}

impl fmt::Display for TaskReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.is_valid() { "ok" } else { "FAILED" };
        writeln!(f, "task {}: {status}", self.task)?;
        writeln!(f, "  gates: {}", self.gate_counts)?;
        writeln!(f, "  solutions: {}", join(&self.solutions))?;
        let nl: Vec<String> = self.nonlinearity.iter().map(ToString::to_string).collect();
        writeln!(f, "  nonlinearity: {}", nl.join(","))?;
        if self.reference_checked {
            writeln!(f, "  reference row: checked")?;
        }
        for v in &self.netlist.violations {
            writeln!(f, "  {v}")?;
        }
        for i in &self.issues {
            writeln!(f, "  error: {i}")?;
        }
        Ok(())
    }
}

/// Design checks on a task: solution declaration, nonlinearity of every
/// output, pairwise output independence, output count per group, and the
/// published reference row when the id matches one.
pub fn validate_task(task: &Task, constraints: &DesignConstraints) -> TaskReport {
    let netlist_report = validate_netlist(&task.netlist);
    let mut report = TaskReport {
        task: task.id.clone(),
        gate_counts: task.netlist.gate_counts(),
        netlist: netlist_report,
        solutions: Vec::new(),
        nonlinearity: Vec::new(),
        reference_checked: false,
        issues: Vec::new(),
    };
    let issues = &mut report.issues;

    if task.skip_time_limit == Some(0) || task.skip_attempt_limit == Some(0) {
        issues.push(TaskIssue::NonPositiveSkipLimit);
    }
    let switches = task.netlist.switch_count();
    if switches != constraints.required_switch_count {
        issues.push(TaskIssue::SwitchCount {
            expected: constraints.required_switch_count,
            actual: switches,
        });
    }
    let outputs = task.netlist.outputs();
    if task.target_outputs.0.len() != outputs.len() {
        issues.push(TaskIssue::TargetLength {
            expected: outputs.len(),
            actual: task.target_outputs.0.len(),
        });
    } else {
        for (i, (kind, el)) in task.target_outputs.0.iter().zip(&outputs).enumerate() {
            let actual = match el.kind {
                crate::circuit::ElementKind::Lamp => OutputKind::Lamp,
                _ => OutputKind::DangerSign,
            };
            if *kind != actual {
                issues.push(TaskIssue::TargetKind { output: i });
            }
        }
    }
    if let Some(expected) = constraints.outputs_per_group.expected(task.group) {
        if outputs.len() != expected {
            issues.push(TaskIssue::OutputCount {
                expected,
                actual: outputs.len(),
            });
        }
    }

    match task.netlist.compile() {
        Err(_) => issues.push(TaskIssue::InvalidNetlist),
        Ok(circuit) if switches <= DEFAULT_ENUMERATION_CAP => {
            let solutions = circuit
                .solutions(DEFAULT_ENUMERATION_CAP)
                .expect("switch count checked against cap");
            let mut declared = task.declared_solutions.clone();
            declared.sort();
            declared.dedup();
            let missing: Vec<_> = solutions
                .iter()
                .filter(|s| !declared.contains(s))
                .cloned()
                .collect();
            let unexpected: Vec<_> = declared
                .iter()
                .filter(|s| !solutions.contains(s))
                .cloned()
                .collect();
            if !missing.is_empty() || !unexpected.is_empty() {
                issues.push(TaskIssue::SolutionMismatch {
                    missing,
                    unexpected,
                });
            }

            let tables = circuit
                .truth_table()
                .expect("switch count checked against cap");
            for (i, t) in tables.iter().enumerate() {
                let nl = nonlinearity(t).expect("table length is a power of two");
                report.nonlinearity.push(nl);
                if nl < constraints.min_io_nonlinearity {
                    issues.push(TaskIssue::LowNonlinearity {
                        output: i,
                        value: nl,
                        min: constraints.min_io_nonlinearity,
                    });
                }
            }
            for i in 0..tables.len() {
                for j in i + 1..tables.len() {
                    let d = distance_up_to_complement(&tables[i], &tables[j]);
                    if d < constraints.min_output_pair_distance {
                        issues.push(TaskIssue::OutputFollowsTrivially {
                            first: i,
                            second: j,
                            distance: d,
                            min: constraints.min_output_pair_distance,
                        });
                    }
                }
            }
            report.solutions = solutions;
        }
        Ok(_) => {}
    }

    if let Some(r) = reference::lookup(&task.id) {
        report.reference_checked = true;
        let expected = GateCounts {
            and: r.and,
            or: r.or,
            not: r.inverters,
            camouflaged: r.camouflaged,
            covert: 0,
        };
        if report.gate_counts != expected {
            issues.push(TaskIssue::ReferenceGateCounts {
                expected,
                actual: report.gate_counts,
            });
        }
        if r.group != task.group {
            issues.push(TaskIssue::ReferenceGroup {
                expected: r.group,
                actual: task.group,
            });
        }
        let target = task.target_outputs.to_string();
        if target != r.target {
            issues.push(TaskIssue::ReferenceTarget {
                expected: r.target.to_string(),
                actual: target,
            });
        }
        let mut expected_sol: Vec<String> = r.solutions.iter().map(|s| s.to_string()).collect();
        expected_sol.sort();
        let actual_sol: Vec<String> = report.solutions.iter().map(ToString::to_string).collect();
        if expected_sol != actual_sol {
            issues.push(TaskIssue::ReferenceSolutions {
                expected: expected_sol,
                actual: actual_sol,
            });
        }
    }
    report
}

/// Tasks grouped and ordered as listed in a library manifest.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Library {
    pub groups: Vec<TaskGroup>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskGroup {
    pub group: Group,
    pub tasks: Vec<Task>,
}

impl Library {
    pub fn group(&self, group: Group) -> Option<&TaskGroup> {
        self.groups.iter().find(|g| g.group == group)
    }

    pub fn tasks(&self) -> impl Iterator<Item = &Task> {
        self.groups.iter().flat_map(|g| g.tasks.iter())
    }

    pub fn task(&self, id: &str) -> Option<&Task> {
        self.tasks().find(|t| t.id == id)
    }

    pub fn is_empty(&self) -> bool {
        self.groups.iter().all(|g| g.tasks.is_empty())
    }
}
