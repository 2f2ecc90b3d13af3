//! Tutorial pages and their content checks.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::circuit::{validate_netlist, ElementKind, Netlist, ValidationReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topic {
    Objective,
    Interface,
    Battery,
    Switch,
    Wire,
    And,
    Or,
    Not,
    Lamp,
    DangerSign,
}

impl Topic {
    /// Topics every tutorial must cover, one page each at least.
    pub const ELEMENTS: [Topic; 8] = [
        Topic::Battery,
        Topic::Switch,
        Topic::Wire,
        Topic::And,
        Topic::Or,
        Topic::Not,
        Topic::Lamp,
        Topic::DangerSign,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Topic::Objective => "objective",
            Topic::Interface => "interface",
            Topic::Battery => "battery",
            Topic::Switch => "switch",
            Topic::Wire => "wire",
            Topic::And => "and",
            Topic::Or => "or",
            Topic::Not => "not",
            Topic::Lamp => "lamp",
            Topic::DangerSign => "danger_sign",
        }
    }
}

impl core::str::FromStr for Topic {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        [Topic::Objective, Topic::Interface]
            .into_iter()
            .chain(Topic::ELEMENTS)
            .find(|t| t.as_str() == s)
            .ok_or(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TutorialPage {
    pub id: String,
    pub topic: Topic,
    pub title: String,
    pub body: String,
    /// Training circuit, always shown with live highlighting.
    pub circuit: Option<Netlist>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Tutorial {
    pub pages: Vec<TutorialPage>,
}

/// Phrases that would suggest a solving approach.
pub const BANNED_PHRASES: &[&str] = &[
    "work backward",
    "working backward",
    "start from the output",
    "start at the output",
    "begin with the output",
    "begin at the output",
    "start from the input",
    "start with the input",
    "trial and error",
    "try every",
    "try all",
    "brute force",
    "truth table",
    "one gate at a time",
    "step by step",
    "the best way",
    "the fastest way",
    "strategy",
    "hint",
];

/// Obfuscated gates are deliberately left unexplained.
pub const OBFUSCATION_TERMS: &[&str] = &[
    "camouflag",
    "covert",
    "obfuscat",
    "ink blot",
    "inkblot",
    "hidden function",
    "disguise",
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TutorialIssue {
    Empty,
    DuplicatePage(String),
    MissingTopic(Topic),
    BannedPhrase {
        page: String,
        phrase: &'static str,
    },
    MentionsObfuscation {
        page: String,
        term: &'static str,
    },
    InvalidCircuit {
        page: String,
        report: ValidationReport,
    },
    ObfuscatedGate {
        page: String,
        element: String,
    },
    IndirectInput {
        page: String,
        element: String,
    },
}

impl fmt::Display for TutorialIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TutorialIssue::Empty => f.write_str("tutorial has no pages"),
            TutorialIssue::DuplicatePage(id) => write!(f, "duplicate page id {id}"),
            TutorialIssue::MissingTopic(t) => write!(f, "no page covers {}", t.as_str()),
            TutorialIssue::BannedPhrase { page, phrase } => {
                write!(f, "page {page}: strategy phrase \"{phrase}\"")
            }
            TutorialIssue::MentionsObfuscation { page, term } => {
                write!(f, "page {page}: mentions \"{term}\"")
            }
            TutorialIssue::InvalidCircuit { page, report } => {
                write!(f, "page {page}: invalid circuit: {report}")
            }
            TutorialIssue::ObfuscatedGate { page, element } => {
                write!(f, "page {page}: obfuscated gate {element}")
            }
            TutorialIssue::IndirectInput { page, element } => {
                write!(
                    f,
                    "page {page}: gate {element} has an input not driven by a switch"
                )
            }
        }
    }
}

fn find_phrase<'p>(text: &str, phrases: &[&'p str]) -> Option<&'p str> {
    let lower = text.to_lowercase();
    phrases.iter().copied().find(|p| lower.contains(p))
}

/// Checks content rules. An empty result means the tutorial is usable.
pub fn lint(tutorial: &Tutorial) -> Vec<TutorialIssue> {
    let mut issues = Vec::new();
    if tutorial.pages.is_empty() {
        issues.push(TutorialIssue::Empty);
        return issues;
    }
    let mut seen = alloc::collections::BTreeSet::new();
    for page in &tutorial.pages {
        if !seen.insert(page.id.as_str()) {
            issues.push(TutorialIssue::DuplicatePage(page.id.clone()));
        }
        let text = [page.title.as_str(), page.body.as_str()].join("\n");
        if let Some(phrase) = find_phrase(&text, BANNED_PHRASES) {
            issues.push(TutorialIssue::BannedPhrase {
                page: page.id.clone(),
                phrase,
            });
        }
        if let Some(term) = find_phrase(&text, OBFUSCATION_TERMS) {
            issues.push(TutorialIssue::MentionsObfuscation {
                page: page.id.clone(),
                term,
            });
        }
        if let Some(netlist) = &page.circuit {
            check_circuit(&page.id, netlist, &mut issues);
        }
    }
    for topic in Topic::ELEMENTS {
        if !tutorial.pages.iter().any(|p| p.topic == topic) {
            issues.push(TutorialIssue::MissingTopic(topic));
        }
    }
    issues
}

fn check_circuit(page: &str, netlist: &Netlist, issues: &mut Vec<TutorialIssue>) {
    let report = validate_netlist(netlist);
    if !report.is_valid() {
        issues.push(TutorialIssue::InvalidCircuit {
            page: page.to_string(),
            report,
        });
        return;
    }
    let is_switch = |id: &str| {
        netlist
            .element(id)
            .is_some_and(|e| e.kind == ElementKind::Switch)
    };
    for el in &netlist.elements {
        match &el.kind {
            ElementKind::CamouflagedGate(_) | ElementKind::CovertGate { .. } => {
                issues.push(TutorialIssue::ObfuscatedGate {
                    page: page.to_string(),
                    element: el.id.clone(),
                });
            }
            ElementKind::AndGate | ElementKind::OrGate | ElementKind::NotGate => {
                let direct = netlist
                    .wires
                    .iter()
                    .filter(|w| w.to == el.id)
                    .all(|w| is_switch(&w.from));
                if !direct {
                    issues.push(TutorialIssue::IndirectInput {
                        page: page.to_string(),
                        element: el.id.clone(),
                    });
                }
            }
            _ => {}
        }
    }
}

/// Navigation through the tutorial pages.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TutorialProgress {
    pub page: usize,
    /// Highest page reached so far.
    pub furthest: usize,
    /// Set on revisits: any page may be opened.
    pub free: bool,
}

impl TutorialProgress {
    pub fn first_pass() -> Self {
        TutorialProgress {
            page: 0,
            furthest: 0,
            free: false,
        }
    }

    pub fn revisit(pages: usize) -> Self {
        TutorialProgress {
            page: 0,
            furthest: pages.saturating_sub(1),
            free: true,
        }
    }

    /// Whether `page` may be opened next.
    pub fn can_open(&self, page: usize, pages: usize) -> bool {
        page < pages && (self.free || page <= self.furthest + 1)
    }

    pub fn open(&mut self, page: usize) {
        self.page = page;
        self.furthest = self.furthest.max(page);
    }

    pub fn finished(&self, pages: usize) -> bool {
        self.free || self.furthest + 1 >= pages
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Element, Wire};
    use alloc::vec;

    fn and_page() -> TutorialPage {
        let netlist = Netlist::new(
            vec![
                Element::new("b1", ElementKind::Battery, 0, 0),
                Element::new("b2", ElementKind::Battery, 0, 2),
                Element::new("s1", ElementKind::Switch, 1, 0),
                Element::new("s2", ElementKind::Switch, 1, 2),
                Element::new("g", ElementKind::AndGate, 2, 1),
                Element::new("l", ElementKind::Lamp, 3, 1),
            ],
            vec![
                Wire::new("b1", "s1", 0),
                Wire::new("b2", "s2", 0),
                Wire::new("s1", "g", 0),
                Wire::new("s2", "g", 1),
                Wire::new("g", "l", 0),
            ],
        );
        TutorialPage {
            id: "and".into(),
            topic: Topic::And,
            title: "AND".into(),
            body: "The lamp lights when both switches are closed.".into(),
            circuit: Some(netlist),
        }
    }

    #[test]
    fn flags_banned_phrase_case_insensitively() {
        let mut p = and_page();
        p.body = "Start From The Output and see.".into();
        let issues = lint(&Tutorial { pages: vec![p] });
        assert!(issues.iter().any(|i| matches!(
            i,
            TutorialIssue::BannedPhrase {
                phrase: "start from the output",
                ..
            }
        )));
    }

    #[test]
    fn flags_obfuscation_and_missing_topics() {
        let mut p = and_page();
        p.body = "Some gates are camouflaged.".into();
        let issues = lint(&Tutorial { pages: vec![p] });
        assert!(issues
            .iter()
            .any(|i| matches!(i, TutorialIssue::MentionsObfuscation { .. })));
        assert!(issues.contains(&TutorialIssue::MissingTopic(Topic::Battery)));
        assert!(!issues.contains(&TutorialIssue::MissingTopic(Topic::And)));
    }

    #[test]
    fn gate_inputs_must_come_from_switches() {
        let mut p = and_page();
        let n = p.circuit.as_mut().unwrap();
        n.elements
            .push(Element::new("inv", ElementKind::NotGate, 2, 3));
        n.wires.retain(|w| !(w.to == "g" && w.to_port == 1));
        n.wires.push(Wire::new("s2", "inv", 0));
        n.wires.push(Wire::new("inv", "g", 1));
        let issues = lint(&Tutorial { pages: vec![p] });
        assert!(issues.contains(&TutorialIssue::IndirectInput {
            page: "and".into(),
            element: "g".into()
        }));
    }

    #[test]
    fn navigation_rules() {
        let mut t = TutorialProgress::first_pass();
        assert!(t.can_open(1, 5));
        assert!(!t.can_open(3, 5));
        t.open(1);
        t.open(2);
        assert!(t.can_open(0, 5));
        assert!(!t.finished(5));
        let r = TutorialProgress::revisit(5);
        assert!(r.can_open(4, 5) && r.finished(5));
        assert!(!r.can_open(5, 5));
    }
}
