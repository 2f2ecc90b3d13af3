//! Core model for logic-circuit reverse-engineering studies.
//!
//! Everything in this crate is pure and allocation-only (`no_std` + `alloc`):
//! the combinational circuit model and evaluator, Boolean nonlinearity, the
//! task model and design checks, the per-participant study state machine,
//! the digital number-connection test, tutorial content checks, and the
//! analysis routines that turn session logs into performance measures.
//!
//! File formats, persistence, the HTTP service and the command line tools
//! live in the `circuitlab` companion crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analytics;
pub mod circuit;
pub mod engine;
pub mod event;
pub mod nonlinearity;
pub mod reference;
pub mod task;
pub mod time;
pub mod tutorial;
pub mod view;
pub mod zvt;

pub use circuit::{
    CircuitError, CircuitState, ElementKind, GateFn, GateTruth, Netlist, SwitchAssignment,
};
pub use engine::{Session, SessionState, StudyConfig, StudyContent};
pub use event::{Event, EventRecord};
pub use task::{Group, Task};
pub use time::{Millis, Pseudonym};
