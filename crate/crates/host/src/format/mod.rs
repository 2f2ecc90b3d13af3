//! Text formats for tasks, training circuits and ZVT layouts.

pub mod task;
pub mod zvt;

pub use task::{parse_netlist, parse_task, serialize_netlist, serialize_task, ParseError};
pub use zvt::{parse_zvt, serialize_zvt};
