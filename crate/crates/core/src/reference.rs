//! Published parameters of the shipped task library: gate counts, output
//! types and solution sets for the four qualification tasks and the twelve
//! experiment tasks.

use crate::task::Group;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReferenceTask {
    pub id: &'static str,
    pub group: Group,
    pub and: u32,
    pub or: u32,
    pub inverters: u32,
    pub camouflaged: u32,
    pub total: u32,
    /// `1` = lamp, `0` = danger sign, top to bottom.
    pub target: &'static str,
    pub outputs: u32,
    pub solutions: &'static [&'static str],
}

macro_rules! row {
    ($id:literal, $g:ident, $and:literal, $or:literal, $inv:literal, $camo:literal, $total:literal, $target:literal, $outs:literal, [$($sol:literal),+]) => {
        ReferenceTask {
            id: $id,
            group: Group::$g,
            and: $and,
            or: $or,
            inverters: $inv,
            camouflaged: $camo,
            total: $total,
            target: $target,
            outputs: $outs,
            solutions: &[$($sol),+],
        }
    };
}

pub const REFERENCE_TASKS: [ReferenceTask; 16] = [
    row!("Q1", Qualification, 2, 0, 0, 0, 2, "1", 1, ["111"]),
    row!("Q2", Qualification, 1, 1, 1, 0, 3, "1", 1, ["010"]),
    row!("Q3", Qualification, 0, 2, 2, 0, 4, "0", 1, ["110"]),
    row!("Q4", Qualification, 1, 2, 0, 0, 3, "0", 1, ["000", "100"]),
    row!("A1", A, 1, 1, 1, 0, 3, "1", 1, ["001", "100", "101"]),
    row!("A2", A, 1, 1, 1, 0, 3, "1", 1, ["000", "100", "010"]),
    row!("B1", B, 3, 3, 3, 0, 9, "00", 2, ["000"]),
    row!("B2", B, 1, 4, 4, 0, 9, "00", 2, ["101"]),
    row!("B3", B, 2, 3, 2, 0, 7, "11", 2, ["011"]),
    row!("B4", B, 3, 3, 2, 0, 8, "10", 2, ["110"]),
    row!("C1", C, 3, 5, 4, 0, 12, "001", 3, ["011"]),
    row!("C2", C, 2, 5, 5, 0, 12, "100", 3, ["100"]),
    row!("C3", C, 7, 3, 8, 0, 18, "100", 3, ["110"]),
    row!("C4", C, 7, 3, 6, 0, 16, "011", 3, ["100"]),
    row!("D1", D, 2, 3, 2, 1, 8, "01", 2, ["111"]),
    row!("D2", D, 2, 3, 2, 1, 8, "01", 2, ["010"]),
];

pub fn lookup(id: &str) -> Option<&'static ReferenceTask> {
    REFERENCE_TASKS.iter().find(|r| r.id == id)
}
