//! ZVT matrix layouts.
//!
//! ```text
//! id = test-1
//! kind = test
//! grid = 10x9
//!
//! 1 4 0
//! 2 7 3
//! ...
//! ```
//!
//! Header lines are `key = value`; every other line is
//! `<number> <column> <row>` with 0-based cells. See `docs/zvt-format.md`.

use std::fmt::Write as _;

use circuitlab_core::zvt::{ZvtKind, ZvtMatrix};

use super::task::ParseError;

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        line,
        column: 1,
        message: message.into(),
    })
}

pub fn parse_zvt(doc: &str) -> Result<ZvtMatrix, ParseError> {
    let mut id = None;
    let mut kind = None;
    let mut grid = None;
    let mut cells: Vec<(usize, u16, (u16, u16))> = Vec::new();
    for (i, raw) in doc.lines().enumerate() {
        let no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some((k, v)) = line.split_once('=') {
            let v = v.trim();
            let slot = match k.trim() {
                "id" => &mut id,
                "kind" => &mut kind,
                "grid" => &mut grid,
                other => return err(no, format!("unknown key '{other}'")),
            };
            if slot.is_some() {
                return err(no, format!("key '{}' repeated", k.trim()));
            }
            *slot = Some((no, v.to_string()));
            continue;
        }
        let nums: Vec<u16> = match line.split_whitespace().map(str::parse).collect() {
            Ok(v) => v,
            Err(_) => return err(no, "expected: <number> <column> <row>"),
        };
        let [n, c, r] = nums[..] else {
            return err(no, "expected: <number> <column> <row>");
        };
        cells.push((no, n, (c, r)));
    }
    let Some((_, id)) = id else {
        return err(1, "missing key 'id'");
    };
    let kind = match kind {
        Some((_, k)) if k == "example" => ZvtKind::Example,
        Some((_, k)) if k == "test" => ZvtKind::Test,
        Some((no, k)) => return err(no, format!("unknown matrix kind '{k}'")),
        None => return err(1, "missing key 'kind'"),
    };
    let (cols, rows) = kind.grid();
    match grid {
        Some((no, g)) if g != format!("{cols}x{rows}") => {
            return err(
                no,
                format!("grid of a {kind:?} matrix must be {cols}x{rows}"),
            )
        }
        _ => {}
    }
    let max = kind.max_number();
    let mut positions = vec![None; usize::from(max)];
    for (no, n, cell) in cells {
        if n == 0 || n > max {
            return err(no, format!("number {n} is outside 1..={max}"));
        }
        if positions[usize::from(n) - 1].replace(cell).is_some() {
            return err(no, format!("number {n} listed twice"));
        }
    }
    let positions: Vec<(u16, u16)> = match positions.iter().position(Option::is_none) {
        Some(missing) => return err(1, format!("number {} has no cell", missing + 1)),
        None => positions.into_iter().flatten().collect(),
    };
    ZvtMatrix::new(id, kind, positions).or_else(|e| err(1, e.to_string()))
}

pub fn serialize_zvt(m: &ZvtMatrix) -> String {
    let (cols, rows) = m.kind.grid();
    let kind = match m.kind {
        ZvtKind::Example => "example",
        ZvtKind::Test => "test",
    };
    let mut out = format!("id = {}\nkind = {kind}\ngrid = {cols}x{rows}\n\n", m.id);
    for (i, (c, r)) in m.positions.iter().enumerate() {
        let _ = writeln!(out, "{} {c} {r}", i + 1);
    }
    out
}
