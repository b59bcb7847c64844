//! Score-file parsing and min-max normalization fitted on training ranges.
//!
//! Score files are plain CSV: a header `item_id,label,<sys1>,...,<sysT>`,
//! then one row per item. Label cells are `0`, `1` or empty (all rows must
//! agree on presence). No quoting is supported, so ids cannot contain commas.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::error::{CfaError, Result};
use crate::model::{ScoreTable, SplitTag};

fn parse_err(line: usize, message: impl Into<String>) -> CfaError {
    CfaError::Parse { line, message: message.into() }
}

/// Parses raw bytes of a score file. Input must be UTF-8.
pub fn parse_score_file(bytes: &[u8], split: SplitTag) -> Result<ScoreTable> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let line = 1 + bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count();
        parse_err(line, "input is not valid UTF-8")
    })?;
    parse_score_str(text, split)
}

pub fn parse_score_str(text: &str, split: SplitTag) -> Result<ScoreTable> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut lines = text.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l));

    let header = lines.next().unwrap_or("");
    let fields: Vec<&str> = header.split(',').collect();
    if fields.len() < 3 || fields[0] != "item_id" || fields[1] != "label" {
        return Err(parse_err(1, "header must be item_id,label,<system>,..."));
    }
    let system_ids: Vec<String> = fields[2..].iter().map(|s| s.to_string()).collect();
    let mut seen = HashSet::new();
    for id in &system_ids {
        if id.is_empty() {
            return Err(parse_err(1, "empty system id in header"));
        }
        if !seen.insert(id.as_str()) {
            return Err(parse_err(1, format!("duplicate system id '{id}'")));
        }
    }

    let t = system_ids.len();
    let mut item_ids = Vec::new();
    let mut labels = Vec::new();
    let mut columns = vec![Vec::new(); t];
    let mut item_rows: HashMap<String, usize> = HashMap::new();
    let mut label_presence: Option<bool> = None;

    let body: Vec<&str> = lines.collect();
    // A single trailing newline leaves one empty element at the end.
    let body_len = match body.last() {
        Some(last) if last.is_empty() => body.len() - 1,
        _ => body.len(),
    };

    for (offset, line) in body[..body_len].iter().enumerate() {
        let line_no = offset + 2;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != t + 2 {
            return Err(parse_err(line_no, format!("expected {} fields, found {}", t + 2, cells.len())));
        }
        let id = cells[0];
        if id.is_empty() {
            return Err(parse_err(line_no, "empty item id"));
        }
        if let Some(first) = item_rows.insert(id.to_string(), line_no) {
            return Err(parse_err(line_no, format!("duplicate item id '{id}' (first seen on line {first})")));
        }
        let label = match cells[1] {
            "" => None,
            "0" => Some(0u8),
            "1" => Some(1u8),
            other => return Err(parse_err(line_no, format!("label must be 0, 1 or empty, found '{other}'"))),
        };
        match label_presence {
            None => label_presence = Some(label.is_some()),
            Some(present) if present != label.is_some() => {
                return Err(parse_err(line_no, "mixed present and absent labels"));
            }
            _ => {}
        }
        for (j, cell) in cells[2..].iter().enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(line_no, format!("cannot parse score '{cell}' for system {}", system_ids[j])))?;
            if !v.is_finite() {
                return Err(parse_err(line_no, format!("non-finite score '{cell}' for system {}", system_ids[j])));
            }
            columns[j].push(v);
        }
        item_ids.push(id.to_string());
        labels.push(label);
    }

    if item_ids.is_empty() {
        return Err(parse_err(2, "no data rows"));
    }
    ScoreTable::from_label_cells(split, item_ids, labels, system_ids, columns)
}

/// Serializes a table in the score-file grammar. Scores use the shortest
/// representation that parses back to the same `f64`.
pub fn write_score_file(table: &ScoreTable) -> String {
    let mut out = String::with_capacity(table.n_items() * (12 + 20 * table.n_systems()));
    out.push_str("item_id,label");
    for id in table.system_ids() {
        out.push(',');
        out.push_str(id);
    }
    out.push('\n');
    for (i, id) in table.item_ids().iter().enumerate() {
        out.push_str(id);
        out.push(',');
        if let Some(l) = table.label_cells()[i] {
            let _ = write!(out, "{l}");
        }
        for j in 0..table.n_systems() {
            let _ = write!(out, ",{}", table.score(i, j));
        }
        out.push('\n');
    }
    out
}

/// Per-system score range observed on the training split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

/// Min-max constants for each system, keyed by system id.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationParams {
    entries: Vec<(String, Range)>,
}

impl NormalizationParams {
    pub fn get(&self, system: &str) -> Option<Range> {
        self.entries.iter().find(|(id, _)| id == system).map(|(_, r)| *r)
    }

    pub fn entries(&self) -> &[(String, Range)] {
        &self.entries
    }
}

/// Fits per-system min and max over a (training) table.
pub fn min_max_fit(train: &ScoreTable) -> NormalizationParams {
    let entries = train
        .system_ids()
        .iter()
        .zip(train.columns())
        .map(|(id, col)| {
            let min = col.iter().copied().fold(f64::INFINITY, f64::min);
            let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (id.clone(), Range { min, max })
        })
        .collect();
    NormalizationParams { entries }
}

/// Maps one score through a fitted range: `(x - min) / (max - min)` clamped
/// to `[0, 1]`, or 0.5 for a constant system.
pub fn normalize_value(x: f64, range: Range) -> f64 {
    if range.min == range.max {
        return 0.5;
    }
    ((x - range.min) / (range.max - range.min)).clamp(0.0, 1.0)
}

/// Applies fitted ranges to every system of a table.
pub fn min_max_apply(table: &ScoreTable, params: &NormalizationParams) -> Result<ScoreTable> {
    let mut columns = Vec::with_capacity(table.n_systems());
    for (id, col) in table.system_ids().iter().zip(table.columns()) {
        let range = params.get(id).ok_or_else(|| CfaError::MissingNormalization(id.clone()))?;
        columns.push(col.iter().map(|&x| normalize_value(x, range)).collect());
    }
    Ok(table.with_columns(columns, true))
}
