//! Shared domain types: score tables and fusion configurations.
//!
//! A [`ScoreTable`] holds `n` items scored by `t` systems, stored column-wise
//! so each system's score function is a contiguous slice. Tables are
//! immutable once built; every transformation returns a new table.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{CfaError, Result};

/// Which split of the data a table (or a set of weights) came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Test,
}

impl SplitTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitTag::Train => "train",
            SplitTag::Test => "test",
        }
    }
}

impl fmt::Display for SplitTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SplitTag {
    type Err = CfaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(SplitTag::Train),
            "test" => Ok(SplitTag::Test),
            other => Err(CfaError::config(format!("unknown split '{other}'"))),
        }
    }
}

/// One structural problem found by [`validate_table`].
///
/// Row numbers are 1-based data rows (the header is not counted).
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoItems,
    NoSystems,
    DuplicateItemId { id: String, first_row: usize, row: usize },
    EmptySystemId { column: usize },
    DuplicateSystemId { id: String },
    ColumnCountMismatch { systems: usize, columns: usize },
    ColumnLengthMismatch { system: String, expected: usize, got: usize },
    LabelCountMismatch { expected: usize, got: usize },
    NonFiniteScore { row: usize, system: String, value: f64 },
    InvalidLabel { row: usize, value: u8 },
    PartialLabels { labeled: usize, total: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoItems => write!(f, "table has no items"),
            Violation::NoSystems => write!(f, "table has no systems"),
            Violation::DuplicateItemId { id, first_row, row } => {
                write!(f, "duplicate item id '{id}' at rows {first_row} and {row}")
            }
            Violation::EmptySystemId { column } => write!(f, "empty system id in column {column}"),
            Violation::DuplicateSystemId { id } => write!(f, "duplicate system id '{id}'"),
            Violation::ColumnCountMismatch { systems, columns } => {
                write!(f, "{systems} system ids but {columns} score columns")
            }
            Violation::ColumnLengthMismatch { system, expected, got } => {
                write!(f, "system {system} has {got} scores, expected {expected}")
            }
            Violation::LabelCountMismatch { expected, got } => {
                write!(f, "{got} label cells, expected {expected}")
            }
            Violation::NonFiniteScore { row, system, value } => {
                write!(f, "non-finite score {value} at row {row}, system {system}")
            }
            Violation::InvalidLabel { row, value } => {
                write!(f, "label {value} at row {row} is not 0 or 1")
            }
            Violation::PartialLabels { labeled, total } => {
                write!(f, "partial labels: {labeled} of {total} items labeled")
            }
        }
    }
}

/// Result of [`validate_table`]; empty means the table is well formed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// `n` items by `t` systems of real-valued scores, with optional binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    split: SplitTag,
    item_ids: Vec<String>,
    labels: Vec<Option<u8>>,
    system_ids: Vec<String>,
    columns: Vec<Vec<f64>>,
    normalized: bool,
}

impl ScoreTable {
    /// Builds a validated table. `columns[j]` holds the scores of `system_ids[j]`.
    pub fn new(
        split: SplitTag,
        item_ids: Vec<String>,
        labels: Option<Vec<u8>>,
        system_ids: Vec<String>,
        columns: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let cells = match labels {
            Some(l) => l.into_iter().map(Some).collect(),
            None => vec![None; item_ids.len()],
        };
        Self::from_label_cells(split, item_ids, cells, system_ids, columns)
    }

    /// Builds a validated table from per-item label cells (`None` = empty cell).
    pub fn from_label_cells(
        split: SplitTag,
        item_ids: Vec<String>,
        labels: Vec<Option<u8>>,
        system_ids: Vec<String>,
        columns: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let table = Self::new_unchecked(split, item_ids, labels, system_ids, columns);
        let report = validate_table(&table);
        if report.is_ok() {
            Ok(table)
        } else {
            Err(CfaError::InvalidTable(report))
        }
    }

    /// Builds a table without checking any invariant. Only [`validate_table`]
    /// is safe to call on the result until it has been checked.
    pub fn new_unchecked(
        split: SplitTag,
        item_ids: Vec<String>,
        labels: Vec<Option<u8>>,
        system_ids: Vec<String>,
        columns: Vec<Vec<f64>>,
    ) -> Self {
        ScoreTable { split, item_ids, labels, system_ids, columns, normalized: false }
    }

    pub(crate) fn with_columns(&self, columns: Vec<Vec<f64>>, normalized: bool) -> Self {
        ScoreTable {
            split: self.split,
            item_ids: self.item_ids.clone(),
            labels: self.labels.clone(),
            system_ids: self.system_ids.clone(),
            columns,
            normalized,
        }
    }

    /// Same table relabeled as coming from another split.
    pub fn with_split(&self, split: SplitTag) -> Self {
        ScoreTable { split, ..self.clone() }
    }

    pub fn split(&self) -> SplitTag {
        self.split
    }

    pub fn n_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn n_systems(&self) -> usize {
        self.system_ids.len()
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn system_ids(&self) -> &[String] {
        &self.system_ids
    }

    pub fn system_index(&self, id: &str) -> Option<usize> {
        self.system_ids.iter().position(|s| s == id)
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn score(&self, item: usize, system: usize) -> f64 {
        self.columns[system][item]
    }

    /// Raw label cells, one per item.
    pub fn label_cells(&self) -> &[Option<u8>] {
        &self.labels
    }

    pub fn has_labels(&self) -> bool {
        !self.labels.is_empty() && self.labels.iter().all(Option::is_some)
    }

    /// All labels, or `None` when the table is unlabeled.
    pub fn labels(&self) -> Option<Vec<u8>> {
        if self.has_labels() {
            Some(self.labels.iter().map(|l| l.unwrap_or(0)).collect())
        } else {
            None
        }
    }

    /// Labels, or [`CfaError::MissingLabels`].
    pub fn require_labels(&self) -> Result<Vec<u8>> {
        self.labels().ok_or(CfaError::MissingLabels)
    }

    /// True once the table has passed through min-max normalization.
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Fraction of positive labels, if labeled.
    pub fn positive_fraction(&self) -> Option<f64> {
        let labels = self.labels()?;
        let pos = labels.iter().filter(|&&l| l == 1).count();
        Some(pos as f64 / labels.len() as f64)
    }
}

/// Checks every structural invariant of a table and lists what is wrong.
pub fn validate_table(table: &ScoreTable) -> ValidationReport {
    let mut violations = Vec::new();
    let n = table.item_ids.len();

    if n == 0 {
        violations.push(Violation::NoItems);
    }
    if table.system_ids.is_empty() {
        violations.push(Violation::NoSystems);
    }

    let mut seen = std::collections::HashMap::with_capacity(n);
    for (i, id) in table.item_ids.iter().enumerate() {
        if let Some(first) = seen.insert(id.as_str(), i) {
            violations.push(Violation::DuplicateItemId {
                id: id.clone(),
                first_row: first + 1,
                row: i + 1,
            });
        }
    }

    let mut systems = HashSet::new();
    for (j, id) in table.system_ids.iter().enumerate() {
        if id.is_empty() {
            violations.push(Violation::EmptySystemId { column: j + 1 });
        } else if !systems.insert(id.as_str()) {
            violations.push(Violation::DuplicateSystemId { id: id.clone() });
        }
    }

    if table.columns.len() != table.system_ids.len() {
        violations.push(Violation::ColumnCountMismatch {
            systems: table.system_ids.len(),
            columns: table.columns.len(),
        });
    }
    for (j, col) in table.columns.iter().enumerate() {
        let system = table.system_ids.get(j).cloned().unwrap_or_else(|| format!("#{}", j + 1));
        if col.len() != n {
            violations.push(Violation::ColumnLengthMismatch {
                system: system.clone(),
                expected: n,
                got: col.len(),
            });
        }
        for (i, &v) in col.iter().enumerate() {
            if !v.is_finite() {
                violations.push(Violation::NonFiniteScore { row: i + 1, system: system.clone(), value: v });
            }
        }
    }

    if table.labels.len() != n {
        violations.push(Violation::LabelCountMismatch { expected: n, got: table.labels.len() });
    }
    let labeled = table.labels.iter().filter(|l| l.is_some()).count();
    if labeled != 0 && labeled != table.labels.len() {
        violations.push(Violation::PartialLabels { labeled, total: table.labels.len() });
    }
    for (i, l) in table.labels.iter().enumerate() {
        if let Some(v) = *l {
            if v > 1 {
                violations.push(Violation::InvalidLabel { row: i + 1, value: v });
            }
        }
    }

    ValidationReport { violations }
}

/// Projects a table onto the named systems, in the order given.
pub fn select_systems<S: AsRef<str>>(table: &ScoreTable, subset: &[S]) -> Result<ScoreTable> {
    if subset.is_empty() {
        return Err(CfaError::config("empty system selection"));
    }
    let mut ids = Vec::with_capacity(subset.len());
    let mut columns = Vec::with_capacity(subset.len());
    for id in subset {
        let id = id.as_ref();
        let j = table.system_index(id).ok_or_else(|| CfaError::UnknownSystem(id.to_string()))?;
        ids.push(id.to_string());
        columns.push(table.columns[j].clone());
    }
    Ok(ScoreTable {
        split: table.split,
        item_ids: table.item_ids.clone(),
        labels: table.labels.clone(),
        system_ids: ids,
        columns,
        normalized: table.normalized,
    })
}

/// The six combination rules. Declaration order is the report tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Method {
    #[serde(rename = "ASC")]
    Asc,
    #[serde(rename = "ARC")]
    Arc,
    #[serde(rename = "WCP-SC")]
    WcpSc,
    #[serde(rename = "WCP-RC")]
    WcpRc,
    #[serde(rename = "WCDS-SC")]
    WcdsSc,
    #[serde(rename = "WCDS-RC")]
    WcdsRc,
}

/// Where a method's weights come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    Equal,
    Performance,
    DiversityStrength,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::Asc, Method::Arc, Method::WcpSc, Method::WcpRc, Method::WcdsSc, Method::WcdsRc];

    /// True for score combinations, false for rank combinations.
    pub fn is_score(self) -> bool {
        matches!(self, Method::Asc | Method::WcpSc | Method::WcdsSc)
    }

    pub fn weighting(self) -> Weighting {
        match self {
            Method::Asc | Method::Arc => Weighting::Equal,
            Method::WcpSc | Method::WcpRc => Weighting::Performance,
            Method::WcdsSc | Method::WcdsRc => Weighting::DiversityStrength,
        }
    }

    /// Whether the weight split matters for this method.
    pub fn uses_weight_split(self) -> bool {
        self.weighting() != Weighting::Equal
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Asc => "ASC",
            Method::Arc => "ARC",
            Method::WcpSc => "WCP-SC",
            Method::WcpRc => "WCP-RC",
            Method::WcdsSc => "WCDS-SC",
            Method::WcdsRc => "WCDS-RC",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = CfaError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().to_ascii_lowercase() == norm)
            .ok_or_else(|| CfaError::config(format!("unknown method '{s}'")))
    }
}

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// One fusion cell: which systems, which rule, and the decision parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FusionSpec {
    pub subset: Vec<String>,
    pub method: Method,
    /// Split the weights are computed on. Ignored by ASC and ARC.
    pub weight_split: SplitTag,
    /// Decision threshold for score combinations.
    pub threshold: f64,
    /// Expected positive fraction for the top-k cut of rank combinations.
    pub positive_prior: f64,
}

impl FusionSpec {
    pub fn new<S: Into<String>>(
        subset: impl IntoIterator<Item = S>,
        method: Method,
        weight_split: SplitTag,
        positive_prior: f64,
    ) -> Self {
        FusionSpec {
            subset: subset.into_iter().map(Into::into).collect(),
            method,
            weight_split,
            threshold: DEFAULT_THRESHOLD,
            positive_prior,
        }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    /// Test-split weights are computed from the batch being classified.
    pub fn is_transductive(&self) -> bool {
        self.method.uses_weight_split() && self.weight_split == SplitTag::Test
    }

    /// Checks the subset against a table and the decision parameters.
    pub fn validate(&self, table: &ScoreTable) -> Result<()> {
        if self.subset.len() < 2 {
            return Err(CfaError::config(format!(
                "fusion needs at least 2 systems, got {}",
                self.subset.len()
            )));
        }
        let mut seen = HashSet::new();
        for id in &self.subset {
            if !seen.insert(id.as_str()) {
                return Err(CfaError::config(format!("system {id} listed twice")));
            }
            if table.system_index(id).is_none() {
                return Err(CfaError::UnknownSystem(id.clone()));
            }
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(CfaError::config(format!("threshold {} outside [0,1]", self.threshold)));
        }
        if !(self.positive_prior > 0.0 && self.positive_prior < 1.0) {
            return Err(CfaError::config(format!(
                "positive prior {} outside (0,1)",
                self.positive_prior
            )));
        }
        Ok(())
    }
}
