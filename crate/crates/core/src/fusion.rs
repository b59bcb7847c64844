//! The six combination rules and the subset × method sweep.
//!
//! Score combinations average normalized scores with weights `w_j`. Rank
//! combinations average ranks; with [`RcWeighting::Reciprocal`] (the
//! default) performance and diversity weights enter as `1 / w_j`, so the
//! fused rank is `Σ (1/w_j) r_j / Σ (1/w_j)`. Lower fused rank is more
//! positive.

use std::cmp::Ordering;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::diversity::{diversity_matrix, diversity_strength, DiversityMatrix, WeightKind, WeightVector};
use crate::error::{CfaError, Result};
use crate::evaluate::{
    classify_top_k, compute_metrics, optimize_threshold, threshold_predictions, EvalReport, Metrics,
};
use crate::ingest::{min_max_apply, min_max_fit, NormalizationParams};
use crate::model::{select_systems, FusionSpec, Method, ScoreTable, SplitTag, Weighting, DEFAULT_THRESHOLD};
use crate::ranking::{rank_table, rsc_profiles, TiePolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionKind {
    ScoreCombination,
    RankCombination,
}

impl FusionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FusionKind::ScoreCombination => "score combination",
            FusionKind::RankCombination => "rank combination",
        }
    }
}

/// How performance and diversity weights enter a rank combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RcWeighting {
    /// Weight each rank by `1 / w_j`.
    #[default]
    Reciprocal,
    /// Weight each rank by `w_j`, as for scores.
    Direct,
}

impl fmt::Display for RcWeighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RcWeighting::Reciprocal => "reciprocal",
            RcWeighting::Direct => "direct",
        })
    }
}

impl FromStr for RcWeighting {
    type Err = CfaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reciprocal" => Ok(RcWeighting::Reciprocal),
            "direct" => Ok(RcWeighting::Direct),
            other => Err(CfaError::config(format!("unknown rc weighting '{other}'"))),
        }
    }
}

/// A fused score (SC) or fused rank (RC) per item.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedColumn {
    pub kind: FusionKind,
    pub values: Vec<f64>,
    pub provenance: Option<FusionSpec>,
}

fn check_weights(columns: &[&[f64]], weights: &WeightVector) -> Result<()> {
    if columns.len() < 2 {
        return Err(CfaError::config(format!("fusion needs at least 2 columns, got {}", columns.len())));
    }
    if weights.weights.len() != columns.len() {
        return Err(CfaError::LengthMismatch { expected: columns.len(), got: weights.weights.len() });
    }
    let n = columns[0].len();
    if let Some(c) = columns.iter().find(|c| c.len() != n) {
        return Err(CfaError::LengthMismatch { expected: n, got: c.len() });
    }
    for (j, &w) in weights.weights.iter().enumerate() {
        if !w.is_finite() || w < 0.0 {
            let system = weights.system_ids.get(j).cloned().unwrap_or_default();
            return Err(CfaError::InvalidWeight { system, value: w });
        }
    }
    Ok(())
}

/// `Σ_j w_j x_j(i) / Σ_j w_j` for every item, accumulating in column order.
fn weighted_mean(columns: &[&[f64]], weights: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(CfaError::ZeroWeightSum);
    }
    let mut acc = vec![0.0; columns[0].len()];
    for (col, &w) in columns.iter().zip(weights) {
        for (a, &x) in acc.iter_mut().zip(col.iter()) {
            *a += w * x;
        }
    }
    for a in &mut acc {
        *a /= total;
    }
    Ok(acc)
}

/// Weighted average of normalized score columns.
pub fn combine_scores(columns: &[&[f64]], weights: &WeightVector) -> Result<FusedColumn> {
    check_weights(columns, weights)?;
    Ok(FusedColumn {
        kind: FusionKind::ScoreCombination,
        values: weighted_mean(columns, &weights.weights)?,
        provenance: None,
    })
}

/// Effective per-system weights for a rank combination.
pub fn rank_weights(weights: &WeightVector, rc_weighting: RcWeighting) -> Result<Vec<f64>> {
    if weights.kind == WeightKind::Equal || rc_weighting == RcWeighting::Direct {
        return Ok(weights.weights.clone());
    }
    weights
        .weights
        .iter()
        .enumerate()
        .map(|(j, &w)| {
            if w == 0.0 {
                Err(CfaError::ZeroWeight(weights.system_ids.get(j).cloned().unwrap_or_default()))
            } else {
                Ok(1.0 / w)
            }
        })
        .collect()
}

/// Weighted average of rank columns; lower is more positive.
pub fn combine_ranks(columns: &[&[f64]], weights: &WeightVector, rc_weighting: RcWeighting) -> Result<FusedColumn> {
    check_weights(columns, weights)?;
    let effective = rank_weights(weights, rc_weighting)?;
    Ok(FusedColumn {
        kind: FusionKind::RankCombination,
        values: weighted_mean(columns, &effective)?,
        provenance: None,
    })
}

fn accuracy_at(column: &[f64], labels: &[u8], threshold: f64) -> f64 {
    let correct = column.iter().zip(labels).filter(|(&s, &l)| u8::from(s >= threshold) == l).count();
    correct as f64 / labels.len() as f64
}

/// Accuracy of each listed system at `threshold`, as fusion weights.
pub fn performance_weights<S: AsRef<str>>(table: &ScoreTable, subset: &[S], threshold: f64) -> Result<WeightVector> {
    let labels = table.require_labels()?;
    let mut ids = Vec::with_capacity(subset.len());
    let mut weights = Vec::with_capacity(subset.len());
    for id in subset {
        let id = id.as_ref();
        let j = table.system_index(id).ok_or_else(|| CfaError::UnknownSystem(id.to_string()))?;
        ids.push(id.to_string());
        weights.push(accuracy_at(table.column(j), &labels, threshold));
    }
    Ok(WeightVector {
        system_ids: ids,
        weights,
        kind: WeightKind::Performance,
        source_split: Some(table.split()),
        fallback: false,
    })
}

/// Options shared by every cell of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionOptions {
    pub rc_weighting: RcWeighting,
    pub tie_policy: TiePolicy,
    /// Replace the SC threshold by the one maximizing training accuracy.
    pub optimize_threshold: bool,
}

impl Default for FusionOptions {
    fn default() -> Self {
        FusionOptions { rc_weighting: RcWeighting::Reciprocal, tie_policy: TiePolicy::StableOrdinal, optimize_threshold: false }
    }
}

/// Per-split statistics reused by every cell.
#[derive(Debug, Clone)]
struct SplitStats {
    table: ScoreTable,
    labels: Option<Vec<u8>>,
    diversity: DiversityMatrix,
}

/// Normalized train/test tables plus everything a cell needs that does not
/// depend on the subset: test ranks and full diversity matrices.
#[derive(Debug, Clone)]
pub struct FusionContext {
    params: NormalizationParams,
    train: SplitStats,
    test: SplitStats,
    test_ranks: Vec<Vec<f64>>,
    options: FusionOptions,
}

impl FusionContext {
    /// Fits min-max ranges on `train`, normalizes both splits and aligns the
    /// test columns to the training system order.
    pub fn new(train: &ScoreTable, test: &ScoreTable, options: FusionOptions) -> Result<Self> {
        if train.n_systems() < 2 {
            return Err(CfaError::config(format!("need at least 2 systems, got {}", train.n_systems())));
        }
        if test.n_systems() != train.n_systems() {
            return Err(CfaError::config(format!(
                "train has {} systems but test has {}",
                train.n_systems(),
                test.n_systems()
            )));
        }
        let test = select_systems(test, train.system_ids())?;
        let params = min_max_fit(train);
        let train_norm = min_max_apply(train, &params)?;
        let test_norm = min_max_apply(&test, &params)?;
        let test_ranks = rank_table(&test_norm, options.tie_policy).ranks;
        Ok(FusionContext {
            params,
            train: Self::stats(train_norm)?,
            test: Self::stats(test_norm)?,
            test_ranks,
            options,
        })
    }

    fn stats(table: ScoreTable) -> Result<SplitStats> {
        let diversity = diversity_matrix(&rsc_profiles(&table), table.split())?;
        Ok(SplitStats { labels: table.labels(), diversity, table })
    }

    fn split(&self, tag: SplitTag) -> &SplitStats {
        match tag {
            SplitTag::Train => &self.train,
            SplitTag::Test => &self.test,
        }
    }

    pub fn params(&self) -> &NormalizationParams {
        &self.params
    }

    pub fn options(&self) -> FusionOptions {
        self.options
    }

    pub fn normalized_train(&self) -> &ScoreTable {
        &self.train.table
    }

    pub fn normalized_test(&self) -> &ScoreTable {
        &self.test.table
    }

    pub fn system_ids(&self) -> &[String] {
        self.train.table.system_ids()
    }

    /// Positive fraction of the training labels.
    pub fn train_prior(&self) -> Result<f64> {
        self.train.table.positive_fraction().ok_or(CfaError::MissingLabels)
    }

    pub fn diversity(&self, split: SplitTag) -> &DiversityMatrix {
        &self.split(split).diversity
    }

    fn indices(&self, subset: &[String]) -> Result<Vec<usize>> {
        subset
            .iter()
            .map(|id| self.train.table.system_index(id).ok_or_else(|| CfaError::UnknownSystem(id.clone())))
            .collect()
    }

    /// Weights a method uses for the given systems.
    pub fn weights(&self, idx: &[usize], method: Method, split: SplitTag, threshold: f64) -> Result<WeightVector> {
        let ids: Vec<String> = idx.iter().map(|&j| self.system_ids()[j].clone()).collect();
        match method.weighting() {
            Weighting::Equal => Ok(WeightVector::equal(&ids)),
            Weighting::Performance => {
                let stats = self.split(split);
                let labels = stats.labels.as_ref().ok_or(CfaError::MissingLabels)?;
                let weights = idx.iter().map(|&j| accuracy_at(stats.table.column(j), labels, threshold)).collect();
                Ok(WeightVector {
                    system_ids: ids,
                    weights,
                    kind: WeightKind::Performance,
                    source_split: Some(split),
                    fallback: false,
                })
            }
            Weighting::DiversityStrength => diversity_strength(&self.split(split).diversity.restrict(idx)),
        }
    }

    /// Fuses one cell on the test split and classifies it.
    pub fn fuse(&self, spec: &FusionSpec) -> Result<CellOutcome> {
        spec.validate(&self.train.table)?;
        let idx = self.indices(&spec.subset)?;
        let weights = self.weights(&idx, spec.method, spec.weight_split, spec.threshold)?;
        let mut used = spec.clone();

        let (mut fused, predictions) = if spec.method.is_score() {
            let cols: Vec<&[f64]> = idx.iter().map(|&j| self.test.table.column(j)).collect();
            let fused = combine_scores(&cols, &weights)?;
            if self.options.optimize_threshold {
                let train_cols: Vec<&[f64]> = idx.iter().map(|&j| self.train.table.column(j)).collect();
                let train_fused = combine_scores(&train_cols, &weights)?;
                let labels = self.train.labels.as_ref().ok_or(CfaError::MissingLabels)?;
                used.threshold = optimize_threshold(&train_fused.values, labels)?;
            }
            let preds = threshold_predictions(&fused.values, used.threshold);
            (fused, preds)
        } else {
            let cols: Vec<&[f64]> = idx.iter().map(|&j| self.test_ranks[j].as_slice()).collect();
            let fused = combine_ranks(&cols, &weights, self.options.rc_weighting)?;
            let preds = classify_top_k(&fused, spec.positive_prior)?;
            (fused, preds)
        };
        fused.provenance = Some(used.clone());

        let report = match &self.test.labels {
            Some(labels) => Some(EvalReport {
                spec: used,
                rc_weighting: self.options.rc_weighting,
                tie_policy: self.options.tie_policy,
                weight_fallback: weights.fallback,
                metrics: compute_metrics(&predictions, labels)?,
            }),
            None => None,
        };
        Ok(CellOutcome { fused, predictions, weights, report })
    }

    /// Accuracy-style metrics of one system alone at `threshold` on the test split.
    pub fn single_metrics(&self, system: usize, threshold: f64) -> Result<Metrics> {
        let labels = self.test.labels.as_ref().ok_or(CfaError::MissingLabels)?;
        compute_metrics(&threshold_predictions(self.test.table.column(system), threshold), labels)
    }
}

/// Result of fusing one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub fused: FusedColumn,
    pub predictions: Vec<u8>,
    pub weights: WeightVector,
    /// Present when the test split is labeled.
    pub report: Option<EvalReport>,
}

/// Fuses one cell from raw (unnormalized) train and test tables.
pub fn fuse(train: &ScoreTable, test: &ScoreTable, spec: &FusionSpec, options: FusionOptions) -> Result<CellOutcome> {
    FusionContext::new(train, test, options)?.fuse(spec)
}

/// Method column of a report row. `Single` rows are unfused baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RowMethod {
    Single,
    Fusion(Method),
}

impl RowMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            RowMethod::Single => "SINGLE",
            RowMethod::Fusion(m) => m.as_str(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub systems: Vec<String>,
    /// Positions of `systems` in the table; used for ordering.
    pub subset: Vec<usize>,
    pub method: RowMethod,
    pub weight_split: Option<SplitTag>,
    pub transductive: bool,
    pub metrics: Metrics,
}

impl ReportRow {
    fn order(&self, other: &Self) -> Ordering {
        other
            .metrics
            .accuracy
            .total_cmp(&self.metrics.accuracy)
            .then_with(|| self.subset.cmp(&other.subset))
            .then_with(|| self.method.cmp(&other.method))
            .then_with(|| self.weight_split.cmp(&other.weight_split))
    }
}

pub const REPORT_HEADER: &str = "systems,method,weight_split,transductive,accuracy,precision,recall,f1";

pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(REPORT_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.6},{:.6},{:.6},{:.6}",
            r.systems.join("+"),
            r.method.as_str(),
            r.weight_split.map_or("none", SplitTag::as_str),
            r.transductive,
            r.metrics.accuracy,
            r.metrics.precision,
            r.metrics.recall,
            r.metrics.f1,
        );
    }
    out
}

/// The ten default method variants: ASC, ARC, then each weighted method
/// under train and test weights.
pub fn default_variants() -> Vec<(Method, Option<SplitTag>)> {
    let mut v = vec![(Method::Asc, None), (Method::Arc, None)];
    for m in [Method::WcpSc, Method::WcpRc, Method::WcdsSc, Method::WcdsRc] {
        v.push((m, Some(SplitTag::Train)));
        v.push((m, Some(SplitTag::Test)));
    }
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub threshold: f64,
    pub options: FusionOptions,
    /// Overrides the training-label prior for the RC top-k cut.
    pub positive_prior: Option<f64>,
    pub variants: Vec<(Method, Option<SplitTag>)>,
    /// Emit one unfused baseline row per system.
    pub include_singles: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            threshold: DEFAULT_THRESHOLD,
            options: FusionOptions::default(),
            positive_prior: None,
            variants: default_variants(),
            include_singles: true,
        }
    }
}

/// Largest system count a sweep will enumerate subsets for.
pub const MAX_SWEEP_SYSTEMS: usize = 16;

/// All subsets of `0..t` with at least two members, each in ascending order.
pub fn subsets(t: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (1u32..(1 << t))
        .filter(|m| m.count_ones() >= 2)
        .map(|m| (0..t).filter(|&j| m & (1 << j) != 0).collect())
        .collect();
    out.sort();
    out
}

/// Evaluates every subset of size ≥ 2 under every configured variant.
/// Rows are sorted by accuracy descending, then subset, method and split.
pub fn sweep(train: &ScoreTable, test: &ScoreTable, config: &SweepConfig) -> Result<Vec<ReportRow>> {
    let ctx = FusionContext::new(train, test, config.options)?;
    sweep_context(&ctx, config)
}

pub fn sweep_context(ctx: &FusionContext, config: &SweepConfig) -> Result<Vec<ReportRow>> {
    let t = ctx.system_ids().len();
    if t > MAX_SWEEP_SYSTEMS {
        return Err(CfaError::config(format!("sweep supports at most {MAX_SWEEP_SYSTEMS} systems, got {t}")));
    }
    if ctx.test.labels.is_none() {
        return Err(CfaError::config("sweep needs a labeled test split"));
    }
    let prior = match config.positive_prior {
        Some(p) => p,
        None => ctx.train_prior()?,
    };

    let mut cells = Vec::new();
    for subset in subsets(t) {
        for &(method, split) in &config.variants {
            cells.push((subset.clone(), method, split));
        }
    }

    let mut rows: Vec<ReportRow> = cells
        .par_iter()
        .map(|(subset, method, split)| {
            let systems: Vec<String> = subset.iter().map(|&j| ctx.system_ids()[j].clone()).collect();
            let spec = FusionSpec {
                subset: systems.clone(),
                method: *method,
                weight_split: split.unwrap_or(SplitTag::Train),
                threshold: config.threshold,
                positive_prior: prior,
            };
            let outcome = ctx.fuse(&spec)?;
            let report = outcome.report.ok_or(CfaError::MissingLabels)?;
            Ok(ReportRow {
                systems,
                subset: subset.clone(),
                method: RowMethod::Fusion(*method),
                weight_split: if method.uses_weight_split() { *split } else { None },
                transductive: spec.is_transductive(),
                metrics: report.metrics,
            })
        })
        .collect::<Result<_>>()?;

    if config.include_singles {
        for j in 0..t {
            rows.push(ReportRow {
                systems: vec![ctx.system_ids()[j].clone()],
                subset: vec![j],
                method: RowMethod::Single,
                weight_split: None,
                transductive: false,
                metrics: ctx.single_metrics(j, config.threshold)?,
            });
        }
    }
    rows.sort_by(ReportRow::order);
    Ok(rows)
}
