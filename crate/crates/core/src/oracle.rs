//! Brute-force recomputation of a fusion cell for cross-checking.
//!
//! Everything here is written out longhand from the raw tables: its own
//! normalization, O(n²) counting ranks, insertion-sorted profiles and
//! explicit loops. Nothing from the normalization, ranking, diversity,
//! fusion or evaluation modules is called, so agreement with the main path
//! is evidence rather than tautology. Meant for small inputs only.

use crate::error::{CfaError, Result};
use crate::fusion::RcWeighting;
use crate::model::{FusionSpec, Method, ScoreTable, SplitTag};
use crate::ranking::TiePolicy;

/// Largest item count the oracle accepts.
pub const ORACLE_MAX_ITEMS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutcome {
    /// True for rank combinations.
    pub is_rank: bool,
    pub values: Vec<f64>,
    pub predictions: Vec<u8>,
    /// Effective weights after any reciprocal, in subset order.
    pub weights: Vec<f64>,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn find_column<'a>(table: &'a ScoreTable, id: &str) -> Result<&'a [f64]> {
    for j in 0..table.n_systems() {
        if table.system_ids()[j] == id {
            return Ok(table.column(j));
        }
    }
    Err(CfaError::UnknownSystem(id.to_string()))
}

/// Min-max rescaled copies of `target`, using ranges taken from `fit`.
fn rescale(fit: &[f64], target: &[f64]) -> Vec<f64> {
    let mut lo = fit[0];
    let mut hi = fit[0];
    for &x in fit {
        if x < lo {
            lo = x;
        }
        if x > hi {
            hi = x;
        }
    }
    let mut out = Vec::with_capacity(target.len());
    for &x in target {
        if lo == hi {
            out.push(0.5);
            continue;
        }
        let mut v = (x - lo) / (hi - lo);
        if v < 0.0 {
            v = 0.0;
        }
        if v > 1.0 {
            v = 1.0;
        }
        out.push(v);
    }
    out
}

fn sorted_desc(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    for i in 1..v.len() {
        let mut k = i;
        while k > 0 && v[k - 1] < v[k] {
            v.swap(k - 1, k);
            k -= 1;
        }
    }
    v
}

fn rms_gap(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        let d = a[i] - b[i];
        s += d * d;
    }
    (s / a.len() as f64).sqrt()
}

/// Pairwise cognitive diversity of already-normalized columns.
fn cd_matrix(cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let profiles: Vec<Vec<f64>> = cols.iter().map(|c| sorted_desc(c)).collect();
    let t = cols.len();
    let mut m = vec![vec![0.0; t]; t];
    for a in 0..t {
        for b in 0..t {
            if a < b {
                m[a][b] = rms_gap(&profiles[a], &profiles[b]);
            } else if a > b {
                m[a][b] = m[b][a];
            }
        }
    }
    m
}

/// Diversity strengths, or `None` when every pair coincides.
fn strengths(cols: &[Vec<f64>]) -> Option<Vec<f64>> {
    let m = cd_matrix(cols);
    let t = cols.len();
    let mut any = false;
    for row in &m {
        for &v in row {
            if v != 0.0 {
                any = true;
            }
        }
    }
    if !any {
        return None;
    }
    let mut out = Vec::with_capacity(t);
    for a in 0..t {
        let mut s = 0.0;
        for b in 0..t {
            if b != a {
                s += m[a][b];
            }
        }
        out.push(s / (t - 1) as f64);
    }
    Some(out)
}

fn rank_of(col: &[f64], i: usize, tie_policy: TiePolicy) -> f64 {
    let mut greater = 0usize;
    let mut equal_before = 0usize;
    let mut equal = 0usize;
    for (k, &x) in col.iter().enumerate() {
        if x > col[i] {
            greater += 1;
        } else if x == col[i] {
            equal += 1;
            if k < i {
                equal_before += 1;
            }
        }
    }
    match tie_policy {
        TiePolicy::StableOrdinal => (1 + greater + equal_before) as f64,
        TiePolicy::AverageFractional => 1.0 + greater as f64 + (equal - 1) as f64 / 2.0,
    }
}

/// Normalized copies of the subset's train and test columns.
fn normalized_subset(train: &ScoreTable, test: &ScoreTable, subset: &[String]) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let mut tr = Vec::new();
    let mut te = Vec::new();
    for id in subset {
        let fit = find_column(train, id)?;
        tr.push(rescale(fit, fit));
        te.push(rescale(fit, find_column(test, id)?));
    }
    Ok((tr, te))
}

/// Cognitive-diversity matrix of `systems` on one split, normalized with
/// training ranges.
pub fn oracle_diversity(train: &ScoreTable, test: &ScoreTable, systems: &[String], split: SplitTag) -> Result<Vec<Vec<f64>>> {
    let (tr, te) = normalized_subset(train, test, systems)?;
    Ok(cd_matrix(if split == SplitTag::Train { &tr } else { &te }))
}

/// Diversity strengths matching [`oracle_diversity`] (equal weights of 1 when
/// all systems coincide).
pub fn oracle_strengths(train: &ScoreTable, test: &ScoreTable, systems: &[String], split: SplitTag) -> Result<Vec<f64>> {
    let (tr, te) = normalized_subset(train, test, systems)?;
    let t = systems.len();
    Ok(strengths(if split == SplitTag::Train { &tr } else { &te }).unwrap_or_else(|| vec![1.0; t]))
}

/// Recomputes one fusion cell end to end from raw train and test tables.
/// Metrics are computed when the test table is labeled (otherwise zero).
pub fn oracle_fuse(
    train: &ScoreTable,
    test: &ScoreTable,
    spec: &FusionSpec,
    rc_weighting: RcWeighting,
    tie_policy: TiePolicy,
) -> Result<OracleOutcome> {
    let n = test.n_items();
    if n > ORACLE_MAX_ITEMS || train.n_items() > ORACLE_MAX_ITEMS {
        return Err(CfaError::config("oracle is limited to 10000 items"));
    }
    if spec.subset.len() < 2 {
        return Err(CfaError::config("fusion needs at least 2 systems"));
    }
    for a in 0..spec.subset.len() {
        for b in (a + 1)..spec.subset.len() {
            if spec.subset[a] == spec.subset[b] {
                return Err(CfaError::config("duplicate system"));
            }
        }
    }
    if spec.threshold < 0.0 || spec.threshold > 1.0 {
        return Err(CfaError::config("threshold outside [0,1]"));
    }
    if spec.positive_prior <= 0.0 || spec.positive_prior >= 1.0 {
        return Err(CfaError::config("prior outside (0,1)"));
    }

    let (tr, te) = normalized_subset(train, test, &spec.subset)?;
    let t = spec.subset.len();

    let (weight_cols, weight_labels) = match spec.weight_split {
        SplitTag::Train => (&tr, train.labels()),
        SplitTag::Test => (&te, test.labels()),
    };
    // `invert` is false for equal weights, including the diversity fallback
    let (mut w, invert) = match spec.method {
        Method::Asc | Method::Arc => (vec![1.0; t], false),
        Method::WcpSc | Method::WcpRc => {
            let labels = weight_labels.ok_or(CfaError::MissingLabels)?;
            let mut acc = Vec::new();
            for col in weight_cols.iter() {
                let mut right = 0usize;
                for i in 0..col.len() {
                    let p = if col[i] >= spec.threshold { 1 } else { 0 };
                    if p == labels[i] {
                        right += 1;
                    }
                }
                acc.push(right as f64 / col.len() as f64);
            }
            (acc, true)
        }
        Method::WcdsSc | Method::WcdsRc => match strengths(weight_cols) {
            Some(ds) => (ds, true),
            None => (vec![1.0; t], false),
        },
    };

    let is_rank = !matches!(spec.method, Method::Asc | Method::WcpSc | Method::WcdsSc);
    if is_rank && rc_weighting == RcWeighting::Reciprocal && invert {
        for (j, x) in w.iter_mut().enumerate() {
            if *x == 0.0 {
                return Err(CfaError::ZeroWeight(spec.subset[j].clone()));
            }
            *x = 1.0 / *x;
        }
    }
    let mut wsum = 0.0;
    for &x in &w {
        wsum += x;
    }
    if wsum <= 0.0 {
        return Err(CfaError::ZeroWeightSum);
    }

    let inputs: Vec<Vec<f64>> = if is_rank {
        te.iter().map(|col| (0..n).map(|i| rank_of(col, i, tie_policy)).collect()).collect()
    } else {
        te.clone()
    };
    let mut values = vec![0.0; n];
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..t {
            s += w[j] * inputs[j][i];
        }
        values[i] = s / wsum;
    }

    let mut predictions = vec![0u8; n];
    if is_rank {
        let k = (n as f64 * spec.positive_prior).round() as usize;
        for i in 0..n {
            let mut ahead = 0usize;
            for q in 0..n {
                if values[q] < values[i] || (values[q] == values[i] && q < i) {
                    ahead += 1;
                }
            }
            if ahead < k {
                predictions[i] = 1;
            }
        }
    } else {
        for i in 0..n {
            if values[i] >= spec.threshold {
                predictions[i] = 1;
            }
        }
    }

    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    if let Some(labels) = test.labels() {
        for i in 0..n {
            match (predictions[i], labels[i]) {
                (1, 1) => tp += 1,
                (1, _) => fp += 1,
                (_, 0) => tn += 1,
                _ => fn_ += 1,
            }
        }
    }
    let div = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = div(tp, tp + fp);
    let recall = div(tp, tp + fn_);
    let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };

    Ok(OracleOutcome {
        is_rank,
        values,
        predictions,
        weights: w,
        tp,
        fp,
        tn,
        fn_,
        accuracy: div(tp + tn, tp + fp + tn + fn_),
        precision,
        recall,
        f1,
    })
}
