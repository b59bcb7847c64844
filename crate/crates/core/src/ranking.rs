//! Rank functions and rank-score characteristic (RSC) profiles.
//!
//! Rank 1 is always the highest score. An RSC profile is a system's
//! normalized scores indexed by rank, which is simply the column sorted in
//! non-increasing order.

use std::cmp::Ordering;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{CfaError, Result};
use crate::model::ScoreTable;

/// How equal scores share ranks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TiePolicy {
    /// Ties broken by input position; ranks form a permutation of `1..=n`.
    #[default]
    #[serde(rename = "ordinal")]
    StableOrdinal,
    /// Tied items share the mean of the ordinal ranks they span.
    #[serde(rename = "average")]
    AverageFractional,
}

impl fmt::Display for TiePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TiePolicy::StableOrdinal => "ordinal",
            TiePolicy::AverageFractional => "average",
        })
    }
}

impl FromStr for TiePolicy {
    type Err = CfaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ordinal" => Ok(TiePolicy::StableOrdinal),
            "average" => Ok(TiePolicy::AverageFractional),
            other => Err(CfaError::config(format!("unknown tie policy '{other}'"))),
        }
    }
}

fn descending(a: f64, b: f64) -> Ordering {
    b.partial_cmp(&a).unwrap_or(Ordering::Equal)
}

/// Item indices in rank order (best first). Stable for ties.
pub(crate) fn rank_order(column: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..column.len()).collect();
    order.sort_by(|&a, &b| descending(column[a], column[b]));
    order
}

/// Rank of every item in `column`, rank 1 = highest score.
pub fn scores_to_ranks(column: &[f64], tie_policy: TiePolicy) -> Vec<f64> {
    let order = rank_order(column);
    let mut ranks = vec![0.0; column.len()];
    match tie_policy {
        TiePolicy::StableOrdinal => {
            for (pos, &item) in order.iter().enumerate() {
                ranks[item] = (pos + 1) as f64;
            }
        }
        TiePolicy::AverageFractional => {
            let mut start = 0;
            while start < order.len() {
                let value = column[order[start]];
                let mut end = start + 1;
                while end < order.len() && column[order[end]] == value {
                    end += 1;
                }
                // mean of ordinal ranks start+1 ..= end
                let shared = (start + 1 + end) as f64 / 2.0;
                for &item in &order[start..end] {
                    ranks[item] = shared;
                }
                start = end;
            }
        }
    }
    ranks
}

/// Rank assignment for every system of a table.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    pub system_ids: Vec<String>,
    /// `ranks[j][i]` is the rank of item `i` under system `j`.
    pub ranks: Vec<Vec<f64>>,
    pub tie_policy: TiePolicy,
}

pub fn rank_table(table: &ScoreTable, tie_policy: TiePolicy) -> RankTable {
    RankTable {
        system_ids: table.system_ids().to_vec(),
        ranks: table.columns().iter().map(|c| scores_to_ranks(c, tie_policy)).collect(),
        tie_policy,
    }
}

/// A system's scores indexed by rank: `values[i - 1]` is the score at rank `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct RscProfile {
    pub system_id: String,
    pub values: Vec<f64>,
}

impl RscProfile {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn rsc_profile(system_id: &str, column: &[f64]) -> RscProfile {
    let mut values = column.to_vec();
    values.sort_by(|a, b| descending(*a, *b));
    RscProfile { system_id: system_id.to_string(), values }
}

/// Profiles for every system of a (normalized) table.
pub fn rsc_profiles(table: &ScoreTable) -> Vec<RscProfile> {
    table.system_ids().iter().zip(table.columns()).map(|(id, c)| rsc_profile(id, c)).collect()
}

/// `(rank, score)` points of one system's RSC function.
#[derive(Debug, Clone, PartialEq)]
pub struct RscSeries {
    pub system_id: String,
    pub points: Vec<(usize, f64)>,
}

/// Rank-score series for each system of a normalized table.
pub fn rsc_plot_data(table: &ScoreTable) -> Vec<RscSeries> {
    rsc_profiles(table)
        .into_iter()
        .map(|p| RscSeries {
            points: p.values.iter().enumerate().map(|(i, &v)| (i + 1, v)).collect(),
            system_id: p.system_id,
        })
        .collect()
}

/// CSV with header `rank,<sys1>,...` and one row per rank.
pub fn rsc_csv(series: &[RscSeries]) -> String {
    let mut out = String::from("rank");
    for s in series {
        out.push(',');
        out.push_str(&s.system_id);
    }
    out.push('\n');
    let n = series.first().map_or(0, |s| s.points.len());
    for i in 0..n {
        let _ = write!(out, "{}", i + 1);
        for s in series {
            let _ = write!(out, ",{}", s.points[i].1);
        }
        out.push('\n');
    }
    out
}
