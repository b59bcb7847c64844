//! Cognitive diversity between RSC profiles and per-system diversity strength.

use std::fmt::Write as _;

use crate::error::{CfaError, Result};
use crate::model::SplitTag;
use crate::ranking::RscProfile;

/// Root-mean-square difference between two RSC profiles.
pub fn cognitive_diversity(a: &RscProfile, b: &RscProfile) -> Result<f64> {
    if a.len() != b.len() {
        return Err(CfaError::LengthMismatch { expected: a.len(), got: b.len() });
    }
    if a.is_empty() {
        return Err(CfaError::config("cognitive diversity needs at least one rank"));
    }
    let sum_sq: f64 = a.values.iter().zip(&b.values).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((sum_sq / a.len() as f64).sqrt())
}

/// Symmetric matrix of pairwise cognitive diversity.
#[derive(Debug, Clone, PartialEq)]
pub struct DiversityMatrix {
    pub system_ids: Vec<String>,
    pub entries: Vec<Vec<f64>>,
    pub source_split: SplitTag,
}

impl DiversityMatrix {
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.entries[a][b]
    }

    /// Sub-matrix over the given system positions, in that order.
    pub fn restrict(&self, idx: &[usize]) -> DiversityMatrix {
        DiversityMatrix {
            system_ids: idx.iter().map(|&i| self.system_ids[i].clone()).collect(),
            entries: idx.iter().map(|&i| idx.iter().map(|&k| self.entries[i][k]).collect()).collect(),
            source_split: self.source_split,
        }
    }

    /// CSV with header `system,<sys1>,...` and 6-decimal entries.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("system");
        for id in &self.system_ids {
            out.push(',');
            out.push_str(id);
        }
        out.push('\n');
        for (id, row) in self.system_ids.iter().zip(&self.entries) {
            out.push_str(id);
            for v in row {
                let _ = write!(out, ",{v:.6}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn diversity_matrix(profiles: &[RscProfile], source_split: SplitTag) -> Result<DiversityMatrix> {
    let t = profiles.len();
    if t < 2 {
        return Err(CfaError::config(format!("diversity needs at least 2 systems, got {t}")));
    }
    let mut entries = vec![vec![0.0; t]; t];
    for j in 0..t {
        for k in (j + 1)..t {
            let cd = cognitive_diversity(&profiles[j], &profiles[k])?;
            entries[j][k] = cd;
            entries[k][j] = cd;
        }
    }
    Ok(DiversityMatrix {
        system_ids: profiles.iter().map(|p| p.system_id.clone()).collect(),
        entries,
        source_split,
    })
}

/// What a weight vector measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    DiversityStrength,
    Performance,
    Equal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub system_ids: Vec<String>,
    pub weights: Vec<f64>,
    pub kind: WeightKind,
    /// `None` for equal weights, which have no source data.
    pub source_split: Option<SplitTag>,
    /// Set when the requested weighting degenerated to equal weights.
    pub fallback: bool,
}

impl WeightVector {
    pub fn equal(system_ids: &[String]) -> Self {
        WeightVector {
            system_ids: system_ids.to_vec(),
            weights: vec![1.0; system_ids.len()],
            kind: WeightKind::Equal,
            source_split: None,
            fallback: false,
        }
    }
}

/// Mean cognitive diversity of each system against all the others.
///
/// When every pair has zero diversity the systems are indistinguishable and
/// equal weights are returned with `fallback` set.
pub fn diversity_strength(matrix: &DiversityMatrix) -> Result<WeightVector> {
    let t = matrix.system_ids.len();
    if t < 2 {
        return Err(CfaError::config(format!("diversity strength needs at least 2 systems, got {t}")));
    }
    if matrix.entries.iter().flatten().all(|&v| v == 0.0) {
        let mut w = WeightVector::equal(&matrix.system_ids);
        w.source_split = Some(matrix.source_split);
        w.fallback = true;
        return Ok(w);
    }
    let weights = (0..t)
        .map(|j| {
            let mut sum = 0.0;
            for i in 0..t {
                if i != j {
                    sum += matrix.entries[j][i];
                }
            }
            sum / (t - 1) as f64
        })
        .collect();
    Ok(WeightVector {
        system_ids: matrix.system_ids.clone(),
        weights,
        kind: WeightKind::DiversityStrength,
        source_split: Some(matrix.source_split),
        fallback: false,
    })
}
