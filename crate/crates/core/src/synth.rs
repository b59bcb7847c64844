//! Seeded synthetic scoring systems.
//!
//! Each system gets an exact number of errors, `round((1 - accuracy) * n)`,
//! placed uniformly at random, so its empirical accuracy at 0.5 matches the
//! target to within `1/n`. Scores are `0.5 + 0.5 * tanh(k x) / tanh(k)` for a
//! signed margin `x` in `[0.01, 1)` on the chosen side of 0.5; a larger
//! sharpness `k` pushes scores toward 0 and 1 and steepens the RSC curve.
//!
//! Randomness comes from ChaCha8 seeded through `seed_from_u64`, and only raw
//! `u64` draws are consumed, so outputs are stable across platforms.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CfaError, Result};
use crate::model::{ScoreTable, SplitTag};

const DEFAULT_ACCURACY: [f64; 4] = [0.95, 0.83, 0.85, 0.86];
const DEFAULT_SHARPNESS: [f64; 4] = [12.0, 1.0, 1.5, 2.0];
const MIN_MARGIN: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    /// Items per split.
    pub items: usize,
    pub systems: usize,
    pub seed: u64,
    /// Target accuracy of each system at threshold 0.5, in `[0, 1]`.
    pub accuracy: Vec<f64>,
    /// Positive steepness of each system's score curve.
    pub sharpness: Vec<f64>,
    pub positive_fraction: f64,
}

impl SynthConfig {
    /// Defaults cycle through four profiles: one sharp, strong system and
    /// three flatter, weaker ones.
    pub fn new(systems: usize, items: usize, seed: u64) -> Self {
        SynthConfig {
            items,
            systems,
            seed,
            accuracy: (0..systems).map(|j| DEFAULT_ACCURACY[j % 4]).collect(),
            sharpness: (0..systems).map(|j| DEFAULT_SHARPNESS[j % 4]).collect(),
            positive_fraction: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.items == 0 {
            return Err(CfaError::config("items must be positive"));
        }
        if self.systems == 0 {
            return Err(CfaError::config("systems must be positive"));
        }
        if self.accuracy.len() != self.systems {
            return Err(CfaError::config(format!(
                "{} accuracy targets for {} systems",
                self.accuracy.len(),
                self.systems
            )));
        }
        if self.sharpness.len() != self.systems {
            return Err(CfaError::config(format!(
                "{} sharpness values for {} systems",
                self.sharpness.len(),
                self.systems
            )));
        }
        if let Some(a) = self.accuracy.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(CfaError::config(format!("accuracy target {a} outside [0,1]")));
        }
        if let Some(k) = self.sharpness.iter().find(|k| !(k.is_finite() && **k > 0.0)) {
            return Err(CfaError::config(format!("sharpness {k} must be positive")));
        }
        if !(self.positive_fraction > 0.0 && self.positive_fraction < 1.0) {
            return Err(CfaError::config(format!("positive fraction {} outside (0,1)", self.positive_fraction)));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SynthConfig = toml::from_str(text).map_err(|e| CfaError::config(format!("synth config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CfaError::config(format!("synth config: {e}")))
    }

    pub fn system_ids(&self) -> Vec<String> {
        system_names(self.systems)
    }
}

/// `A`, `B`, ... for up to 26 systems, `S1`, `S2`, ... beyond that.
pub fn system_names(t: usize) -> Vec<String> {
    if t <= 26 {
        (0..t).map(|j| ((b'A' + j as u8) as char).to_string()).collect()
    } else {
        (1..=t).map(|j| format!("S{j}")).collect()
    }
}

struct Draws(ChaCha8Rng);

impl Draws {
    /// Uniform in `[0, 1)` from the top 53 bits of one draw.
    fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Integer in `[0, bound)` by widening multiply.
    fn below(&mut self, bound: usize) -> usize {
        ((self.0.next_u64() as u128 * bound as u128) >> 64) as usize
    }
}

/// Score for a signed margin under sharpness `k`.
fn shaped(margin: f64, k: f64) -> f64 {
    0.5 + 0.5 * (k * margin).tanh() / k.tanh()
}

fn generate_split(cfg: &SynthConfig, rng: &mut Draws, split: SplitTag) -> Result<ScoreTable> {
    let n = cfg.items;
    let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.unit() < cfg.positive_fraction)).collect();

    let mut columns = Vec::with_capacity(cfg.systems);
    for (&acc, &k) in cfg.accuracy.iter().zip(&cfg.sharpness) {
        let errors = (((1.0 - acc) * n as f64).round() as usize).min(n);
        let mut idx: Vec<usize> = (0..n).collect();
        for p in 0..errors {
            let r = p + rng.below(n - p);
            idx.swap(p, r);
        }
        let mut wrong = vec![false; n];
        for &i in &idx[..errors] {
            wrong[i] = true;
        }
        let col = (0..n)
            .map(|i| {
                let magnitude = MIN_MARGIN + (1.0 - MIN_MARGIN) * rng.unit();
                let positive_side = (labels[i] == 1) != wrong[i];
                shaped(if positive_side { magnitude } else { -magnitude }, k)
            })
            .collect();
        columns.push(col);
    }

    let prefix = split.as_str();
    let ids = (0..n).map(|i| format!("{prefix}_{i}")).collect();
    ScoreTable::new(split, ids, Some(labels), cfg.system_ids(), columns)
}

/// Generates a labeled train split followed by a labeled test split.
pub fn generate(cfg: &SynthConfig) -> Result<(ScoreTable, ScoreTable)> {
    cfg.validate()?;
    let mut rng = Draws(ChaCha8Rng::seed_from_u64(cfg.seed));
    let train = generate_split(cfg, &mut rng, SplitTag::Train)?;
    let test = generate_split(cfg, &mut rng, SplitTag::Test)?;
    Ok((train, test))
}

/// A tiny labeled train/test pair for randomized cross-checks: 2 to 8 items
/// per split, 2 to 4 systems, raw scores on arbitrary scales with frequent
/// ties. Training labels always contain both classes.
pub fn random_small_instance(seed: u64) -> (ScoreTable, ScoreTable) {
    let mut rng = Draws(ChaCha8Rng::seed_from_u64(seed));
    let t = 2 + rng.below(3);
    let scales: Vec<(f64, f64)> = (0..t).map(|_| (rng.unit() * 20.0 - 10.0, 0.1 + rng.unit() * 5.0)).collect();
    let mut split = |tag: SplitTag| {
        let n = 2 + rng.below(7);
        let mut labels: Vec<u8> = (0..n).map(|_| rng.below(2) as u8).collect();
        if tag == SplitTag::Train {
            labels[0] = 0;
            labels[1] = 1;
        }
        let columns = scales
            .iter()
            .map(|&(offset, scale)| {
                (0..n)
                    .map(|_| {
                        let u = if rng.below(3) == 0 { rng.below(4) as f64 / 3.0 } else { rng.unit() };
                        offset + scale * u
                    })
                    .collect()
            })
            .collect();
        let ids = (0..n).map(|i| format!("{tag}_{i}")).collect();
        ScoreTable::new(tag, ids, Some(labels), system_names(t), columns).expect("valid random instance")
    };
    let train = split(SplitTag::Train);
    let test = split(SplitTag::Test);
    (train, test)
}

/// Three systems that each err on a different third of the items.
///
/// Labels alternate `0, 1, 0, ...`. A correct score sits 0.4 past the 0.5
/// threshold and an error sits 0.1 on the wrong side, so any two correct
/// systems outvote the third under equal weights. Self-normalization keeps
/// this property once `n >= 6`, where every system sees both label values
/// among its correct items.
pub fn generate_disjoint_error_fixture(n: usize) -> Result<ScoreTable> {
    if n < 3 || n % 3 != 0 {
        return Err(CfaError::config(format!("fixture size {n} must be a positive multiple of 3")));
    }
    let third = n / 3;
    let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    let columns = (0..3)
        .map(|j| {
            (0..n)
                .map(|i| {
                    let errs = i / third == j;
                    match (labels[i], errs) {
                        (1, false) => 0.9,
                        (1, true) => 0.4,
                        (_, false) => 0.1,
                        (_, true) => 0.6,
                    }
                })
                .collect()
        })
        .collect();
    let ids = (0..n).map(|i| format!("d{i}")).collect();
    ScoreTable::new(SplitTag::Train, ids, Some(labels), system_names(3), columns)
}
