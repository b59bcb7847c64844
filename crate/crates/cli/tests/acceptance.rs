//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use cfa_core::diversity::cognitive_diversity;
use cfa_core::evaluate::f1_from_pr;
use cfa_core::fusion::{
    combine_scores, default_variants, fuse, sweep, FusionContext, FusionOptions, RcWeighting, RowMethod, SweepConfig,
};
use cfa_core::diversity::WeightVector;
use cfa_core::oracle::oracle_fuse;
use cfa_core::ranking::{rsc_profile, scores_to_ranks, TiePolicy};
use cfa_core::synth::{generate, generate_disjoint_error_fixture, random_small_instance, SynthConfig};
use cfa_core::{FusionSpec, Method, ScoreTable, SplitTag};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

const F1_TOL: f64 = 1e-5;
const ORACLE_TOL: f64 = 1e-12;
const DEGENERACY_TOL: f64 = 1e-12;
const ORACLE_INSTANCES: u64 = 1000;
const ORACLE_BUDGET: Duration = Duration::from_secs(60);
const SCALE_ITEMS: usize = 25_000;
const SCALE_BUDGET: Duration = Duration::from_secs(10);
const SCALE_MEMORY_KB: u64 = 1024 * 1024;
const PROPERTY_CASES: u32 = 500;

type Outcome = Result<String, String>;

fn criterion_f1_table() -> Outcome {
    let rows = [
        ("RoBERTa", 0.936313, 0.95856, 0.947306),
        ("SVM", 0.843940, 0.82112, 0.832374),
        ("XGBoost", 0.842211, 0.87024, 0.855996),
        ("RandomForest", 0.854531, 0.87128, 0.862824),
    ];
    let mut worst: f64 = 0.0;
    for (name, p, r, expected) in rows {
        let f1 = f1_from_pr(p, r).map_err(|e| format!("{name}: {e}"))?;
        let d = (f1 - expected).abs();
        if d >= F1_TOL {
            return Err(format!("{name}: f1 {f1:.6} vs {expected}"));
        }
        worst = worst.max(d);
    }
    Ok(format!("4 rows, max |diff| {worst:.2e}"))
}

fn subsets(ids: &[String]) -> Vec<Vec<String>> {
    let t = ids.len();
    (1u32..(1 << t))
        .filter(|m| m.count_ones() >= 2)
        .map(|m| (0..t).filter(|&j| m & (1 << j) != 0).map(|j| ids[j].clone()).collect())
        .collect()
}

fn criterion_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut cells = 0usize;
    let mut both_failed = 0usize;
    let mut worst: f64 = 0.0;
    for seed in 0..ORACLE_INSTANCES {
        let (train, test) = random_small_instance(seed);
        let prior = train.positive_fraction().ok_or("unlabeled train")?;
        for subset in subsets(train.system_ids()) {
            for (method, split) in default_variants() {
                for rc in [RcWeighting::Reciprocal, RcWeighting::Direct] {
                    let spec = FusionSpec::new(subset.clone(), method, split.unwrap_or(SplitTag::Train), prior);
                    let options = FusionOptions { rc_weighting: rc, ..Default::default() };
                    let main = fuse(&train, &test, &spec, options);
                    let oracle = oracle_fuse(&train, &test, &spec, rc, TiePolicy::StableOrdinal);
                    cells += 1;
                    let (m, o) = match (main, oracle) {
                        (Ok(m), Ok(o)) => (m, o),
                        (Err(a), Err(b)) if std::mem::discriminant(&a) == std::mem::discriminant(&b) => {
                            both_failed += 1;
                            continue;
                        }
                        (a, b) => return Err(format!("seed {seed} {spec:?}: main ok={} oracle ok={}", a.is_ok(), b.is_ok())),
                    };
                    if m.predictions != o.predictions {
                        return Err(format!("seed {seed} {spec:?} {rc}: predictions differ"));
                    }
                    let report = m.report.ok_or("missing report")?;
                    let c = report.metrics.confusion;
                    if (c.tp, c.fp, c.tn, c.fn_) != (o.tp, o.fp, o.tn, o.fn_) {
                        return Err(format!("seed {seed} {spec:?} {rc}: confusion differs"));
                    }
                    let metric_pairs = [
                        (report.metrics.accuracy, o.accuracy),
                        (report.metrics.precision, o.precision),
                        (report.metrics.recall, o.recall),
                        (report.metrics.f1, o.f1),
                    ];
                    for (a, b) in m.fused.values.iter().copied().zip(o.values.iter().copied()).chain(metric_pairs) {
                        worst = worst.max((a - b).abs());
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    if worst >= ORACLE_TOL {
        return Err(format!("max |diff| {worst:.3e}"));
    }
    if elapsed >= ORACLE_BUDGET {
        return Err(format!("took {elapsed:.1?}"));
    }
    Ok(format!(
        "{ORACLE_INSTANCES} instances, {cells} cells ({both_failed} rejected by both), max |diff| {worst:.1e}, {elapsed:.2?}"
    ))
}

fn criterion_disjoint_errors() -> Outcome {
    let train = generate_disjoint_error_fixture(300).map_err(|e| e.to_string())?;
    let test = train.with_split(SplitTag::Test);
    let ctx = FusionContext::new(&train, &test, FusionOptions::default()).map_err(|e| e.to_string())?;
    for j in 0..3 {
        let acc = ctx.single_metrics(j, 0.5).map_err(|e| e.to_string())?.accuracy;
        if acc != 2.0 / 3.0 {
            return Err(format!("system {j} accuracy {acc}"));
        }
    }
    let ids = ["A", "B", "C"];
    let mut checked = 0;
    for (method, split) in [
        (Method::Asc, SplitTag::Train),
        (Method::WcdsSc, SplitTag::Train),
        (Method::WcdsSc, SplitTag::Test),
    ] {
        let out = ctx.fuse(&FusionSpec::new(ids, method, split, 0.5)).map_err(|e| e.to_string())?;
        let acc = out.report.ok_or("missing report")?.metrics.accuracy;
        if acc != 1.0 {
            return Err(format!("{method} ({split}) accuracy {acc}"));
        }
        checked += 1;
    }
    Ok(format!("singles 2/3 each, ASC and {} WCDS-SC variants at 1.0", checked - 1))
}

fn criterion_degeneracy() -> Outcome {
    // equal diversity strengths: WCDS-SC weights are all equal, so it is ASC
    let mut worst: f64 = 0.0;
    for seed in 0..200u64 {
        let (train, _) = random_small_instance(seed);
        let cols: Vec<&[f64]> = train.columns().iter().map(Vec::as_slice).collect();
        let ids = train.system_ids().to_vec();
        let mut equal_ds = WeightVector::equal(&ids);
        equal_ds.kind = cfa_core::diversity::WeightKind::DiversityStrength;
        equal_ds.weights = vec![0.37; ids.len()];
        let a = combine_scores(&cols, &WeightVector::equal(&ids)).map_err(|e| e.to_string())?;
        let b = combine_scores(&cols, &equal_ds).map_err(|e| e.to_string())?;
        for (x, y) in a.values.iter().zip(&b.values) {
            worst = worst.max((x - y).abs());
        }
        // two-system subsets always have equal strengths
        let prior = train.positive_fraction().ok_or("unlabeled train")?;
        let (train, test) = random_small_instance(seed);
        let pair = ["A", "B"];
        let asc = fuse(&train, &test, &FusionSpec::new(pair, Method::Asc, SplitTag::Train, prior), FusionOptions::default());
        let wcds = fuse(&train, &test, &FusionSpec::new(pair, Method::WcdsSc, SplitTag::Train, prior), FusionOptions::default());
        let (a, b) = (asc.map_err(|e| e.to_string())?, wcds.map_err(|e| e.to_string())?);
        {
            for (x, y) in a.fused.values.iter().zip(&b.fused.values) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    if worst >= DEGENERACY_TOL {
        return Err(format!("WCDS-SC vs ASC max |diff| {worst:.3e}"));
    }

    let col = vec![0.15, 0.8, 0.42, 0.93, 0.05, 0.61, 0.42, 0.27];
    let labels = vec![0, 1, 0, 1, 0, 1, 1, 0];
    let mk = |split| {
        ScoreTable::new(
            split,
            (0..col.len()).map(|i| format!("i{i}")).collect(),
            Some(labels.clone()),
            vec!["A".into(), "B".into(), "C".into()],
            vec![col.clone(); 3],
        )
    };
    let train = mk(SplitTag::Train).map_err(|e| e.to_string())?;
    let test = mk(SplitTag::Test).map_err(|e| e.to_string())?;
    let ctx = FusionContext::new(&train, &test, FusionOptions::default()).map_err(|e| e.to_string())?;
    let norm = ctx.normalized_test().column(0).to_vec();
    let ranks = scores_to_ranks(&norm, TiePolicy::StableOrdinal);
    let mut identical_worst: f64 = 0.0;
    for (method, split) in default_variants() {
        let spec = FusionSpec::new(["A", "B", "C"], method, split.unwrap_or(SplitTag::Train), 0.5);
        let out = ctx.fuse(&spec).map_err(|e| format!("{method}: {e}"))?;
        let expected = if method.is_score() { &norm } else { &ranks };
        for (x, y) in out.fused.values.iter().zip(expected) {
            identical_worst = identical_worst.max((x - y).abs());
        }
    }
    if identical_worst >= DEGENERACY_TOL {
        return Err(format!("identical systems drift {identical_worst:.3e}"));
    }
    Ok(format!("WCDS-SC/ASC |diff| {worst:.1e}, identical systems |diff| {identical_worst:.1e} over 10 variants"))
}

fn criterion_row_counts() -> Outcome {
    let mut notes = Vec::new();
    for (t, fusion_rows) in [(4usize, 110usize), (2, 10)] {
        let (train, test) = generate(&SynthConfig::new(t, 200, 17)).map_err(|e| e.to_string())?;
        let rows = sweep(&train, &test, &SweepConfig::default()).map_err(|e| e.to_string())?;
        let singles = rows.iter().filter(|r| r.method == RowMethod::Single).count();
        if singles != t || rows.len() - singles != fusion_rows {
            return Err(format!("t={t}: {} fusion + {singles} single", rows.len() - singles));
        }
        notes.push(format!("t={t}: {fusion_rows}+{t}"));
    }
    Ok(notes.join(", "))
}

fn criterion_golden() -> Outcome {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/seed42");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let bin = env!("CARGO_BIN_EXE_cfa");
    let out_dir = dir.path().to_str().ok_or("temp path")?;
    let synth = Command::new(bin)
        .args(["synth", "--seed", "42", "--config"])
        .arg(fixtures.join("config.toml"))
        .args(["--out-dir", out_dir])
        .output()
        .map_err(|e| e.to_string())?;
    if !synth.status.success() {
        return Err(format!("synth failed: {}", String::from_utf8_lossy(&synth.stderr)));
    }
    let sweep = Command::new(bin)
        .arg("sweep")
        .arg("--train")
        .arg(dir.path().join("train.csv"))
        .arg("--test")
        .arg(dir.path().join("test.csv"))
        .output()
        .map_err(|e| e.to_string())?;
    if !sweep.status.success() {
        return Err(format!("sweep failed: {}", String::from_utf8_lossy(&sweep.stderr)));
    }
    let golden = fs::read(fixtures.join("sweep.golden.csv")).map_err(|e| e.to_string())?;
    if sweep.stdout != golden {
        return Err("report differs from golden".into());
    }
    Ok(format!("{} bytes, {} rows identical", golden.len(), golden.iter().filter(|&&b| b == b'\n').count() - 1))
}

fn peak_rss_kb() -> Option<u64> {
    let status = fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

fn criterion_scale() -> Outcome {
    let (train, test) = generate(&SynthConfig::new(4, SCALE_ITEMS, 2024)).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let rows = sweep(&train, &test, &SweepConfig::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    if rows.len() != 114 {
        return Err(format!("{} rows", rows.len()));
    }
    if elapsed >= SCALE_BUDGET {
        return Err(format!("took {elapsed:.2?}"));
    }
    let peak = peak_rss_kb();
    if let Some(kb) = peak {
        if kb >= SCALE_MEMORY_KB {
            return Err(format!("peak RSS {kb} kB"));
        }
    }
    let mem = peak.map_or("peak RSS unavailable".to_string(), |kb| format!("peak RSS {:.1} MB", kb as f64 / 1024.0));
    Ok(format!("n={SCALE_ITEMS}, 114 rows in {elapsed:.2?}, {mem}"))
}

fn run_property<S: Strategy>(name: &str, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    let mut runner = TestRunner::new(Config { cases: PROPERTY_CASES, failure_persistence: None, ..Config::default() });
    runner.run(&strategy, test).map_err(|e| format!("{name}: {e}"))
}

fn scores() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![0.0f64..1.0, (0u8..5).prop_map(|k| f64::from(k) / 4.0)], 1..40)
}

fn criterion_properties() -> Outcome {
    run_property("rank permutation", scores(), |xs| {
        for policy in [TiePolicy::StableOrdinal, TiePolicy::AverageFractional] {
            let ranks = scores_to_ranks(&xs, policy);
            let n = xs.len() as f64;
            prop_assert!((ranks.iter().sum::<f64>() - n * (n + 1.0) / 2.0).abs() < 1e-9);
            if policy == TiePolicy::StableOrdinal {
                let mut sorted: Vec<usize> = ranks.iter().map(|&r| r as usize).collect();
                sorted.sort_unstable();
                prop_assert_eq!(sorted, (1..=xs.len()).collect::<Vec<_>>());
            }
            for i in 0..xs.len() {
                for j in 0..xs.len() {
                    if xs[i] > xs[j] {
                        prop_assert!(ranks[i] < ranks[j]);
                    }
                }
            }
        }
        Ok(())
    })?;

    run_property("rsc monotonicity", scores(), |xs| {
        let p = rsc_profile("A", &xs);
        prop_assert_eq!(p.values.len(), xs.len());
        prop_assert!(p.values.windows(2).all(|w| w[0] >= w[1]));
        Ok(())
    })?;

    let triple = (2usize..30).prop_flat_map(|n| {
        (
            prop::collection::vec(0.0f64..1.0, n),
            prop::collection::vec(0.0f64..1.0, n),
            prop::collection::vec(0.0f64..1.0, n),
            Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
        )
    });
    run_property("cd metric", triple, |(a, b, c, perm)| {
        let (pa, pb, pc) = (rsc_profile("A", &a), rsc_profile("B", &b), rsc_profile("C", &c));
        let cd = |x, y| cognitive_diversity(x, y).unwrap();
        prop_assert_eq!(cd(&pa, &pb), cd(&pb, &pa));
        prop_assert_eq!(cd(&pa, &pa), 0.0);
        prop_assert!(cd(&pa, &pc) <= cd(&pa, &pb) + cd(&pb, &pc) + 1e-12);
        let shuffled: Vec<f64> = perm.iter().map(|&i| a[i]).collect();
        let ps = rsc_profile("A", &shuffled);
        prop_assert_eq!(cd(&ps, &pb), cd(&pa, &pb));
        Ok(())
    })?;

    let transform = (scores(), 0.01f64..100.0, -10.0f64..10.0, 0u8..3);
    run_property("rc monotone invariance", transform, |(xs, a, b, kind)| {
        let g = |x: f64| match kind {
            0 => a * x + b,
            1 => (a * x).exp(),
            _ => x * x * x + b,
        };
        let ys: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
        // only meaningful while the map keeps every strict order in floating point
        for i in 0..xs.len() {
            for j in 0..xs.len() {
                prop_assume!(!(xs[i] > xs[j]) || ys[i] > ys[j]);
                prop_assume!(!(xs[i] == xs[j]) || ys[i] == ys[j]);
            }
        }
        for policy in [TiePolicy::StableOrdinal, TiePolicy::AverageFractional] {
            prop_assert_eq!(scores_to_ranks(&xs, policy), scores_to_ranks(&ys, policy));
        }
        Ok(())
    })?;

    let sc_case = (2usize..6, 1usize..20).prop_flat_map(|(t, n)| {
        (prop::collection::vec(prop::collection::vec(0.0f64..1.0, n), t), prop::collection::vec(0.001f64..5.0, t))
    });
    run_property("sc convexity", sc_case, |(cols, w)| {
        let ids: Vec<String> = (0..cols.len()).map(|j| format!("S{j}")).collect();
        let mut weights = WeightVector::equal(&ids);
        weights.kind = cfa_core::diversity::WeightKind::Performance;
        weights.weights = w;
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let fused = combine_scores(&refs, &weights).unwrap();
        for (i, v) in fused.values.iter().enumerate() {
            let lo = cols.iter().map(|c| c[i]).fold(f64::INFINITY, f64::min);
            let hi = cols.iter().map(|c| c[i]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(*v >= lo - 1e-12 && *v <= hi + 1e-12);
        }
        Ok(())
    })?;

    Ok(format!("5 properties x {PROPERTY_CASES} cases, 0 failures"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("1 f1 from precision/recall", criterion_f1_table),
        ("2 oracle equivalence", criterion_oracle_equivalence),
        ("3 disjoint-error fixture", criterion_disjoint_errors),
        ("4 degeneracy", criterion_degeneracy),
        ("5 sweep row counts", criterion_row_counts),
        ("6 golden end-to-end", criterion_golden),
        ("7 scale", criterion_scale),
        ("8 property tests", criterion_properties),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("[FAIL] {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
