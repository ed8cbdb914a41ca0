//! Acceptance criteria, one PASS/FAIL/SKIP line each. Exits non-zero when
//! any criterion fails.

use std::collections::HashSet;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use asel::evaluate::{mean, EvalConfig, Selector};
use asel::learners::{ClassifierSpec, ClustererSpec, RegressorSpec};
use asel::preprocess::{apply_scaler, fit_scaler, impute_censored, ImputeOptions, Normalize};
use asel::selectors::{Classify, ClassifyPairs, Cluster, Expansion, Regression};
use asel::{
    cv_folds, misclassification_penalties, par_scores, single_best, successes, vbs, BestBy, Dataset,
    DatasetParts, SelectorBuilder,
};
use asel_cli::config::DataConfig;
use asel_cli::data::load_dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn dataset(features: Vec<Vec<f64>>, performances: Vec<Vec<f64>>, successes: Option<Vec<Vec<bool>>>) -> Dataset {
    Dataset::from_parts(DatasetParts {
        instance_ids: (0..features.len()).map(|i| format!("i{i}")).collect(),
        feature_names: (0..features[0].len()).map(|j| format!("f{j}")).collect(),
        algorithm_names: (0..performances[0].len()).map(|a| format!("a{a}")).collect(),
        features,
        performances,
        successes,
        minimize: true,
        ..Default::default()
    })
    .unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn toy_oracles() -> Outcome {
    let d = Dataset::from_parts(DatasetParts {
        instance_ids: ["i1", "i2", "i3", "i4"].map(String::from).to_vec(),
        feature_names: vec!["f".into()],
        algorithm_names: vec!["A".into(), "B".into()],
        features: vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
        performances: vec![vec![1.0, 9.0], vec![2.0, 1.0], vec![10.0, 3.0], vec![4.0, 10.0]],
        minimize: true,
        ..Default::default()
    })
    .unwrap();
    let cfg = EvalConfig::with_timeout(10.0);
    let e = |e: asel::Error| e.to_string();
    let v = mean(&par_scores(&d, &vbs(&d), &cfg).map_err(e)?);
    ensure!(close(v, 2.25, 1e-9), "VBS mean PAR10 {v}");
    let sb = single_best(&d, BestBy::Performance, &cfg).map_err(e)?;
    ensure!(matches!(sb, Selector::Fixed { algorithm: 0 }), "single best is not A");
    let s = mean(&par_scores(&d, &sb, &cfg).map_err(e)?);
    ensure!(close(s, 26.75, 1e-9), "single best mean PAR10 {s}");
    let sums = BestBy::Par.aggregate(&d, &[0, 1, 2, 3], 10.0, 10.0);
    ensure!(close(sums[0], 107.0, 1e-9) && close(sums[1], 113.0, 1e-9), "PAR sums {sums:?}");
    let pen = misclassification_penalties(&d, &Selector::Fixed { algorithm: 0 }).map_err(e)?;
    ensure!(pen == [0.0, 1.0, 7.0, 0.0], "penalties {pen:?}");
    Ok("VBS 2.25, single best A 26.75, PAR sums 107/113, penalties [0,1,7,0]".into())
}

fn every_selector() -> Vec<SelectorBuilder> {
    let knn1 = ClassifierSpec::Knn { k: 1 };
    let kmeans = |k| ClustererSpec::KMeans { k, max_iter: 50 };
    vec![
        SelectorBuilder::Classify(Classify::new(ClassifierSpec::Majority)),
        SelectorBuilder::Classify(Classify::new(knn1.clone())),
        SelectorBuilder::Classify(Classify::new(ClassifierSpec::Stump).with_pre(Arc::new(Normalize))),
        SelectorBuilder::Classify(Classify::ensemble(vec![knn1.clone(), ClassifierSpec::Knn { k: 3 }, ClassifierSpec::Stump])),
        SelectorBuilder::Classify(Classify::ensemble(vec![knn1.clone(), ClassifierSpec::Stump]).with_combine(ClassifierSpec::Stump)),
        SelectorBuilder::Regression(Regression::new(RegressorSpec::LeastSquares)),
        SelectorBuilder::Regression(Regression::new(RegressorSpec::Knn { k: 2 })),
        SelectorBuilder::Regression(
            Regression::new(RegressorSpec::LeastSquares)
                .with_combine(knn1.clone())
                .with_expand(Expansion::pairwise_abs_diff()),
        ),
        SelectorBuilder::ClassifyPairs(ClassifyPairs::new(ClassifierSpec::Stump)),
        SelectorBuilder::ClassifyPairs(ClassifyPairs::new(knn1.clone()).with_combinator(ClassifierSpec::Majority)),
        SelectorBuilder::Cluster(Cluster::new(kmeans(2))),
        SelectorBuilder::Cluster(Cluster::new(kmeans(3)).with_best_by(BestBy::Par)),
        SelectorBuilder::Cluster(Cluster::ensemble(vec![kmeans(1), kmeans(2), kmeans(3)]).with_best_by(BestBy::Count)),
        SelectorBuilder::Cluster(Cluster::new(kmeans(2)).with_combine(knn1)),
    ]
}

fn random_dataset(rng: &mut ChaCha8Rng) -> Dataset {
    let n = rng.random_range(4..=30);
    let m = rng.random_range(2..=5);
    let nf = rng.random_range(1..=3);
    let features = (0..n).map(|_| (0..nf).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
    let performances = (0..n).map(|_| (0..m).map(|_| rng.random_range(0.5..100.0)).collect()).collect();
    dataset(features, performances, None)
}

fn baseline_dominance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let selectors = every_selector();
    let cfg = EvalConfig::with_timeout(50.0);
    let e = |e: asel::Error| e.to_string();
    for case in 0..200 {
        let d = Arc::new(random_dataset(&mut rng));
        let p = cv_folds(d.clone(), 3, false, case).map_err(e)?;
        let best = vbs(&d);
        let vbs_par = par_scores(&p, &best, &cfg).map_err(e)?;
        let vbs_ok = successes(&p, &best, &cfg).map_err(e)?;
        ensure!(
            misclassification_penalties(&p, &best).map_err(e)?.iter().all(|&x| x == 0.0),
            "case {case}: VBS has a non-zero penalty"
        );
        for b in &selectors {
            let m = b.build(&p).map_err(|err| format!("case {case}: {}: {err}", b.description()))?;
            let s = Selector::Model(&m);
            let par = par_scores(&p, &s, &cfg).map_err(e)?;
            let ok = successes(&p, &s, &cfg).map_err(e)?;
            for k in 0..par.len() {
                ensure!(vbs_par[k] <= par[k], "case {case}: {} beats VBS", b.description());
                ensure!(vbs_ok[k] >= ok[k], "case {case}: {} solves more than VBS", b.description());
            }
        }
        let sb = single_best(&d, BestBy::Performance, &cfg).map_err(e)?;
        ensure!(
            mean(&par_scores(&p, &sb, &cfg).map_err(e)?) >= mean(&vbs_par),
            "case {case}: single best beats VBS"
        );
    }
    Ok(format!("200 datasets x {} selectors", selectors.len()))
}

fn partition_laws() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..500u64 {
        let n = rng.random_range(4..=100);
        let nfolds = rng.random_range(2..=10usize).min(n);
        let m = rng.random_range(1..=5);
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..m)).collect();
        let perf = labels
            .iter()
            .map(|&l| (0..m.max(2)).map(|a| if a == l { 1.0 } else { 2.0 + a as f64 }).collect())
            .collect();
        let d = Arc::new(dataset((0..n).map(|i| vec![i as f64]).collect(), perf, None));
        let seed = rng.random();
        let p = cv_folds(d.clone(), nfolds, true, seed).map_err(|e| e.to_string())?;
        let mut seen = HashSet::new();
        for f in p.test_sets() {
            for &i in f {
                ensure!(seen.insert(i), "case {case}: instance {i} in two folds");
            }
        }
        ensure!(seen.len() == n, "case {case}: folds do not cover the dataset");
        let sizes: Vec<usize> = p.test_sets().iter().map(Vec::len).collect();
        ensure!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1, "case {case}: sizes {sizes:?}");
        for label in 0..m {
            let counts: Vec<usize> = p
                .test_sets()
                .iter()
                .map(|f| f.iter().filter(|&&i| d.best(i) == label).count())
                .collect();
            ensure!(
                counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1,
                "case {case}: label {label} spread {counts:?}"
            );
        }
        let again = cv_folds(d, nfolds, true, seed).map_err(|e| e.to_string())?;
        ensure!(p.test_sets() == again.test_sets(), "case {case}: same seed, different folds");
    }
    Ok("500 random partitionings".into())
}

fn vote_conservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for m in 2..=8usize {
        for case in 0..5 {
            let n = rng.random_range(6..=30);
            let features = (0..n).map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]).collect();
            let perf = (0..n).map(|_| (0..m).map(|_| rng.random_range(1.0..50.0)).collect()).collect();
            let p = cv_folds(Arc::new(dataset(features, perf, None)), 3, false, case).map_err(|e| e.to_string())?;
            let model = ClassifyPairs::new(ClassifierSpec::Stump).build(&p).map_err(|e| e.to_string())?;
            let total = (m * (m - 1) / 2) as f64;
            for pr in model.predictions().iter().flatten() {
                let sum: f64 = pr.ranking().iter().map(|r| r.score).sum();
                ensure!(sum == total, "m={m}: votes sum to {sum}, expected {total}");
            }
        }
    }
    Ok("m = 2..8".into())
}

fn separable_oracle() -> Outcome {
    let (n, m) = (100, 4);
    let d = Arc::new(dataset(
        (0..n).map(|i| vec![(i % m) as f64]).collect(),
        (0..n)
            .map(|i| (0..m).map(|a| 1.0 + 2.0 * (a as f64 - (i % m) as f64).abs()).collect())
            .collect(),
        None,
    ));
    let e = |e: asel::Error| e.to_string();
    let p = cv_folds(d.clone(), 10, true, 5).map_err(e)?;
    let cfg = EvalConfig::with_timeout(100.0);
    let best = par_scores(&p, &vbs(&d), &cfg).map_err(e)?;
    let models = [
        Classify::new(ClassifierSpec::Knn { k: 1 }).build(&p).map_err(e)?,
        ClassifyPairs::new(ClassifierSpec::Stump).build(&p).map_err(e)?,
    ];
    for model in &models {
        let par = par_scores(&p, &Selector::Model(model), &cfg).map_err(e)?;
        ensure!(par == best, "{} differs from VBS", model.description());
    }
    Ok("1-NN classify and stump pairs equal VBS on all 10 folds".into())
}

fn imputation_fixpoint() -> Outcome {
    let d = dataset(
        vec![vec![1.0], vec![2.0], vec![3.0]],
        vec![vec![2.0], vec![4.0], vec![5.0]],
        Some(vec![vec![true], vec![true], vec![false]]),
    );
    let r = impute_censored(&d, &RegressorSpec::LeastSquares, &ImputeOptions::default()).map_err(|e| e.to_string())?;
    let v = r.dataset.performances()[2][0];
    ensure!(close(v, 6.0, 1e-6), "imputed {v}");
    ensure!(r.converged && r.iterations[0] <= 2, "iterations {:?}", r.iterations);
    for i in 0..2 {
        ensure!(
            r.dataset.performances()[i][0].to_bits() == d.performances()[i][0].to_bits(),
            "observed cell {i} changed"
        );
    }
    Ok(format!("imputed {v} after {} fits", r.iterations[0]))
}

fn normalization_contract() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..200 {
        let n = rng.random_range(2..=40);
        let constant: f64 = rng.random_range(-100.0..100.0);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.random_range(-1e3..1e3), constant, rng.random_range(0.0..1e-3)])
            .collect();
        let s = fit_scaler(&rows).map_err(|e| e.to_string())?;
        let out = apply_scaler(&s, &rows).map_err(|e| e.to_string())?;
        for j in [0, 2] {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            if col.iter().all(|&x| x == col[0]) {
                continue;
            }
            let scaled: Vec<f64> = out.iter().map(|r| r[j]).collect();
            let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            ensure!(close(lo, -1.0, 1e-12) && close(hi, 1.0, 1e-12), "case {case} column {j}: [{lo}, {hi}]");
        }
        ensure!(out.iter().all(|r| r[1] == 0.0), "case {case}: constant column not mapped to 0");
    }
    Ok("200 random matrices".into())
}

/// Runs only when `SATSOLVERS_DIR` points at `features.csv`,
/// `performance.csv` and `successes.csv` keyed by `ID`.
fn satsolvers() -> Option<Outcome> {
    let dir = PathBuf::from(std::env::var_os("SATSOLVERS_DIR")?);
    Some((|| {
        let cfg = DataConfig {
            features: dir.join("features.csv"),
            performances: dir.join("performance.csv"),
            successes: Some(dir.join("successes.csv")),
            costs: None,
            id_column: "ID".into(),
            minimize: true,
        };
        let d = load_dataset(&cfg).map_err(|e| e.to_string())?;
        ensure!(
            d.len() == 2433 && d.n_algorithms() == 19 && d.feature_names().len() == 36,
            "unexpected shape {} x {} x {}",
            d.len(),
            d.feature_names().len(),
            d.n_algorithms()
        );
        let eval = EvalConfig::with_timeout(3600.0);
        let e = |e: asel::Error| e.to_string();
        let check = |name: &str, s: &Selector<'_>, want_mean: f64, want_solved: usize| -> Result<(), String> {
            let got = mean(&par_scores(&d, s, &eval).map_err(e)?);
            let solved = successes(&d, s, &eval).map_err(e)?.into_iter().filter(|&x| x).count();
            ensure!(close(got, want_mean, 0.01), "{name} mean PAR10 {got}, expected {want_mean}");
            ensure!(solved == want_solved, "{name} solved {solved}, expected {want_solved}");
            Ok(())
        };
        check("VBS", &vbs(&d), 4645.169, 2124)?;
        check("single best", &single_best(&d, BestBy::Performance, &eval).map_err(e)?, 5779.526, 2048)?;
        Ok("VBS and single best reproduced".into())
    })())
}

fn run_cli(cfg: &Path, jobs: &str, out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_asel"))
        .args(["run", "--jobs", jobs, "--seed", "42", "--output-dir"])
        .arg(out)
        .arg(cfg)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(status.status.success(), "run failed: {}", String::from_utf8_lossy(&status.stderr));
    Ok(())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut feats = String::from("ID,x,y\n");
    let mut perf = String::from("ID,s0,s1,s2,s3\n");
    for i in 0..80 {
        let (x, y): (f64, f64) = (rng.random_range(0.0..10.0), rng.random_range(0.0..10.0));
        feats.push_str(&format!("n{i},{x},{y}\n"));
        let cells: Vec<String> = (0..4).map(|a| format!("{}", (x - 2.5 * a as f64).abs() + y / 3.0 + 0.1)).collect();
        perf.push_str(&format!("n{i},{}\n", cells.join(",")));
    }
    let write = |name: &str, text: &str| fs::write(dir.path().join(name), text).map_err(|e| e.to_string());
    write("features.csv", &feats)?;
    write("performance.csv", &perf)?;
    write(
        "experiment.toml",
        r#"
[data]
features = "features.csv"
performances = "performance.csv"

[partition]
nfolds = 8

[eval]
timeout = 5

[[selector]]
builder = "classify"
learners = [{ kind = "knn", k = 3 }, { kind = "stump" }]
combine = { kind = "knn" }

[[selector]]
builder = "regression"
regressor = { kind = "least-squares" }

[[selector]]
builder = "classify-pairs"
classifier = { kind = "stump" }

[[selector]]
builder = "cluster"
clusterers = [{ kind = "kmeans", k = 4 }]
best_by = "par"
"#,
    )?;
    let cfg = dir.path().join("experiment.toml");
    let outputs: Vec<PathBuf> = ["1", "4", "4"]
        .iter()
        .enumerate()
        .map(|(k, jobs)| {
            let out = dir.path().join(format!("out{k}"));
            run_cli(&cfg, jobs, &out).map(|_| out)
        })
        .collect::<Result<_, _>>()?;
    let read = |p: PathBuf| fs::read(&p).map_err(|e| format!("{}: {e}", p.display()));
    let mut files = vec![PathBuf::from("summary.csv")];
    for entry in fs::read_dir(outputs[0].join("scores")).map_err(|e| e.to_string())? {
        files.push(Path::new("scores").join(entry.map_err(|e| e.to_string())?.file_name()));
    }
    for f in &files {
        let first = read(outputs[0].join(f))?;
        for other in &outputs[1..] {
            ensure!(read(other.join(f))? == first, "{} differs between runs", f.display());
        }
    }
    Ok(format!("{} files identical across --jobs 1, 4, 4", files.len()))
}

enum Check {
    Always(fn() -> Outcome),
    /// Returns `None` when its input data is not available.
    Optional(fn() -> Option<Outcome>, &'static str),
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, Option<Duration>, Check); 9] = [
        (1, "toy-dataset oracles", Some(Duration::from_secs(1)), Check::Always(toy_oracles)),
        (2, "baseline dominance", Some(Duration::from_secs(30)), Check::Always(baseline_dominance)),
        (3, "partition laws", Some(Duration::from_secs(10)), Check::Always(partition_laws)),
        (4, "vote conservation", None, Check::Always(vote_conservation)),
        (5, "separable oracle", None, Check::Always(separable_oracle)),
        (6, "imputation fixpoint", None, Check::Always(imputation_fixpoint)),
        (7, "normalization contract", None, Check::Always(normalization_contract)),
        (8, "satsolvers reproduction", None, Check::Optional(satsolvers, "set SATSOLVERS_DIR to enable")),
        (9, "determinism across --jobs", None, Check::Always(determinism)),
    ];
    let mut failed = 0;
    for (id, name, budget, check) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(|| match check {
            Check::Always(f) => Some(f()),
            Check::Optional(f, _) => f(),
        }));
        let outcome = match result {
            Ok(Some(o)) => o,
            Ok(None) => {
                if let Check::Optional(_, hint) = check {
                    println!("SKIP criterion {id}: {name} ({hint})");
                }
                continue;
            }
            Err(_) => Err("panicked".into()),
        };
        let elapsed = start.elapsed();
        let outcome = match (outcome, budget) {
            (Ok(_), Some(b)) if elapsed > b => Err(format!("took {elapsed:.2?}, budget {b:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("PASS criterion {id}: {name} ({detail}; {elapsed:.2?})"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {id}: {name}: {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
