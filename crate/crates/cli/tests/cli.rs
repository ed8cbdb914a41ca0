use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use asel_cli::data::read_cost_groups;
use asel_cli::{cmd_run, ExperimentConfig};
use tempfile::TempDir;

const TOY_FEATURES: &str = "ID,f\ni1,0\ni2,1\ni3,2\ni4,3\n";
const TOY_PERF: &str = "ID,A,B\ni1,1,9\ni2,2,1\ni3,10,3\ni4,4,10\n";

fn toy_dir(config: &str) -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("features.csv"), TOY_FEATURES).unwrap();
    fs::write(dir.path().join("perf.csv"), TOY_PERF).unwrap();
    let cfg = dir.path().join("experiment.toml");
    let text = format!(
        "[data]\nfeatures = \"features.csv\"\nperformances = \"perf.csv\"\n\n\
         [partition]\nnfolds = 2\nstratify = false\n\n{config}"
    );
    fs::write(&cfg, text).unwrap();
    (dir, cfg)
}

fn asel(args: &[&str], cfg: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asel"))
        .args(args)
        .arg(cfg)
        .output()
        .unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    csv::Reader::from_path(path)
        .unwrap()
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect()
}

#[test]
fn toy_summary_rows() {
    let (dir, cfg) = toy_dir("[eval]\ntimeout = 10\nsingle_best = [\"performance\", \"par\"]\n");
    let out = asel(&["run"], &cfg);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.path().join("results/summary.csv")).unwrap();
    assert_eq!(
        summary,
        "selector,mean_par,solved,mean_misclassification_penalty\n\
         vbs,2.25,4,0\nsingle_best,26.75,3,2\nsingle_best_par,26.75,3,2\n"
    );
    let folds: usize = fs::read_dir(dir.path().join("results/folds")).unwrap().count();
    assert_eq!(folds, 2);
    assert!(dir.path().join("results/folds/fold_01.csv").exists());
}

#[test]
fn per_instance_scores_round_trip_to_the_summary() {
    let (_dir, cfg_path) = toy_dir(
        "[eval]\ntimeout = 10\n\n[[selector]]\nname = \"nn\"\nbuilder = \"classify\"\nlearners = [{ kind = \"knn\" }]\n",
    );
    let cfg = ExperimentConfig::load(&cfg_path).unwrap();
    let report = cmd_run(&cfg).unwrap();
    let summary = csv_rows(&report.summary);
    for s in &report.scores {
        let rows = csv_rows(&cfg.output_dir.join("scores").join(format!("{}.csv", s.name)));
        assert_eq!(rows.len(), 4);
        let par: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
        assert_eq!(par, s.par);
        let solved = rows.iter().filter(|r| r[3] == "true").count();
        let line = summary.iter().find(|r| r[0] == s.name).unwrap();
        assert_eq!(line[2], solved.to_string());
        let mean: f64 = line[1].parse().unwrap();
        assert!((mean - par.iter().sum::<f64>() / 4.0).abs() < 1e-4);
    }
    let vbs = csv_rows(&cfg.output_dir.join("scores/vbs.csv"));
    let ids: Vec<&str> = vbs.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(ids, ["i1", "i2", "i3", "i4"]);
    let picks: Vec<&str> = vbs.iter().map(|r| r[1].as_str()).collect();
    assert_eq!(picks, ["A", "B", "B", "A"]);
}

#[test]
fn unknown_learner_names_the_field() {
    let (_dir, cfg) = toy_dir(
        "[[selector]]\nbuilder = \"classify\"\nlearners = [{ kind = \"knn\" }, { kind = \"j48\" }]\n",
    );
    let out = asel(&["run"], &cfg);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("selector[0].learners[1].kind"), "{err}");
    assert!(err.contains("j48"), "{err}");
}

#[test]
fn bad_cell_names_file_and_line() {
    let (dir, cfg) = toy_dir("");
    fs::write(dir.path().join("perf.csv"), "ID,A,B\ni1,1,9\ni2,oops,1\ni3,10,3\ni4,4,10\n").unwrap();
    let out = asel(&["validate"], &cfg);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("perf.csv:3") && err.contains("'A'"), "{err}");
}

#[test]
fn validate_reports_shapes() {
    let (_dir, cfg) = toy_dir("");
    let out = asel(&["validate"], &cfg);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("4 instances, 1 features, 2 algorithms, 2 partitions"), "{text}");
}

#[test]
fn rank_heatmap_is_ordinal() {
    let (dir, cfg) = toy_dir("");
    assert!(asel(&["export-heatmap", "--kind", "rank"], &cfg).status.success());
    let rows = csv_rows(&dir.path().join("results/heatmap_rank.csv"));
    assert_eq!(rows[0], ["i1", "1", "2"]);
    assert_eq!(rows[1], ["i2", "2", "1"]);
}

#[test]
fn norm_feature_heatmap_spans_unit_range() {
    let (dir, cfg) = toy_dir("");
    assert!(asel(&["export-heatmap", "--kind", "norm-feature"], &cfg).status.success());
    let col: Vec<f64> = csv_rows(&dir.path().join("results/heatmap_norm-feature.csv"))
        .iter()
        .map(|r| r[1].parse().unwrap())
        .collect();
    assert_eq!(col.iter().cloned().fold(f64::INFINITY, f64::min), -1.0);
    assert_eq!(col.iter().cloned().fold(f64::NEG_INFINITY, f64::max), 1.0);
}

#[test]
fn rank_diff_is_zero_for_a_perfect_predictor() {
    // the feature equals the index of the best algorithm
    let dir = tempfile::tempdir().unwrap();
    let mut feats = String::from("ID,x\n");
    let mut perf = String::from("ID,a0,a1,a2\n");
    for i in 0..30 {
        let best = i % 3i32;
        feats.push_str(&format!("n{i},{best}\n"));
        let cells: Vec<String> = (0..3).map(|a| (1 + 5 * (a - best).abs()).to_string()).collect();
        perf.push_str(&format!("n{i},{}\n", cells.join(",")));
    }
    fs::write(dir.path().join("f.csv"), feats).unwrap();
    fs::write(dir.path().join("p.csv"), perf).unwrap();
    let cfg = dir.path().join("e.toml");
    fs::write(
        &cfg,
        "[data]\nfeatures = \"f.csv\"\nperformances = \"p.csv\"\n\n\
         [[selector]]\nbuilder = \"regression\"\nregressor = { kind = \"knn\" }\n",
    )
    .unwrap();
    let out = asel(&["export-heatmap", "--kind", "rank-diff"], &cfg);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("results/heatmap_rank-diff.csv"));
    assert_eq!(rows.len(), 30);
    for r in rows {
        assert_eq!(r[1..], ["0", "0", "0"], "{r:?}");
    }
}

#[test]
fn model_heatmaps_need_a_selector() {
    let (_dir, cfg) = toy_dir("");
    for kind in ["par", "rank-diff"] {
        let out = asel(&["export-heatmap", "--kind", kind], &cfg);
        assert_eq!(out.status.code(), Some(1), "{kind}");
    }
    let (_dir, cfg) = toy_dir("[[selector]]\nbuilder = \"classify\"\nlearners = [{ kind = \"majority\" }]\n");
    let out = asel(&["export-heatmap", "--kind", "par", "--selector", "nope"], &cfg);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn log_perf_rejects_non_positive_values() {
    let (dir, cfg) = toy_dir("");
    fs::write(dir.path().join("perf.csv"), "ID,A,B\ni1,0,9\ni2,2,1\ni3,10,3\ni4,4,10\n").unwrap();
    assert_eq!(asel(&["export-heatmap", "--kind", "log-perf"], &cfg).status.code(), Some(1));
}

#[test]
fn cost_group_file_is_parsed_and_charged() {
    let (dir, cfg) = toy_dir("");
    let groups = "group,features\nbasic,f\n\nID,basic\ni1,0.5\ni2,0.5\ni3,0.5\ni4,9.5\n";
    let path = dir.path().join("groups.csv");
    fs::write(&path, groups).unwrap();
    let (parsed, table) = read_cost_groups(&path).unwrap();
    assert_eq!(parsed.len(), 1);
    assert_eq!(parsed[0].name, "basic");
    assert_eq!(parsed[0].features, ["f"]);
    assert_eq!(table.table.columns(), ["ID", "basic"]);
    assert_eq!(table.lines, [5, 6, 7, 8]);

    let text = "[data]\nfeatures = \"features.csv\"\nperformances = \"perf.csv\"\ncost_groups = \"groups.csv\"\n\n\
         [partition]\nnfolds = 2\nstratify = false\n\n[eval]\ntimeout = 10\n\n\
         [[selector]]\nname = \"maj\"\nbuilder = \"classify\"\nlearners = [{ kind = \"majority\" }]\n";
    fs::write(&cfg, text).unwrap();
    let c = ExperimentConfig::load(&cfg).unwrap();
    let report = cmd_run(&c).unwrap();
    let maj = report.scores.iter().find(|s| s.name == "maj").unwrap();
    // i4 pays 9.5 on top of its runtime and times out whatever was chosen
    assert!(!maj.solved[3]);
    assert_eq!(maj.par[3], 100.0);
    let vbs = &report.scores[0];
    assert_eq!(vbs.par, [1.0, 1.0, 3.0, 4.0]);
}

#[test]
fn malformed_cost_group_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.csv");
    fs::write(&path, "grp,features\nbasic,f\n\nID,basic\ni1,1\n").unwrap();
    assert!(read_cost_groups(&path).is_err());
    fs::write(&path, "group,features\nbasic,f\nID,basic\ni1,1\n").unwrap();
    assert!(read_cost_groups(&path).is_err());
}

#[test]
fn runs_are_byte_identical_across_thread_counts() {
    let (dir, cfg) = toy_dir(
        "[[selector]]\nname = \"km\"\nbuilder = \"cluster\"\nclusterers = [{ kind = \"kmeans\", k = 2 }]\n\n\
         [[selector]]\nname = \"ols\"\nbuilder = \"regression\"\nregressor = { kind = \"least-squares\" }\n",
    );
    let mut outputs = Vec::new();
    for jobs in ["1", "4"] {
        let out_dir = dir.path().join(format!("out{jobs}"));
        let out = asel(
            &["run", "--jobs", jobs, "--seed", "7", "--output-dir", out_dir.to_str().unwrap()],
            &cfg,
        );
        assert!(out.status.success());
        outputs.push(fs::read(out_dir.join("summary.csv")).unwrap());
        outputs.push(fs::read(out_dir.join("scores/km.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[2]);
    assert_eq!(outputs[1], outputs[3]);
}

#[test]
fn pipeline_writes_one_decision_per_instance() {
    let (dir, cfg) = toy_dir(
        "[[selector]]\nname = \"nn\"\nbuilder = \"classify\"\nlearners = [{ kind = \"knn\" }]\n\n\
         [pipeline]\npresolver = \"A\"\npresolve_limit = 1.5\nbackup = \"B\"\nselector = \"nn\"\nnfolds = 2\n",
    );
    let out = asel(&["run"], &cfg);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("results/pipeline_decisions.csv"));
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0], ["i1", "presolved", "A"]);
    assert!(rows[1..].iter().all(|r| r[1] == "selected"));
}
