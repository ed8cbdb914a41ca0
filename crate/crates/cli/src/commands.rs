//! The `run`, `validate` and `export-heatmap` commands.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use asel::evaluate::{choices, mean, predictions, EvalData, Selector};
use asel::pipeline::{build_staged, GateConfig, Stage, StagedSelectorConfig};
use asel::preprocess::{feature_filter, fit_scaler, impute_censored};
use asel::{
    cv_folds, misclassification_penalties, par_scores, single_best, successes, train_test, vbs,
    Dataset, Partitioning, Prediction, SelectionModel,
};
use log::{info, warn};

use crate::config::{single_best_name, ExperimentConfig, PartitionConfig};
use crate::data::{aligned_column, columns_except, load_dataset, numbers};
use crate::error::{core, CliError, CliResult};
use crate::format::sig6;

/// Command-line overrides applied on top of a configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(seed) = self.seed {
            cfg.partition = cfg.partition.with_seed(seed);
        }
        if let Some(dir) = &self.output_dir {
            cfg.output_dir = dir.clone();
        }
    }
}

/// Dataset after preprocessing, with its partitioning.
pub struct Prepared {
    pub dataset: Arc<Dataset>,
    pub partitioning: Partitioning,
}

pub fn prepare(cfg: &ExperimentConfig) -> CliResult<Prepared> {
    let mut d = load_dataset(&cfg.data)?;
    info!(
        "loaded {} instances, {} features, {} algorithms",
        d.len(),
        d.feature_names().len(),
        d.n_algorithms()
    );
    if let Some((regressor, opts)) = &cfg.preprocess.impute {
        let r = impute_censored(&d, regressor, opts).map_err(core("preprocess.impute"))?;
        if !r.below_cutoff.is_empty() {
            warn!(
                "{} imputed values are below the recorded cutoff of their run",
                r.below_cutoff.len()
            );
        }
        d = r.dataset;
    }
    if let Some(method) = &cfg.preprocess.filter {
        let (filtered, report) = feature_filter(method, &d).map_err(core("preprocess.filter"))?;
        info!("feature filter kept {:?}, dropped {:?}", report.kept, report.dropped);
        d = filtered;
    }
    let d = Arc::new(d);
    let partitioning = match cfg.partition {
        PartitionConfig::CrossValidation { nfolds, stratify, seed } => cv_folds(d.clone(), nfolds, stratify, seed),
        PartitionConfig::TrainTest { ratio, stratify, seed } => train_test(d.clone(), ratio, stratify, seed),
    }
    .map_err(core("partition"))?;
    cfg.eval.timeout_for(&d).map_err(core("eval"))?;
    Ok(Prepared {
        dataset: d,
        partitioning,
    })
}

pub fn train(cfg: &ExperimentConfig, p: &Prepared) -> CliResult<Vec<(String, SelectionModel)>> {
    cfg.selectors
        .iter()
        .map(|s| {
            info!("building {} = {}", s.name, s.builder.description());
            let m = s.builder.build(&p.partitioning).map_err(core(format!("selector '{}'", s.name)))?;
            Ok((s.name.clone(), m))
        })
        .collect()
}

/// Per-instance evaluation of one selector or baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct Scores {
    pub name: String,
    pub instances: Vec<usize>,
    pub choices: Vec<usize>,
    pub par: Vec<f64>,
    pub solved: Vec<bool>,
    pub penalties: Vec<f64>,
}

impl Scores {
    fn compute(name: &str, p: &Prepared, s: &Selector<'_>, cfg: &ExperimentConfig) -> CliResult<Scores> {
        let data = EvalData::Partitioning(&p.partitioning);
        let ctx = || core(format!("evaluating '{name}'"));
        let chosen = choices(data, s).map_err(ctx())?;
        let par = par_scores(data, s, &cfg.eval).map_err(ctx())?;
        let solved = successes(data, s, &cfg.eval).map_err(ctx())?;
        let penalties = misclassification_penalties(data, s).map_err(ctx())?;
        // report in dataset order rather than fold order
        let mut order: Vec<usize> = (0..chosen.len()).collect();
        order.sort_by_key(|&k| chosen[k].0);
        Ok(Scores {
            name: name.to_string(),
            instances: order.iter().map(|&k| chosen[k].0).collect(),
            choices: order.iter().map(|&k| chosen[k].1).collect(),
            par: order.iter().map(|&k| par[k]).collect(),
            solved: order.iter().map(|&k| solved[k]).collect(),
            penalties: order.iter().map(|&k| penalties[k]).collect(),
        })
    }

    pub fn summary_row(&self) -> [String; 4] {
        [
            self.name.clone(),
            sig6(mean(&self.par)),
            self.solved.iter().filter(|&&s| s).count().to_string(),
            sig6(mean(&self.penalties)),
        ]
    }
}

/// Baselines first, then the configured selectors, all evaluated on the test
/// instances of the partitioning.
pub fn evaluate_all(
    cfg: &ExperimentConfig,
    p: &Prepared,
    models: &[(String, SelectionModel)],
) -> CliResult<Vec<Scores>> {
    let d = p.dataset.as_ref();
    let mut out = Vec::new();
    if cfg.vbs {
        out.push(Scores::compute("vbs", p, &vbs(d), cfg)?);
    }
    for &mode in &cfg.single_best {
        let s = single_best(d, mode, &cfg.eval).map_err(core("eval.single_best"))?;
        out.push(Scores::compute(&single_best_name(mode), p, &s, cfg)?);
    }
    for (name, m) in models {
        out.push(Scores::compute(name, p, &Selector::Model(m), cfg)?);
    }
    Ok(out)
}

fn writer(path: &Path) -> CliResult<csv::Writer<fs::File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::runtime(format!("{}: {e}", dir.display())))?;
    }
    csv::Writer::from_path(path).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> CliResult<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let err = |e: csv::Error| CliError::runtime(format!("{}: {e}", path.display()));
    let mut w = writer(path)?;
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

#[derive(Debug)]
pub struct RunReport {
    pub scores: Vec<Scores>,
    pub summary: PathBuf,
}

pub fn cmd_run(cfg: &ExperimentConfig) -> CliResult<RunReport> {
    let p = prepare(cfg)?;
    let models = train(cfg, &p)?;
    let scores = evaluate_all(cfg, &p, &models)?;
    let d = p.dataset.as_ref();
    let out = &cfg.output_dir;

    let summary = out.join("summary.csv");
    write_rows(
        &summary,
        &["selector", "mean_par", "solved", "mean_misclassification_penalty"],
        scores.iter().map(Scores::summary_row),
    )?;
    for s in &scores {
        write_rows(
            &out.join("scores").join(format!("{}.csv", s.name)),
            &[cfg.data.id_column.as_str(), "algorithm", "par", "solved", "misclassification_penalty"],
            (0..s.instances.len()).map(|k| {
                [
                    d.instance_ids()[s.instances[k]].clone(),
                    d.algorithm_names()[s.choices[k]].clone(),
                    s.par[k].to_string(),
                    s.solved[k].to_string(),
                    s.penalties[k].to_string(),
                ]
            }),
        )?;
    }
    for (k, fold) in p.partitioning.test_sets().iter().enumerate() {
        write_rows(
            &out.join("folds").join(format!("fold_{:02}.csv", k + 1)),
            &[cfg.data.id_column.as_str()],
            fold.iter().map(|&i| [d.instance_ids()[i].clone()]),
        )?;
    }
    if let Some(pl) = &cfg.pipeline {
        run_pipeline(cfg, pl, &p)?;
    }
    Ok(RunReport { scores, summary })
}

fn run_pipeline(cfg: &ExperimentConfig, pl: &crate::config::PipelineConfig, p: &Prepared) -> CliResult<()> {
    let d = p.dataset.as_ref();
    let mut staged = StagedSelectorConfig::new(
        &pl.presolver,
        pl.presolve_limit,
        &pl.backup,
        cfg.selectors[pl.selector].builder.clone(),
    );
    staged.nfolds = pl.nfolds;
    staged.seed = cfg.partition.seed();
    let mut times = None;
    if let Some(g) = &pl.gate {
        let reduced = columns_except(&g.reduced_features, &cfg.data.id_column)?;
        staged.gate = Some(GateConfig {
            reduced_features: reduced,
            regressor: g.regressor.clone(),
            feature_time_limit: g.limit,
        });
        let raw = aligned_column(&g.feature_times, &cfg.data.id_column, "time", d)?;
        times = Some(numbers(&raw, &g.feature_times, d)?);
    }
    let mut classes = None;
    if let Some((path, spec)) = &pl.class {
        staged.class_model = Some(spec.clone());
        classes = Some(aligned_column(path, &cfg.data.id_column, "class", d)?);
    }
    let s = build_staged(&staged, d, times.as_deref(), classes.as_deref()).map_err(core("pipeline"))?;

    let reduced_idx: Vec<usize> = staged
        .gate
        .as_ref()
        .map(|g| {
            g.reduced_features
                .iter()
                .map(|f| d.feature_names().iter().position(|n| n == f).expect("checked by build_staged"))
                .collect()
        })
        .unwrap_or_default();
    let presolver = d.algorithm_index(&pl.presolver).expect("checked by build_staged");
    let rows = (0..d.len())
        .map(|i| {
            let x = &d.features()[i];
            let reduced: Vec<f64> = reduced_idx.iter().map(|&j| x[j]).collect();
            let presolved = d.performances()[i][presolver] <= pl.presolve_limit;
            let decision = s.decide(presolved, &reduced, || Ok(x.clone())).map_err(core("pipeline"))?;
            let stage = match decision.stage {
                Stage::Presolved => "presolved",
                Stage::Backup => "backup",
                Stage::Selected => "selected",
            };
            Ok([d.instance_ids()[i].clone(), stage.to_string(), decision.algorithm_name])
        })
        .collect::<CliResult<Vec<_>>>()?;
    write_rows(
        &cfg.output_dir.join("pipeline_decisions.csv"),
        &[cfg.data.id_column.as_str(), "stage", "algorithm"],
        rows,
    )
}

/// Loads the data, applies preprocessing and checks the partitioning,
/// without training anything.
pub fn cmd_validate(cfg: &ExperimentConfig) -> CliResult<String> {
    let p = prepare(cfg)?;
    let d = p.dataset.as_ref();
    Ok(format!(
        "ok: {} instances, {} features, {} algorithms, {} partitions, {} selectors",
        d.len(),
        d.feature_names().len(),
        d.n_algorithms(),
        p.partitioning.len(),
        cfg.selectors.len()
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum HeatmapKind {
    Perf,
    LogPerf,
    Rank,
    Feature,
    NormFeature,
    Par,
    RankDiff,
}

impl HeatmapKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            HeatmapKind::Perf => "perf",
            HeatmapKind::LogPerf => "log-perf",
            HeatmapKind::Rank => "rank",
            HeatmapKind::Feature => "feature",
            HeatmapKind::NormFeature => "norm-feature",
            HeatmapKind::Par => "par",
            HeatmapKind::RankDiff => "rank-diff",
        }
    }

    fn needs_model(&self) -> bool {
        matches!(self, HeatmapKind::Par | HeatmapKind::RankDiff)
    }
}

/// Header and rows of a heatmap matrix.
pub type Matrix = (Vec<String>, Vec<(String, Vec<String>)>);

/// Ordinal rank (1 = best) of every algorithm; ties follow column order.
fn ranks(p: &Prediction, m: usize) -> Vec<Option<usize>> {
    let mut r = vec![None; m];
    for (pos, entry) in p.ranking().iter().enumerate() {
        r[entry.algorithm] = Some(pos + 1);
    }
    r
}

fn true_ranking(d: &Dataset, i: usize) -> Prediction {
    Prediction::ranked_by_score(d.performances()[i].iter().copied().enumerate().collect(), d.minimize())
}

pub fn heatmap(cfg: &ExperimentConfig, kind: HeatmapKind, selector: Option<&str>) -> CliResult<Matrix> {
    if kind.needs_model() && cfg.selectors.is_empty() {
        return Err(CliError::invalid(format!(
            "heatmap '{}' needs a trained model but no [[selector]] is configured",
            kind.as_str()
        )));
    }
    let chosen: Vec<usize> = match selector {
        None if kind == HeatmapKind::RankDiff => vec![0],
        None => (0..cfg.selectors.len()).collect(),
        Some(name) => vec![cfg
            .selectors
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| CliError::invalid(format!("--selector: no selector named '{name}'")))?],
    };
    let p = prepare(cfg)?;
    let d = p.dataset.as_ref();
    let ids = d.instance_ids();
    let num = |x: f64| x.to_string();
    let all_rows = |f: &dyn Fn(usize) -> Vec<String>| (0..d.len()).map(|i| (ids[i].clone(), f(i))).collect();
    let algs = d.algorithm_names().to_vec();
    Ok(match kind {
        HeatmapKind::Perf => (algs, all_rows(&|i| d.performances()[i].iter().map(|&v| num(v)).collect())),
        HeatmapKind::LogPerf => {
            if let Some(v) = d.performances().iter().flatten().find(|v| **v <= 0.0) {
                return Err(CliError::invalid(format!(
                    "log-perf needs positive performance values, found {v}"
                )));
            }
            (algs, all_rows(&|i| d.performances()[i].iter().map(|&v| num(v.log10())).collect()))
        }
        HeatmapKind::Rank => (
            algs,
            all_rows(&|i| {
                ranks(&true_ranking(d, i), d.n_algorithms())
                    .into_iter()
                    .map(|r| r.expect("full ranking").to_string())
                    .collect()
            }),
        ),
        HeatmapKind::Feature => (
            d.feature_names().to_vec(),
            all_rows(&|i| d.features()[i].iter().map(|&v| num(v)).collect()),
        ),
        HeatmapKind::NormFeature => {
            let scaled = fit_scaler(d.features())
                .and_then(|s| s.apply(d.features()))
                .map_err(core("norm-feature"))?;
            (
                d.feature_names().to_vec(),
                all_rows(&|i| scaled[i].iter().map(|&v| num(v)).collect()),
            )
        }
        HeatmapKind::Par => {
            let subset = ExperimentConfig {
                selectors: chosen.iter().map(|&k| cfg.selectors[k].clone()).collect(),
                ..cfg.clone()
            };
            let models = train(&subset, &p)?;
            let scores = evaluate_all(&subset, &p, &models)?;
            let header = scores.iter().map(|s| s.name.clone()).collect();
            let rows = (0..scores[0].instances.len())
                .map(|k| {
                    (
                        ids[scores[0].instances[k]].clone(),
                        scores.iter().map(|s| num(s.par[k])).collect(),
                    )
                })
                .collect();
            (header, rows)
        }
        HeatmapKind::RankDiff => {
            let subset = ExperimentConfig {
                selectors: vec![cfg.selectors[chosen[0]].clone()],
                ..cfg.clone()
            };
            let models = train(&subset, &p)?;
            let mut preds = predictions(&p.partitioning, &Selector::Model(&models[0].1))
                .map_err(core("rank-diff"))?;
            preds.sort_by_key(|(i, _)| *i);
            let rows = preds
                .iter()
                .map(|(i, pred)| {
                    let actual = ranks(&true_ranking(d, *i), d.n_algorithms());
                    let predicted = ranks(pred, d.n_algorithms());
                    let cells = actual
                        .iter()
                        .zip(&predicted)
                        .map(|(a, p)| match (a, p) {
                            (Some(a), Some(p)) => (*a as i64 - *p as i64).to_string(),
                            _ => "NA".to_string(),
                        })
                        .collect();
                    (ids[*i].clone(), cells)
                })
                .collect();
            (algs, rows)
        }
    })
}

pub fn cmd_export_heatmap(cfg: &ExperimentConfig, kind: HeatmapKind, selector: Option<&str>) -> CliResult<PathBuf> {
    let (header, rows) = heatmap(cfg, kind, selector)?;
    let path = cfg.output_dir.join(format!("heatmap_{}.csv", kind.as_str()));
    let mut full_header = vec![cfg.data.id_column.clone()];
    full_header.extend(header);
    let header_refs: Vec<&str> = full_header.iter().map(String::as_str).collect();
    write_rows(
        &path,
        &header_refs,
        rows.into_iter().map(|(id, cells)| std::iter::once(id).chain(cells).collect::<Vec<_>>()),
    )?;
    Ok(path)
}
