//! Experiment configuration: TOML schema and its validation.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use asel::evaluate::EvalConfig;
use asel::learners::{ClassifierSpec, ClustererSpec, RegressorSpec};
use asel::partition::{DEFAULT_FOLDS, DEFAULT_RATIO, DEFAULT_SEED};
use asel::preprocess::{FilterMethod, ImputeOptions, Normalize, Preprocessor};
use asel::selectors::{Classify, ClassifyPairs, Cluster, Expansion, Regression};
use asel::{BestBy, SelectorBuilder};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    data: RawData,
    #[serde(default)]
    partition: RawPartition,
    #[serde(default)]
    preprocess: RawPreprocess,
    #[serde(default)]
    eval: RawEval,
    #[serde(default, rename = "selector")]
    selectors: Vec<RawSelector>,
    output_dir: Option<PathBuf>,
    pipeline: Option<RawPipeline>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawData {
    features: PathBuf,
    performances: PathBuf,
    successes: Option<PathBuf>,
    costs: Option<RawCosts>,
    cost_groups: Option<PathBuf>,
    #[serde(default = "default_id")]
    id_column: String,
    #[serde(default = "yes")]
    minimize: bool,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawCosts {
    Scalar(f64),
    File(PathBuf),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPartition {
    #[serde(default = "default_kind")]
    kind: String,
    #[serde(default = "default_folds")]
    nfolds: usize,
    #[serde(default = "default_ratio")]
    ratio: f64,
    #[serde(default = "yes")]
    stratify: bool,
    #[serde(default = "default_seed")]
    seed: u64,
}

impl Default for RawPartition {
    fn default() -> Self {
        RawPartition {
            kind: default_kind(),
            nfolds: DEFAULT_FOLDS,
            ratio: DEFAULT_RATIO,
            stratify: true,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPreprocess {
    filter: Option<RawFilter>,
    #[serde(default)]
    normalize: bool,
    impute: Option<RawImpute>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFilter {
    method: String,
    threshold: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawImpute {
    regressor: Option<RawLearner>,
    epsilon: Option<f64>,
    max_iter: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEval {
    timeout: Option<f64>,
    #[serde(default = "default_factor")]
    par_factor: f64,
    #[serde(default = "yes")]
    include_costs: bool,
    #[serde(default = "yes")]
    vbs: bool,
    #[serde(default = "default_single_best")]
    single_best: Vec<String>,
}

impl Default for RawEval {
    fn default() -> Self {
        RawEval {
            timeout: None,
            par_factor: default_factor(),
            include_costs: true,
            vbs: true,
            single_best: default_single_best(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSelector {
    name: Option<String>,
    builder: String,
    learners: Option<Vec<RawLearner>>,
    regressor: Option<RawLearner>,
    classifier: Option<RawLearner>,
    clusterers: Option<Vec<RawLearner>>,
    combine: Option<RawLearner>,
    combinator: Option<RawLearner>,
    expand: Option<String>,
    best_by: Option<String>,
    normalize: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLearner {
    kind: String,
    k: Option<usize>,
    max_iter: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPipeline {
    presolver: String,
    presolve_limit: f64,
    backup: String,
    selector: String,
    reduced_features: Option<PathBuf>,
    feature_times: Option<PathBuf>,
    feature_time_limit: Option<f64>,
    gate: Option<RawLearner>,
    class: Option<PathBuf>,
    class_model: Option<RawLearner>,
    nfolds: Option<usize>,
}

fn default_id() -> String {
    "ID".into()
}
fn yes() -> bool {
    true
}
fn default_kind() -> String {
    "cv".into()
}
fn default_folds() -> usize {
    DEFAULT_FOLDS
}
fn default_ratio() -> f64 {
    DEFAULT_RATIO
}
fn default_seed() -> u64 {
    DEFAULT_SEED
}
fn default_factor() -> f64 {
    asel::evaluate::DEFAULT_PAR_FACTOR
}
fn default_single_best() -> Vec<String> {
    vec!["performance".into()]
}

#[derive(Debug, Clone)]
pub enum CostSource {
    Scalar(f64),
    PerFeature(PathBuf),
    Grouped(PathBuf),
}

#[derive(Debug, Clone)]
pub struct DataConfig {
    pub features: PathBuf,
    pub performances: PathBuf,
    pub successes: Option<PathBuf>,
    pub costs: Option<CostSource>,
    pub id_column: String,
    pub minimize: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PartitionConfig {
    CrossValidation { nfolds: usize, stratify: bool, seed: u64 },
    TrainTest { ratio: f64, stratify: bool, seed: u64 },
}

impl PartitionConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            PartitionConfig::CrossValidation { nfolds, stratify, .. } => {
                PartitionConfig::CrossValidation { nfolds, stratify, seed }
            }
            PartitionConfig::TrainTest { ratio, stratify, .. } => {
                PartitionConfig::TrainTest { ratio, stratify, seed }
            }
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            PartitionConfig::CrossValidation { seed, .. } | PartitionConfig::TrainTest { seed, .. } => *seed,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct PreprocessConfig {
    pub filter: Option<FilterMethod>,
    pub impute: Option<(RegressorSpec, ImputeOptions)>,
}

#[derive(Debug, Clone)]
pub struct NamedSelector {
    pub name: String,
    pub builder: SelectorBuilder,
}

#[derive(Debug, Clone)]
pub struct GateSettings {
    pub reduced_features: PathBuf,
    pub feature_times: PathBuf,
    pub limit: f64,
    pub regressor: RegressorSpec,
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub presolver: String,
    pub presolve_limit: f64,
    pub backup: String,
    /// Index into [`ExperimentConfig::selectors`].
    pub selector: usize,
    pub gate: Option<GateSettings>,
    pub class: Option<(PathBuf, ClassifierSpec)>,
    pub nfolds: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    pub partition: PartitionConfig,
    pub preprocess: PreprocessConfig,
    pub eval: EvalConfig,
    pub vbs: bool,
    pub single_best: Vec<BestBy>,
    pub selectors: Vec<NamedSelector>,
    pub output_dir: PathBuf,
    pub pipeline: Option<PipelineConfig>,
}

fn field_err(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::invalid(format!("{field}: {msg}"))
}

/// Names of the baseline rows in a summary.
pub fn single_best_name(mode: BestBy) -> String {
    match mode {
        BestBy::Performance => "single_best".into(),
        other => format!("single_best_{}", other.as_str()),
    }
}

impl ExperimentConfig {
    /// Reads and validates a configuration file; relative paths are resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| match e {
            CliError::Invalid(m) => CliError::Invalid(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str, base: &Path) -> CliResult<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(CliError::invalid)?;
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        let existing = |field: &str, p: &Path| -> CliResult<PathBuf> {
            let full = resolve(p);
            if full.is_file() {
                Ok(full)
            } else {
                Err(field_err(field, format!("file '{}' does not exist", full.display())))
            }
        };

        let d = &raw.data;
        let costs = match (&d.costs, &d.cost_groups) {
            (Some(_), Some(_)) => {
                return Err(field_err("data.cost_groups", "give either data.costs or data.cost_groups"))
            }
            (Some(RawCosts::Scalar(c)), None) => Some(CostSource::Scalar(*c)),
            (Some(RawCosts::File(p)), None) => Some(CostSource::PerFeature(existing("data.costs", p)?)),
            (None, Some(p)) => Some(CostSource::Grouped(existing("data.cost_groups", p)?)),
            (None, None) => None,
        };
        if d.id_column.trim().is_empty() {
            return Err(field_err("data.id_column", "must not be empty"));
        }
        let data = DataConfig {
            features: existing("data.features", &d.features)?,
            performances: existing("data.performances", &d.performances)?,
            successes: d.successes.as_deref().map(|p| existing("data.successes", p)).transpose()?,
            costs,
            id_column: d.id_column.clone(),
            minimize: d.minimize,
        };

        let p = &raw.partition;
        let partition = match p.kind.as_str() {
            "cv" => {
                if p.nfolds < 2 {
                    return Err(field_err("partition.nfolds", "must be at least 2"));
                }
                PartitionConfig::CrossValidation {
                    nfolds: p.nfolds,
                    stratify: p.stratify,
                    seed: p.seed,
                }
            }
            "train-test" => {
                if !(p.ratio > 0.0 && p.ratio < 1.0) {
                    return Err(field_err("partition.ratio", "must lie strictly between 0 and 1"));
                }
                PartitionConfig::TrainTest {
                    ratio: p.ratio,
                    stratify: p.stratify,
                    seed: p.seed,
                }
            }
            other => {
                return Err(field_err(
                    "partition.kind",
                    format!("unknown partitioning '{other}' (expected cv or train-test)"),
                ))
            }
        };

        let pre = &raw.preprocess;
        let filter = pre
            .filter
            .as_ref()
            .map(|f| match f.method.as_str() {
                "variance" => Ok(FilterMethod::Variance { threshold: f.threshold }),
                "correlation" => Ok(FilterMethod::Correlation { threshold: f.threshold }),
                other => Err(field_err(
                    "preprocess.filter.method",
                    format!("unknown filter '{other}' (expected variance or correlation)"),
                )),
            })
            .transpose()?;
        let impute = pre
            .impute
            .as_ref()
            .map(|im| -> CliResult<_> {
                let regressor = match &im.regressor {
                    Some(r) => regressor_spec(r, "preprocess.impute.regressor")?,
                    None => RegressorSpec::LeastSquares,
                };
                let mut opts = ImputeOptions::default();
                if let Some(e) = im.epsilon {
                    if !(e > 0.0) {
                        return Err(field_err("preprocess.impute.epsilon", "must be positive"));
                    }
                    opts.epsilon = e;
                }
                if let Some(m) = im.max_iter {
                    if m == 0 {
                        return Err(field_err("preprocess.impute.max_iter", "must be at least 1"));
                    }
                    opts.max_iter = m;
                }
                Ok((regressor, opts))
            })
            .transpose()?;

        let e = &raw.eval;
        let eval = EvalConfig {
            timeout: e.timeout,
            par_factor: e.par_factor,
            include_costs: e.include_costs,
        };
        if let Some(t) = e.timeout {
            if !(t > 0.0 && t.is_finite()) {
                return Err(field_err("eval.timeout", "must be positive"));
            }
        }
        if !(e.par_factor >= 1.0 && e.par_factor.is_finite()) {
            return Err(field_err("eval.par_factor", "must be at least 1"));
        }
        let single_best = e
            .single_best
            .iter()
            .enumerate()
            .map(|(i, s)| s.parse::<BestBy>().map_err(|err| field_err(&format!("eval.single_best[{i}]"), err)))
            .collect::<CliResult<Vec<_>>>()?;

        let mut names: HashSet<String> = HashSet::new();
        names.insert("vbs".into());
        for m in &single_best {
            names.insert(single_best_name(*m));
        }
        let mut selectors = Vec::with_capacity(raw.selectors.len());
        for (i, s) in raw.selectors.iter().enumerate() {
            let field = format!("selector[{i}]");
            let builder = selector_builder(s, &field, pre.normalize, &eval)?;
            let name = s.name.clone().unwrap_or_else(|| format!("{}-{i}", s.builder));
            if name.is_empty()
                || !name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
            {
                return Err(field_err(
                    &format!("{field}.name"),
                    format!("'{name}' must be non-empty and use only letters, digits, '_', '-' or '.'"),
                ));
            }
            if !names.insert(name.clone()) {
                return Err(field_err(&format!("{field}.name"), format!("name '{name}' is already taken")));
            }
            selectors.push(NamedSelector { name, builder });
        }

        let pipeline = raw
            .pipeline
            .as_ref()
            .map(|pl| -> CliResult<PipelineConfig> {
                if !(pl.presolve_limit > 0.0) {
                    return Err(field_err("pipeline.presolve_limit", "must be positive"));
                }
                let selector = selectors
                    .iter()
                    .position(|s| s.name == pl.selector)
                    .ok_or_else(|| {
                        field_err("pipeline.selector", format!("no selector named '{}'", pl.selector))
                    })?;
                let gate = match (&pl.reduced_features, &pl.feature_times, pl.feature_time_limit) {
                    (None, None, None) if pl.gate.is_none() => None,
                    (Some(r), Some(t), Some(limit)) => {
                        if !(limit > 0.0) {
                            return Err(field_err("pipeline.feature_time_limit", "must be positive"));
                        }
                        Some(GateSettings {
                            reduced_features: existing("pipeline.reduced_features", r)?,
                            feature_times: existing("pipeline.feature_times", t)?,
                            limit,
                            regressor: match &pl.gate {
                                Some(g) => regressor_spec(g, "pipeline.gate")?,
                                None => RegressorSpec::LeastSquares,
                            },
                        })
                    }
                    _ => {
                        return Err(field_err(
                            "pipeline",
                            "the feature-time gate needs reduced_features, feature_times and feature_time_limit",
                        ))
                    }
                };
                let class = match (&pl.class, &pl.class_model) {
                    (None, None) => None,
                    (Some(path), model) => Some((
                        existing("pipeline.class", path)?,
                        match model {
                            Some(m) => classifier_spec(m, "pipeline.class_model")?,
                            None => ClassifierSpec::Stump,
                        },
                    )),
                    (None, Some(_)) => {
                        return Err(field_err("pipeline.class", "class_model needs a class table"))
                    }
                };
                let nfolds = pl.nfolds.unwrap_or(DEFAULT_FOLDS);
                if nfolds < 2 {
                    return Err(field_err("pipeline.nfolds", "must be at least 2"));
                }
                Ok(PipelineConfig {
                    presolver: pl.presolver.clone(),
                    presolve_limit: pl.presolve_limit,
                    backup: pl.backup.clone(),
                    selector,
                    gate,
                    class,
                    nfolds,
                })
            })
            .transpose()?;

        Ok(ExperimentConfig {
            data,
            partition,
            preprocess: PreprocessConfig { filter, impute },
            eval,
            vbs: e.vbs,
            single_best,
            selectors,
            output_dir: resolve(raw.output_dir.as_deref().unwrap_or(Path::new("results"))),
            pipeline,
        })
    }
}

fn classifier_spec(l: &RawLearner, field: &str) -> CliResult<ClassifierSpec> {
    let spec = match l.kind.as_str() {
        "majority" => ClassifierSpec::Majority,
        "knn" => ClassifierSpec::Knn { k: l.k.unwrap_or(1) },
        "stump" => ClassifierSpec::Stump,
        other => {
            return Err(field_err(
                &format!("{field}.kind"),
                format!("unknown classifier '{other}' (expected majority, knn or stump)"),
            ))
        }
    };
    check_params(l, field, matches!(spec, ClassifierSpec::Knn { .. }), false)?;
    Ok(spec)
}

fn regressor_spec(l: &RawLearner, field: &str) -> CliResult<RegressorSpec> {
    let spec = match l.kind.as_str() {
        "least-squares" => RegressorSpec::LeastSquares,
        "knn" => RegressorSpec::Knn { k: l.k.unwrap_or(1) },
        other => {
            return Err(field_err(
                &format!("{field}.kind"),
                format!("unknown regressor '{other}' (expected least-squares or knn)"),
            ))
        }
    };
    check_params(l, field, matches!(spec, RegressorSpec::Knn { .. }), false)?;
    Ok(spec)
}

fn clusterer_spec(l: &RawLearner, field: &str) -> CliResult<ClustererSpec> {
    match l.kind.as_str() {
        "kmeans" => {
            let k = l
                .k
                .ok_or_else(|| field_err(&format!("{field}.k"), "kmeans needs the number of clusters k"))?;
            check_params(l, field, true, true)?;
            Ok(ClustererSpec::KMeans {
                k,
                max_iter: l.max_iter.unwrap_or(100),
            })
        }
        other => Err(field_err(
            &format!("{field}.kind"),
            format!("unknown clusterer '{other}' (expected kmeans)"),
        )),
    }
}

fn check_params(l: &RawLearner, field: &str, takes_k: bool, takes_iter: bool) -> CliResult<()> {
    match l.k {
        Some(_) if !takes_k => {
            return Err(field_err(&format!("{field}.k"), format!("'{}' takes no k", l.kind)))
        }
        Some(0) => return Err(field_err(&format!("{field}.k"), "must be at least 1")),
        _ => {}
    }
    match l.max_iter {
        Some(_) if !takes_iter => Err(field_err(
            &format!("{field}.max_iter"),
            format!("'{}' takes no max_iter", l.kind),
        )),
        Some(0) => Err(field_err(&format!("{field}.max_iter"), "must be at least 1")),
        _ => Ok(()),
    }
}

fn selector_builder(
    s: &RawSelector,
    field: &str,
    normalize_default: bool,
    eval: &EvalConfig,
) -> CliResult<SelectorBuilder> {
    let sub = |name: &str| format!("{field}.{name}");
    let unused = |name: &str, present: bool| -> CliResult<()> {
        if present {
            Err(field_err(&sub(name), format!("not used by builder '{}'", s.builder)))
        } else {
            Ok(())
        }
    };
    let required = |name: &str| field_err(&sub(name), format!("required by builder '{}'", s.builder));
    let combine = |name: &str, l: &Option<RawLearner>| l.as_ref().map(|c| classifier_spec(c, &sub(name))).transpose();
    let pre: Option<Arc<dyn Preprocessor>> = if s.normalize.unwrap_or(normalize_default) {
        Some(Arc::new(Normalize))
    } else {
        None
    };

    let b = match s.builder.as_str() {
        "classify" => {
            unused("regressor", s.regressor.is_some())?;
            unused("classifier", s.classifier.is_some())?;
            unused("clusterers", s.clusterers.is_some())?;
            unused("combinator", s.combinator.is_some())?;
            unused("expand", s.expand.is_some())?;
            unused("best_by", s.best_by.is_some())?;
            let learners = s.learners.as_ref().ok_or_else(|| required("learners"))?;
            if learners.is_empty() {
                return Err(field_err(&sub("learners"), "needs at least one classifier"));
            }
            let specs = learners
                .iter()
                .enumerate()
                .map(|(j, l)| classifier_spec(l, &format!("{field}.learners[{j}]")))
                .collect::<CliResult<Vec<_>>>()?;
            SelectorBuilder::Classify(Classify {
                learners: specs,
                combine: combine("combine", &s.combine)?,
                pre,
            })
        }
        "regression" => {
            unused("learners", s.learners.is_some())?;
            unused("classifier", s.classifier.is_some())?;
            unused("clusterers", s.clusterers.is_some())?;
            unused("combinator", s.combinator.is_some())?;
            unused("best_by", s.best_by.is_some())?;
            let regressor = regressor_spec(s.regressor.as_ref().ok_or_else(|| required("regressor"))?, &sub("regressor"))?;
            let expand = match s.expand.as_deref() {
                None => None,
                Some("pairwise-abs-diff") => Some(Expansion::pairwise_abs_diff()),
                Some(other) => {
                    return Err(field_err(
                        &sub("expand"),
                        format!("unknown expansion '{other}' (expected pairwise-abs-diff)"),
                    ))
                }
            };
            if expand.is_some() && s.combine.is_none() {
                return Err(field_err(&sub("expand"), "only allowed together with combine"));
            }
            SelectorBuilder::Regression(Regression {
                regressor,
                combine: combine("combine", &s.combine)?,
                expand,
                pre,
            })
        }
        "classify-pairs" => {
            unused("learners", s.learners.is_some())?;
            unused("regressor", s.regressor.is_some())?;
            unused("clusterers", s.clusterers.is_some())?;
            unused("combine", s.combine.is_some())?;
            unused("expand", s.expand.is_some())?;
            unused("best_by", s.best_by.is_some())?;
            let classifier = classifier_spec(s.classifier.as_ref().ok_or_else(|| required("classifier"))?, &sub("classifier"))?;
            SelectorBuilder::ClassifyPairs(ClassifyPairs {
                classifier,
                combinator: combine("combinator", &s.combinator)?,
                pre,
            })
        }
        "cluster" => {
            unused("learners", s.learners.is_some())?;
            unused("regressor", s.regressor.is_some())?;
            unused("classifier", s.classifier.is_some())?;
            unused("combinator", s.combinator.is_some())?;
            unused("expand", s.expand.is_some())?;
            let clusterers = s.clusterers.as_ref().ok_or_else(|| required("clusterers"))?;
            if clusterers.is_empty() {
                return Err(field_err(&sub("clusterers"), "needs at least one clusterer"));
            }
            let specs = clusterers
                .iter()
                .enumerate()
                .map(|(j, l)| clusterer_spec(l, &format!("{field}.clusterers[{j}]")))
                .collect::<CliResult<Vec<_>>>()?;
            let best_by = match &s.best_by {
                Some(b) => b.parse::<BestBy>().map_err(|e| field_err(&sub("best_by"), e))?,
                None => BestBy::Performance,
            };
            let mut c = Cluster::ensemble(specs).with_best_by(best_by);
            c.combine = combine("combine", &s.combine)?;
            c.pre = pre;
            c.timeout = eval.timeout;
            c.par_factor = eval.par_factor;
            SelectorBuilder::Cluster(c)
        }
        other => {
            return Err(field_err(
                &sub("builder"),
                format!("unknown builder '{other}' (expected classify, regression, classify-pairs or cluster)"),
            ))
        }
    };
    Ok(b)
}
