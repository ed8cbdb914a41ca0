use std::sync::Arc;

use super::{
    one_hot, pre_suffix, run_protocol, Combiner, FittedSelector, Prediction, SelectionModel,
    Training,
};
pub use crate::evaluate::BestBy;
use crate::error::{Error, Result};
use crate::evaluate::DEFAULT_PAR_FACTOR;
use crate::learners::{train_clusterer, ClassifierSpec, ClustererSpec, Row, TrainedClusterer};
use crate::partition::{derive_seed, Partitioning};
use crate::preprocess::Preprocessor;

/// Clusters the training instances and ranks the algorithms of each cluster
/// by the `best_by` aggregate over its members. New instances receive the
/// full ranking of their nearest cluster, scored by the aggregate.
///
/// Several clusterers form an ensemble voting with their top choices; with
/// `combine`, those choices (one-hot encoded) feed a second-layer classifier.
#[derive(Debug, Clone)]
pub struct Cluster {
    pub clusterers: Vec<ClustererSpec>,
    pub best_by: BestBy,
    pub combine: Option<ClassifierSpec>,
    pub pre: Option<Arc<dyn Preprocessor>>,
    /// Timeout for `BestBy::Par` / `BestBy::Successes`; defaults to the
    /// largest performance value in the dataset.
    pub timeout: Option<f64>,
    pub par_factor: f64,
}

impl Cluster {
    pub fn new(clusterer: ClustererSpec) -> Self {
        Cluster::ensemble(vec![clusterer])
    }

    pub fn ensemble(clusterers: Vec<ClustererSpec>) -> Self {
        Cluster {
            clusterers,
            best_by: BestBy::Performance,
            combine: None,
            pre: None,
            timeout: None,
            par_factor: DEFAULT_PAR_FACTOR,
        }
    }

    pub fn with_best_by(mut self, best_by: BestBy) -> Self {
        self.best_by = best_by;
        self
    }

    pub fn with_combine(mut self, combine: ClassifierSpec) -> Self {
        self.combine = Some(combine);
        self
    }

    pub fn with_pre(mut self, pre: Arc<dyn Preprocessor>) -> Self {
        self.pre = Some(pre);
        self
    }

    pub fn with_timeout(mut self, timeout: f64, par_factor: f64) -> Self {
        self.timeout = Some(timeout);
        self.par_factor = par_factor;
        self
    }

    pub fn description(&self) -> String {
        let names: Vec<String> = self.clusterers.iter().map(ClustererSpec::name).collect();
        let combine = self
            .combine
            .as_ref()
            .map(|c| format!(", combine={}", c.name()))
            .unwrap_or_default();
        format!(
            "cluster[{}, best_by={}{combine}{}]",
            names.join(","),
            self.best_by.as_str(),
            pre_suffix(self.pre.as_ref())
        )
    }

    pub fn build(&self, p: &Partitioning) -> Result<SelectionModel> {
        if self.clusterers.is_empty() {
            return Err(Error::Config("cluster needs at least one clusterer".into()));
        }
        let timeout = match self.timeout {
            Some(t) if t > 0.0 => t,
            Some(t) => return Err(Error::Config(format!("timeout must be positive, got {t}"))),
            None => p.dataset().max_performance(),
        };
        run_protocol(p, self.description(), self.pre.as_ref(), &|t| {
            self.fit(t, timeout)
        })
    }

    fn fit(&self, t: &Training<'_>, timeout: f64) -> Result<Box<dyn FittedSelector>> {
        let ascending = self.best_by.ascending(t.d.minimize());
        let overall = self
            .best_by
            .aggregate(t.d, t.rows, timeout, self.par_factor);
        let members = self
            .clusterers
            .iter()
            .enumerate()
            .map(|(k, spec)| {
                let model = train_clusterer(spec, &t.x, derive_seed(t.seed, k as u64))?;
                let assignment = model.assign_cluster(&t.x)?;
                let rankings = (0..model.n_clusters())
                    .map(|c| {
                        let rows: Vec<usize> = t
                            .rows
                            .iter()
                            .zip(&assignment)
                            .filter(|(_, &a)| a == c)
                            .map(|(&i, _)| i)
                            .collect();
                        // a cluster without training members falls back to all rows
                        let totals = if rows.is_empty() {
                            overall.clone()
                        } else {
                            self.best_by.aggregate(t.d, &rows, timeout, self.par_factor)
                        };
                        Prediction::ranked_by_score(totals.into_iter().enumerate().collect(), ascending)
                    })
                    .collect();
                Ok(ClusterRanking { model, rankings })
            })
            .collect::<Result<Vec<_>>>()?;
        let n_algorithms = t.d.n_algorithms();
        let mut fitted = FittedCluster {
            members,
            combiner: None,
            n_algorithms,
        };
        if let Some(spec) = &self.combine {
            let inputs = fitted.top_choice_inputs(&t.x)?;
            let seed = derive_seed(t.seed, self.clusterers.len() as u64);
            fitted.combiner = Some(Combiner::fit(spec, &inputs, &t.labels(), seed)?);
        }
        Ok(Box::new(fitted))
    }
}

#[derive(Debug)]
struct ClusterRanking {
    model: TrainedClusterer,
    rankings: Vec<Prediction>,
}

impl ClusterRanking {
    fn predict(&self, x: &[Row]) -> Result<Vec<Prediction>> {
        Ok(self
            .model
            .assign_cluster(x)?
            .into_iter()
            .map(|c| self.rankings[c].clone())
            .collect())
    }
}

#[derive(Debug)]
struct FittedCluster {
    members: Vec<ClusterRanking>,
    combiner: Option<Combiner>,
    n_algorithms: usize,
}

impl FittedCluster {
    fn top_choices(&self, x: &[Row]) -> Result<Vec<Vec<usize>>> {
        let per_member = self
            .members
            .iter()
            .map(|m| m.predict(x))
            .collect::<Result<Vec<_>>>()?;
        Ok((0..x.len())
            .map(|i| per_member.iter().map(|p| p[i].top()).collect())
            .collect())
    }

    fn top_choice_inputs(&self, x: &[Row]) -> Result<Vec<Row>> {
        Ok(self
            .top_choices(x)?
            .iter()
            .map(|labels| one_hot(labels, self.n_algorithms))
            .collect())
    }
}

impl FittedSelector for FittedCluster {
    fn predict(&self, x: &[Row]) -> Result<Vec<Prediction>> {
        if let Some(c) = &self.combiner {
            return c.predict(&self.top_choice_inputs(x)?);
        }
        if let [single] = self.members.as_slice() {
            return single.predict(x);
        }
        Ok(self
            .top_choices(x)?
            .into_iter()
            .map(|labels| {
                let mut votes = vec![0usize; self.n_algorithms];
                labels.into_iter().for_each(|l| votes[l] += 1);
                Prediction::from_votes(&votes)
            })
            .collect())
    }
}

/// Builds a [`Cluster`] selector with a single clusterer.
pub fn cluster(
    clusterer: ClustererSpec,
    p: &Partitioning,
    best_by: BestBy,
    pre: Option<Arc<dyn Preprocessor>>,
) -> Result<SelectionModel> {
    let mut b = Cluster::new(clusterer).with_best_by(best_by);
    b.pre = pre;
    b.build(p)
}
