use super::{squared_distance, ClusterModel, Clusterer, Row};
use crate::error::{Error, Result};

/// Lloyd's k-means with farthest-first initialisation from row 0.
///
/// Each further initial centroid is the row farthest from its nearest
/// chosen centroid (lowest index on ties). Iteration stops when assignments
/// no longer change or after `max_iter` rounds. A cluster that loses all its
/// members keeps its previous centroid.
#[derive(Debug, Clone, Copy)]
pub struct KMeans {
    k: usize,
    max_iter: usize,
}

impl KMeans {
    pub fn new(k: usize, max_iter: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("k-means needs k >= 1".into()));
        }
        if max_iter == 0 {
            return Err(Error::Config("k-means needs max_iter >= 1".into()));
        }
        Ok(KMeans { k, max_iter })
    }

    pub fn fit_model(&self, x: &[Row]) -> Result<KMeansModel> {
        // fewer rows than clusters: every row becomes its own cluster
        let k = self.k.min(x.len());
        let mut centroids = farthest_first(x, k);
        let mut assignment = assign_all(x, &centroids);
        let mut iterations = 0;
        let mut history = vec![wcss(x, &centroids, &assignment)];
        for _ in 0..self.max_iter {
            iterations += 1;
            centroids = update(x, &centroids, &assignment);
            let next = assign_all(x, &centroids);
            history.push(wcss(x, &centroids, &next));
            if next == assignment {
                break;
            }
            assignment = next;
        }
        Ok(KMeansModel {
            centroids,
            assignment,
            iterations,
            objective_history: history,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansModel {
    pub centroids: Vec<Row>,
    /// Cluster of every training row.
    pub assignment: Vec<usize>,
    pub iterations: usize,
    /// Within-cluster sum of squares after initialisation and each update.
    pub objective_history: Vec<f64>,
}

fn farthest_first(x: &[Row], k: usize) -> Vec<Row> {
    let mut centroids = vec![x[0].clone()];
    let mut closest: Vec<f64> = x.iter().map(|r| squared_distance(r, &x[0])).collect();
    while centroids.len() < k {
        let mut pick = 0;
        for (i, d) in closest.iter().enumerate() {
            if *d > closest[pick] {
                pick = i;
            }
        }
        let c = x[pick].clone();
        for (i, r) in x.iter().enumerate() {
            closest[i] = closest[i].min(squared_distance(r, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn nearest_centroid(centroids: &[Row], row: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, centroid) in centroids.iter().enumerate() {
        let d = squared_distance(centroid, row);
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

fn assign_all(x: &[Row], centroids: &[Row]) -> Vec<usize> {
    x.iter().map(|r| nearest_centroid(centroids, r)).collect()
}

fn update(x: &[Row], old: &[Row], assignment: &[usize]) -> Vec<Row> {
    let width = x[0].len();
    let mut sums = vec![vec![0.0; width]; old.len()];
    let mut counts = vec![0usize; old.len()];
    for (r, &c) in x.iter().zip(assignment) {
        counts[c] += 1;
        for (s, v) in sums[c].iter_mut().zip(r) {
            *s += v;
        }
    }
    sums.into_iter()
        .zip(counts)
        .zip(old)
        .map(|((s, n), prev)| {
            if n == 0 {
                prev.clone()
            } else {
                s.into_iter().map(|v| v / n as f64).collect()
            }
        })
        .collect()
}

fn wcss(x: &[Row], centroids: &[Row], assignment: &[usize]) -> f64 {
    x.iter()
        .zip(assignment)
        .map(|(r, &c)| squared_distance(r, &centroids[c]))
        .sum()
}

impl Clusterer for KMeans {
    fn name(&self) -> String {
        format!("kmeans(k={})", self.k)
    }

    fn fit(&self, x: &[Row], _seed: u64) -> Result<Box<dyn ClusterModel>> {
        Ok(Box::new(self.fit_model(x)?))
    }
}

impl ClusterModel for KMeansModel {
    fn n_features(&self) -> usize {
        self.centroids[0].len()
    }

    fn n_clusters(&self) -> usize {
        self.centroids.len()
    }

    fn assign_row(&self, row: &[f64]) -> usize {
        nearest_centroid(&self.centroids, row)
    }
}
