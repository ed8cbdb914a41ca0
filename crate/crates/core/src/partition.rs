//! Train/test splits and cross-validation folds.
//!
//! Stratified partitions group instances by their canonical best algorithm,
//! shuffle each group with a seeded RNG and deal the groups out in turn, so
//! every label is spread over the parts as evenly as integer counts allow.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_RATIO: f64 = 0.6;
pub const DEFAULT_FOLDS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionKind {
    TrainTest,
    CrossValidation,
}

/// A dataset together with an ordered list of disjoint test partitions and
/// their complementary training sets.
#[derive(Debug, Clone)]
pub struct Partitioning {
    dataset: Arc<Dataset>,
    kind: PartitionKind,
    test: Vec<Vec<usize>>,
    train: Vec<Vec<usize>>,
    seed: u64,
}

impl Partitioning {
    /// Builds a partitioning from explicit test sets; the training set of
    /// each part is everything else.
    pub fn from_test_sets(
        dataset: Arc<Dataset>,
        kind: PartitionKind,
        test: Vec<Vec<usize>>,
        seed: u64,
    ) -> Result<Self> {
        let n = dataset.len();
        let mut owner = vec![false; n];
        for part in &test {
            for &i in part {
                if i >= n {
                    return Err(Error::Config(format!("instance index {i} out of range")));
                }
                if owner[i] {
                    return Err(Error::Config(format!(
                        "instance {i} appears in more than one test partition"
                    )));
                }
                owner[i] = true;
            }
        }
        let train = test
            .iter()
            .map(|part| {
                let mut in_test = vec![false; n];
                part.iter().for_each(|&i| in_test[i] = true);
                (0..n).filter(|&i| !in_test[i]).collect()
            })
            .collect();
        Ok(Partitioning {
            dataset,
            kind,
            test,
            train,
            seed,
        })
    }

    pub fn dataset(&self) -> &Arc<Dataset> {
        &self.dataset
    }

    pub fn kind(&self) -> PartitionKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.test.is_empty()
    }

    pub fn test(&self, part: usize) -> &[usize] {
        &self.test[part]
    }

    pub fn train(&self, part: usize) -> &[usize] {
        &self.train[part]
    }

    pub fn test_sets(&self) -> &[Vec<usize>] {
        &self.test
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Seed for learners trained on partition `part`; `part == len()` is the
    /// full-data model.
    pub fn part_seed(&self, part: usize) -> u64 {
        derive_seed(self.seed, part as u64)
    }

    /// Test instances of all partitions concatenated in partition order.
    pub fn test_instances(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.test
            .iter()
            .enumerate()
            .flat_map(|(p, part)| part.iter().map(move |&i| (p, i)))
    }
}

/// SplitMix64 finaliser over `base + index`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Instance indices grouped by best label (label order), each group shuffled.
/// Without stratification, a single shuffled group.
fn shuffled_groups(d: &Dataset, stratify: bool, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = if stratify {
        let mut g = vec![Vec::new(); d.n_algorithms()];
        for i in 0..d.len() {
            g[d.best(i)].push(i);
        }
        g.retain(|v| !v.is_empty());
        g
    } else {
        vec![(0..d.len()).collect()]
    };
    for g in &mut groups {
        g.shuffle(rng);
    }
    groups
}

/// Single split with `round(ratio * n)` training instances (halves round up).
pub fn train_test(
    d: Arc<Dataset>,
    ratio: f64,
    stratify: bool,
    seed: u64,
) -> Result<Partitioning> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Config(format!(
            "train ratio must lie strictly between 0 and 1, got {ratio}"
        )));
    }
    let n = d.len();
    if n < 2 {
        return Err(Error::Config(format!(
            "a train/test split needs at least 2 instances, got {n}"
        )));
    }
    let n_train = (ratio * n as f64 + 0.5).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::Config(format!(
            "ratio {ratio} on {n} instances leaves an empty partition"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups = shuffled_groups(&d, stratify, &mut rng);

    // Largest-remainder allocation of the training quota across groups.
    let quotas: Vec<f64> = groups.iter().map(|g| ratio * g.len() as f64).collect();
    let mut take: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut missing = n_train - take.iter().sum::<usize>();
    let mut by_remainder: Vec<usize> = (0..groups.len()).collect();
    by_remainder.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &g in &by_remainder {
        if missing == 0 {
            break;
        }
        if take[g] < groups[g].len() {
            take[g] += 1;
            missing -= 1;
        }
    }

    let mut test: Vec<usize> = groups
        .iter()
        .zip(&take)
        .flat_map(|(g, &t)| g[t..].iter().copied())
        .collect();
    test.sort_unstable();
    Partitioning::from_test_sets(d, PartitionKind::TrainTest, vec![test], seed)
}

/// `nfolds` cross-validation folds dealt round-robin.
pub fn cv_folds(d: Arc<Dataset>, nfolds: usize, stratify: bool, seed: u64) -> Result<Partitioning> {
    let n = d.len();
    if nfolds < 2 || nfolds > n {
        return Err(Error::Config(format!(
            "number of folds must be between 2 and the instance count {n}, got {nfolds}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups = shuffled_groups(&d, stratify, &mut rng);
    let mut folds = vec![Vec::with_capacity(n / nfolds + 1); nfolds];
    for (k, i) in groups.into_iter().flatten().enumerate() {
        folds[k % nfolds].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Partitioning::from_test_sets(d, PartitionKind::CrossValidation, folds, seed)
}
