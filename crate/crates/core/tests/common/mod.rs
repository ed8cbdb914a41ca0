#![allow(dead_code)]

use std::sync::Arc;

use asel::learners::{ClassifierSpec, ClustererSpec, RegressorSpec};
use asel::preprocess::Normalize;
use asel::selectors::{BestBy, Classify, ClassifyPairs, Cluster, Expansion, Regression};
use asel::{Dataset, DatasetParts, SelectorBuilder};
use proptest::prelude::*;

/// Four instances, two algorithms; timeout 10.
pub fn toy() -> Dataset {
    Dataset::from_parts(DatasetParts {
        instance_ids: ["i1", "i2", "i3", "i4"].map(String::from).to_vec(),
        feature_names: vec!["f".into()],
        algorithm_names: vec!["A".into(), "B".into()],
        features: vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
        performances: vec![
            vec![1.0, 9.0],
            vec![2.0, 1.0],
            vec![10.0, 3.0],
            vec![4.0, 10.0],
        ],
        minimize: true,
        ..Default::default()
    })
    .unwrap()
}

pub fn dataset(features: Vec<Vec<f64>>, performances: Vec<Vec<f64>>, minimize: bool) -> Dataset {
    let n = features.len();
    let nf = features[0].len();
    let m = performances[0].len();
    Dataset::from_parts(DatasetParts {
        instance_ids: (0..n).map(|i| format!("i{i}")).collect(),
        feature_names: (0..nf).map(|j| format!("f{j}")).collect(),
        algorithm_names: (0..m).map(|a| format!("a{a}")).collect(),
        features,
        performances,
        minimize,
        ..Default::default()
    })
    .unwrap()
}

/// Random minimisation dataset without a success table: `n` instances,
/// `m` algorithms, up to three features, runtimes in `[0.5, 100)`.
pub fn small_dataset(max_n: usize, max_m: usize) -> impl Strategy<Value = Dataset> {
    (4..=max_n, 2..=max_m, 1usize..=3).prop_flat_map(|(n, m, nf)| {
        (
            prop::collection::vec(prop::collection::vec(-5.0..5.0f64, nf), n),
            prop::collection::vec(prop::collection::vec(0.5..100.0f64, m), n),
        )
            .prop_map(|(f, p)| dataset(f, p, true))
    })
}

/// One configuration of every builder and meta-learning variant.
pub fn all_selectors() -> Vec<SelectorBuilder> {
    let knn1 = ClassifierSpec::Knn { k: 1 };
    let kmeans = |k| ClustererSpec::KMeans { k, max_iter: 50 };
    vec![
        SelectorBuilder::Classify(Classify::new(ClassifierSpec::Majority)),
        SelectorBuilder::Classify(Classify::new(knn1.clone())),
        SelectorBuilder::Classify(Classify::new(ClassifierSpec::Stump).with_pre(Arc::new(Normalize))),
        SelectorBuilder::Classify(Classify::ensemble(vec![
            knn1.clone(),
            ClassifierSpec::Knn { k: 3 },
            ClassifierSpec::Stump,
        ])),
        SelectorBuilder::Classify(
            Classify::ensemble(vec![knn1.clone(), ClassifierSpec::Stump]).with_combine(ClassifierSpec::Stump),
        ),
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
