//! The merged instance table every other module works on.
//!
//! A [`Dataset`] is built either from raw string [`Table`]s with [`input`],
//! which joins features, performances, optional successes and optional
//! feature costs on their shared columns, or directly from aligned parts
//! with [`Dataset::from_parts`]. Once built it is immutable; transformations
//! (subsetting, feature filtering, imputation) return new datasets.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};

/// A raw rectangular table of string cells with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: Vec<String>, rows: Vec<Vec<String>>) -> Result<Self> {
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.as_str()) {
                return Err(Error::Schema(format!("duplicate column name '{c}'")));
            }
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(Error::Schema(format!(
                    "row {} has {} cells, expected {}",
                    r + 1,
                    row.len(),
                    columns.len()
                )));
            }
        }
        Ok(Table { columns, rows })
    }

    /// Convenience constructor for literal tables in code and tests.
    pub fn from_strs(columns: &[&str], rows: &[&[&str]]) -> Result<Self> {
        Table::new(
            columns.iter().map(|s| s.to_string()).collect(),
            rows.iter()
                .map(|r| r.iter().map(|s| s.to_string()).collect())
                .collect(),
        )
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

/// A named group of features whose values are computed together.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGroup {
    pub name: String,
    pub features: Vec<String>,
}

/// Cost of computing instance features, aligned with the dataset's instances.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureCosts {
    /// The same cost for every instance.
    PerInstance(f64),
    /// `costs[i][j]` is the cost of feature `features[j]` on instance `i`.
    PerFeature {
        features: Vec<String>,
        costs: Vec<Vec<f64>>,
    },
    /// `costs[i][g]` is the cost of group `groups[g]` on instance `i`.
    Grouped {
        groups: Vec<FeatureGroup>,
        costs: Vec<Vec<f64>>,
    },
}

impl FeatureCosts {
    /// Cost charged on instance `i` when the model uses `used_features`.
    ///
    /// A group is paid for in full as soon as one of its features is used.
    pub fn cost(&self, i: usize, used_features: &[String]) -> f64 {
        match self {
            FeatureCosts::PerInstance(c) => *c,
            FeatureCosts::PerFeature { features, costs } => features
                .iter()
                .zip(&costs[i])
                .filter(|(f, _)| used_features.contains(f))
                .map(|(_, c)| *c)
                .sum(),
            FeatureCosts::Grouped { groups, costs } => groups
                .iter()
                .zip(&costs[i])
                .filter(|(g, _)| g.features.iter().any(|f| used_features.contains(f)))
                .map(|(_, c)| *c)
                .sum(),
        }
    }

    fn subset(&self, rows: &[usize]) -> FeatureCosts {
        let pick = |m: &Vec<Vec<f64>>| rows.iter().map(|&r| m[r].clone()).collect();
        match self {
            FeatureCosts::PerInstance(c) => FeatureCosts::PerInstance(*c),
            FeatureCosts::PerFeature { features, costs } => FeatureCosts::PerFeature {
                features: features.clone(),
                costs: pick(costs),
            },
            FeatureCosts::Grouped { groups, costs } => FeatureCosts::Grouped {
                groups: groups.clone(),
                costs: pick(costs),
            },
        }
    }

    fn validate(&self, n: usize, feature_names: &[String]) -> Result<()> {
        let check_matrix = |m: &Vec<Vec<f64>>, width: usize| -> Result<()> {
            if m.len() != n {
                return Err(Error::Schema(format!(
                    "cost table has {} rows, dataset has {n} instances",
                    m.len()
                )));
            }
            for row in m {
                if row.len() != width {
                    return Err(Error::Schema(format!(
                        "cost row has {} values, expected {width}",
                        row.len()
                    )));
                }
                check_costs(row)?;
            }
            Ok(())
        };
        match self {
            FeatureCosts::PerInstance(c) => check_costs(&[*c]),
            FeatureCosts::PerFeature { features, costs } => {
                for f in feature_names {
                    if !features.contains(f) {
                        return Err(Error::Schema(format!("no cost given for feature '{f}'")));
                    }
                }
                check_matrix(costs, features.len())
            }
            FeatureCosts::Grouped { groups, costs } => {
                let mut owner: HashMap<&str, &str> = HashMap::new();
                for g in groups {
                    for f in &g.features {
                        if let Some(prev) = owner.insert(f, &g.name) {
                            return Err(Error::Schema(format!(
                                "feature '{f}' belongs to groups '{prev}' and '{}'",
                                g.name
                            )));
                        }
                    }
                }
                for f in feature_names {
                    if !owner.contains_key(f.as_str()) {
                        return Err(Error::Schema(format!("feature '{f}' is in no cost group")));
                    }
                }
                check_matrix(costs, groups.len())
            }
        }
    }
}

fn check_costs(values: &[f64]) -> Result<()> {
    match values.iter().find(|c| !c.is_finite() || **c < 0.0) {
        Some(c) => Err(Error::Validation(format!(
            "feature costs must be finite and non-negative, got {c}"
        ))),
        None => Ok(()),
    }
}

/// Feature costs as supplied to [`input`], before alignment with instances.
#[derive(Debug, Clone)]
pub enum CostInput<'a> {
    PerInstance(f64),
    /// Key columns plus one column per feature.
    PerFeature(&'a Table),
    /// Key columns plus one column per group.
    Grouped {
        groups: Vec<FeatureGroup>,
        table: &'a Table,
    },
}

/// Aligned components for [`Dataset::from_parts`].
#[derive(Debug, Clone, Default)]
pub struct DatasetParts {
    pub instance_ids: Vec<String>,
    pub feature_names: Vec<String>,
    pub algorithm_names: Vec<String>,
    pub features: Vec<Vec<f64>>,
    pub performances: Vec<Vec<f64>>,
    pub successes: Option<Vec<Vec<bool>>>,
    pub costs: Option<FeatureCosts>,
    pub minimize: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    instance_ids: Vec<String>,
    feature_names: Vec<String>,
    algorithm_names: Vec<String>,
    features: Vec<Vec<f64>>,
    performances: Vec<Vec<f64>>,
    successes: Option<Vec<Vec<bool>>>,
    costs: Option<FeatureCosts>,
    minimize: bool,
    best_sets: Vec<Vec<usize>>,
}

impl Dataset {
    pub fn from_parts(parts: DatasetParts) -> Result<Self> {
        let DatasetParts {
            instance_ids,
            feature_names,
            algorithm_names,
            features,
            performances,
            successes,
            costs,
            minimize,
        } = parts;
        let n = instance_ids.len();
        if n == 0 {
            return Err(Error::Validation("dataset has no instances".into()));
        }
        if algorithm_names.is_empty() {
            return Err(Error::Validation("dataset has no algorithms".into()));
        }
        let mut ids = HashSet::new();
        for id in &instance_ids {
            if !ids.insert(id.as_str()) {
                return Err(Error::Validation(format!("duplicate instance id '{id}'")));
            }
        }
        let mut names = HashSet::new();
        for name in feature_names.iter().chain(&algorithm_names) {
            if !names.insert(name.as_str()) {
                return Err(Error::Schema(format!(
                    "column '{name}' is used more than once among features and algorithms"
                )));
            }
        }
        check_matrix("features", &features, n, feature_names.len(), &instance_ids)?;
        check_matrix(
            "performances",
            &performances,
            n,
            algorithm_names.len(),
            &instance_ids,
        )?;
        if let Some(s) = &successes {
            if s.len() != n || s.iter().any(|r| r.len() != algorithm_names.len()) {
                return Err(Error::Schema(
                    "success matrix shape differs from performance matrix".into(),
                ));
            }
        }
        if let Some(c) = &costs {
            c.validate(n, &feature_names)?;
        }
        let best_sets = performances
            .iter()
            .map(|row| argbest(row, minimize))
            .collect();
        Ok(Dataset {
            instance_ids,
            feature_names,
            algorithm_names,
            features,
            performances,
            successes,
            costs,
            minimize,
            best_sets,
        })
    }

    pub fn len(&self) -> usize {
        self.instance_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instance_ids.is_empty()
    }

    pub fn instance_ids(&self) -> &[String] {
        &self.instance_ids
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn algorithm_names(&self) -> &[String] {
        &self.algorithm_names
    }

    pub fn n_algorithms(&self) -> usize {
        self.algorithm_names.len()
    }

    pub fn algorithm_index(&self, name: &str) -> Option<usize> {
        self.algorithm_names.iter().position(|a| a == name)
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn performances(&self) -> &[Vec<f64>] {
        &self.performances
    }

    pub fn successes(&self) -> Option<&[Vec<bool>]> {
        self.successes.as_deref()
    }

    pub fn costs(&self) -> Option<&FeatureCosts> {
        self.costs.as_ref()
    }

    pub fn minimize(&self) -> bool {
        self.minimize
    }

    /// All algorithms attaining the best performance on instance `i`.
    pub fn best_set(&self, i: usize) -> &[usize] {
        &self.best_sets[i]
    }

    /// Canonical best algorithm of instance `i` (first best in column order).
    pub fn best(&self, i: usize) -> usize {
        self.best_sets[i][0]
    }

    /// True when `a` performs strictly better than `b` under the minimize flag.
    pub fn better(&self, a: f64, b: f64) -> bool {
        if self.minimize {
            a < b
        } else {
            a > b
        }
    }

    /// Largest performance value; the default timeout.
    pub fn max_performance(&self) -> f64 {
        self.performances
            .iter()
            .flatten()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Cost of computing the currently used features of instance `i`.
    pub fn feature_cost(&self, i: usize) -> f64 {
        self.costs
            .as_ref()
            .map_or(0.0, |c| c.cost(i, &self.feature_names))
    }

    /// New dataset holding the given instances, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Result<Dataset> {
        let pick_f = |m: &Vec<Vec<f64>>| rows.iter().map(|&r| m[r].clone()).collect();
        Dataset::from_parts(DatasetParts {
            instance_ids: rows.iter().map(|&r| self.instance_ids[r].clone()).collect(),
            feature_names: self.feature_names.clone(),
            algorithm_names: self.algorithm_names.clone(),
            features: pick_f(&self.features),
            performances: pick_f(&self.performances),
            successes: self
                .successes
                .as_ref()
                .map(|s| rows.iter().map(|&r| s[r].clone()).collect()),
            costs: self.costs.as_ref().map(|c| c.subset(rows)),
            minimize: self.minimize,
        })
    }

    /// New dataset restricted to the named features, in the given order.
    pub fn select_features(&self, names: &[String]) -> Result<Dataset> {
        let cols = names
            .iter()
            .map(|n| {
                self.feature_names
                    .iter()
                    .position(|f| f == n)
                    .ok_or_else(|| Error::Schema(format!("unknown feature '{n}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut parts = self.to_parts();
        parts.feature_names = names.to_vec();
        parts.features = self
            .features
            .iter()
            .map(|row| cols.iter().map(|&c| row[c]).collect())
            .collect();
        Dataset::from_parts(parts)
    }

    /// New dataset with replaced performance (and success) values.
    pub fn with_performances(
        &self,
        performances: Vec<Vec<f64>>,
        successes: Option<Vec<Vec<bool>>>,
    ) -> Result<Dataset> {
        let mut parts = self.to_parts();
        parts.performances = performances;
        parts.successes = successes;
        Dataset::from_parts(parts)
    }

    /// Copy of the aligned components this dataset was built from.
    pub fn to_parts(&self) -> DatasetParts {
        DatasetParts {
            instance_ids: self.instance_ids.clone(),
            feature_names: self.feature_names.clone(),
            algorithm_names: self.algorithm_names.clone(),
            features: self.features.clone(),
            performances: self.performances.clone(),
            successes: self.successes.clone(),
            costs: self.costs.clone(),
            minimize: self.minimize,
        }
    }
}

fn check_matrix(
    what: &str,
    m: &[Vec<f64>],
    n: usize,
    width: usize,
    ids: &[String],
) -> Result<()> {
    if m.len() != n {
        return Err(Error::Schema(format!(
            "{what} has {} rows, expected {n}",
            m.len()
        )));
    }
    for (row, id) in m.iter().zip(ids) {
        if row.len() != width {
            return Err(Error::Schema(format!(
                "{what} row for instance '{id}' has {} values, expected {width}",
                row.len()
            )));
        }
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "{what} of instance '{id}' contains non-finite value {v}"
            )));
        }
    }
    Ok(())
}

fn argbest(row: &[f64], minimize: bool) -> Vec<usize> {
    let best = if minimize {
        row.iter().copied().fold(f64::INFINITY, f64::min)
    } else {
        row.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    };
    (0..row.len()).filter(|&a| row[a] == best).collect()
}

/// Canonical best-algorithm label (column index) of every instance.
pub fn best_labels(d: &Dataset) -> Vec<usize> {
    (0..d.len()).map(|i| d.best(i)).collect()
}

/// Joins raw tables into a [`Dataset`].
///
/// Columns present in both the feature and the performance table form the
/// join key. Only instances present in both tables are kept, in the order of
/// the performance table. The success table must hold the key columns plus
/// exactly the algorithm columns; cost tables hold the key columns plus one
/// column per feature (or per group).
pub fn input(
    features: &Table,
    performances: &Table,
    successes: Option<&Table>,
    costs: Option<CostInput<'_>>,
    minimize: bool,
) -> Result<Dataset> {
    let key: Vec<String> = features
        .columns()
        .iter()
        .filter(|c| performances.column_index(c).is_some())
        .cloned()
        .collect();
    if key.is_empty() {
        return Err(Error::Join(
            "feature and performance tables share no column to join on".into(),
        ));
    }
    let feature_names: Vec<String> = non_key(features, &key);
    let algorithm_names: Vec<String> = non_key(performances, &key);
    if algorithm_names.is_empty() {
        return Err(Error::Schema("performance table has no algorithm column".into()));
    }

    let feature_rows = index_rows(features, &key, "feature")?;
    let perf_keys = row_keys(performances, &key)?;
    let mut seen = HashSet::new();
    let mut matched: Vec<(String, usize, usize)> = Vec::new();
    for (p_row, k) in perf_keys.into_iter().enumerate() {
        if !seen.insert(k.clone()) {
            return Err(Error::Validation(format!(
                "duplicate instance '{k}' in performance table"
            )));
        }
        if let Some(&f_row) = feature_rows.get(&k) {
            matched.push((k, f_row, p_row));
        }
    }
    if matched.is_empty() {
        return Err(Error::Join("no instance matches between features and performances".into()));
    }
    let dropped = features.rows().len() - matched.len();
    if dropped > 0 {
        log::debug!("{dropped} feature rows without performance data were dropped");
    }

    let f_cols = columns_of(features, &feature_names);
    let p_cols = columns_of(performances, &algorithm_names);
    let instance_ids: Vec<String> = matched.iter().map(|(k, _, _)| k.clone()).collect();
    let feature_matrix = matched
        .iter()
        .map(|(k, f_row, _)| numeric_row(features, *f_row, &f_cols, k))
        .collect::<Result<Vec<_>>>()?;
    let perf_matrix = matched
        .iter()
        .map(|(k, _, p_row)| numeric_row(performances, *p_row, &p_cols, k))
        .collect::<Result<Vec<_>>>()?;

    let success_matrix = match successes {
        None => None,
        Some(t) => {
            let mut expected: Vec<&String> = key.iter().chain(&algorithm_names).collect();
            let mut actual: Vec<&String> = t.columns().iter().collect();
            expected.sort();
            actual.sort();
            if expected != actual {
                return Err(Error::Schema(format!(
                    "success table columns {:?} do not match key + algorithm columns {:?}",
                    t.columns(),
                    key.iter().chain(&algorithm_names).collect::<Vec<_>>()
                )));
            }
            let rows = index_rows(t, &key, "success")?;
            let cols = columns_of(t, &algorithm_names);
            let m = instance_ids
                .iter()
                .map(|id| {
                    let r = *rows.get(id).ok_or_else(|| {
                        Error::Join(format!("instance '{id}' missing from success table"))
                    })?;
                    cols.iter()
                        .map(|&c| parse_bool(&t.rows()[r][c], id))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            Some(m)
        }
    };

    let cost_values = match costs {
        None => None,
        Some(CostInput::PerInstance(c)) => Some(FeatureCosts::PerInstance(c)),
        Some(CostInput::PerFeature(t)) => {
            let names = non_key(t, &key);
            let costs = aligned_numeric(t, &key, &names, &instance_ids, "cost")?;
            Some(FeatureCosts::PerFeature {
                features: names,
                costs,
            })
        }
        Some(CostInput::Grouped { groups, table }) => {
            if let Some((g, f)) = groups.iter().find_map(|g| {
                g.features
                    .iter()
                    .find(|f| !feature_names.contains(f))
                    .map(|f| (g, f))
            }) {
                return Err(Error::Schema(format!(
                    "group '{}' lists unknown feature '{f}'",
                    g.name
                )));
            }
            let names: Vec<String> = groups.iter().map(|g| g.name.clone()).collect();
            for n in &names {
                if table.column_index(n).is_none() {
                    return Err(Error::Schema(format!("cost table lacks group column '{n}'")));
                }
            }
            let costs = aligned_numeric(table, &key, &names, &instance_ids, "cost")?;
            Some(FeatureCosts::Grouped { groups, costs })
        }
    };

    Dataset::from_parts(DatasetParts {
        instance_ids,
        feature_names,
        algorithm_names,
        features: feature_matrix,
        performances: perf_matrix,
        successes: success_matrix,
        costs: cost_values,
        minimize,
    })
}

fn non_key(t: &Table, key: &[String]) -> Vec<String> {
    t.columns()
        .iter()
        .filter(|c| !key.contains(c))
        .cloned()
        .collect()
}

fn columns_of(t: &Table, names: &[String]) -> Vec<usize> {
    names
        .iter()
        .map(|n| t.column_index(n).expect("column taken from this table"))
        .collect()
}

fn row_keys(t: &Table, key: &[String]) -> Result<Vec<String>> {
    let cols = key
        .iter()
        .map(|k| {
            t.column_index(k)
                .ok_or_else(|| Error::Join(format!("table lacks key column '{k}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(t.rows()
        .iter()
        .map(|row| {
            cols.iter()
                .map(|&c| row[c].trim())
                .collect::<Vec<_>>()
                .join("/")
        })
        .collect())
}

fn index_rows(t: &Table, key: &[String], what: &str) -> Result<HashMap<String, usize>> {
    let mut map = HashMap::new();
    for (r, k) in row_keys(t, key)?.into_iter().enumerate() {
        if map.insert(k.clone(), r).is_some() {
            return Err(Error::Validation(format!(
                "duplicate instance '{k}' in {what} table"
            )));
        }
    }
    Ok(map)
}

fn aligned_numeric(
    t: &Table,
    key: &[String],
    names: &[String],
    ids: &[String],
    what: &str,
) -> Result<Vec<Vec<f64>>> {
    let rows = index_rows(t, key, what)?;
    let cols = columns_of(t, names);
    ids.iter()
        .map(|id| {
            let r = *rows
                .get(id)
                .ok_or_else(|| Error::Join(format!("instance '{id}' missing from {what} table")))?;
            numeric_row(t, r, &cols, id)
        })
        .collect()
}

fn numeric_row(t: &Table, r: usize, cols: &[usize], id: &str) -> Result<Vec<f64>> {
    cols.iter()
        .map(|&c| {
            let cell = t.rows()[r][c].trim();
            let v: f64 = cell.parse().map_err(|_| {
                Error::Validation(format!(
                    "column '{}' of instance '{id}' is not numeric: '{cell}'",
                    t.columns()[c]
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::Validation(format!(
                    "column '{}' of instance '{id}' is not finite: '{cell}'",
                    t.columns()[c]
                )));
            }
            Ok(v)
        })
        .collect()
}

/// Parses `T`/`F`/`TRUE`/`FALSE` in any case.
pub fn parse_bool(cell: &str, id: &str) -> Result<bool> {
    match cell.trim().to_ascii_lowercase().as_str() {
        "t" | "true" => Ok(true),
        "f" | "false" => Ok(false),
        other => Err(Error::Validation(format!(
            "success value '{other}' of instance '{id}' is not a boolean"
        ))),
    }
}
