//! CSV ingestion.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use asel::dataset::{input, CostInput, FeatureGroup};
use asel::{Dataset, Table};

use crate::config::{CostSource, DataConfig};
use crate::error::{core, CliError, CliResult};

/// Raw CSV file: header plus string cells, with the line number of each row.
#[derive(Debug)]
pub struct CsvFile {
    pub table: Table,
    pub lines: Vec<u64>,
}

pub fn read_csv(path: &Path) -> CliResult<CsvFile> {
    let text = fs::read_to_string(path).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
    parse_csv(&text, path, 0)
}

fn parse_csv(text: &str, path: &Path, line_offset: u64) -> CliResult<CsvFile> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let at = |e: csv::Error| {
        let line = e.position().map(|p| p.line() + line_offset).unwrap_or(0);
        CliError::invalid(format!("{}:{line}: {e}", path.display()))
    };
    let columns: Vec<String> = reader.headers().map_err(at)?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(at)?;
        lines.push(rec.position().map_or(0, |p| p.line()) + line_offset);
        rows.push(rec.iter().map(String::from).collect());
    }
    let table = Table::new(columns, rows).map_err(core(path.display()))?;
    Ok(CsvFile { table, lines })
}

/// Rejects cells in `value_columns` that are not finite numbers, naming the
/// file and line.
fn check_numeric(f: &CsvFile, path: &Path, value_columns: &[usize]) -> CliResult<()> {
    for (row, line) in f.table.rows().iter().zip(&f.lines) {
        for &c in value_columns {
            let cell = &row[c];
            if !cell.parse::<f64>().is_ok_and(f64::is_finite) {
                return Err(CliError::invalid(format!(
                    "{}:{line}: column '{}': '{cell}' is not a finite number",
                    path.display(),
                    f.table.columns()[c]
                )));
            }
        }
    }
    Ok(())
}

fn value_columns(f: &CsvFile, key: &[String]) -> Vec<usize> {
    (0..f.table.columns().len())
        .filter(|&c| !key.contains(&f.table.columns()[c]))
        .collect()
}

/// Parses a cost-group file: a `group,features` section listing the
/// space-separated features of each group, a blank line, then the
/// instance × group cost table.
pub fn read_cost_groups(path: &Path) -> CliResult<(Vec<FeatureGroup>, CsvFile)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
    let lines: Vec<&str> = text.lines().collect();
    let split = lines
        .iter()
        .position(|l| l.trim().is_empty())
        .ok_or_else(|| {
            CliError::invalid(format!(
                "{}: expected a group section and a cost table separated by a blank line",
                path.display()
            ))
        })?;
    let header = parse_csv(&lines[..split].join("\n"), path, 0)?;
    if header.table.columns() != ["group", "features"] {
        return Err(CliError::invalid(format!(
            "{}:1: group section must start with the header 'group,features'",
            path.display()
        )));
    }
    let groups = header
        .table
        .rows()
        .iter()
        .map(|r| FeatureGroup {
            name: r[0].clone(),
            features: r[1].split_whitespace().map(String::from).collect(),
        })
        .collect();
    let rest = lines[split..]
        .iter()
        .skip_while(|l| l.trim().is_empty())
        .copied()
        .collect::<Vec<_>>();
    let skipped = (lines.len() - rest.len()) as u64;
    let table = parse_csv(&rest.join("\n"), path, skipped)?;
    Ok((groups, table))
}

/// Loads and joins the configured data files.
pub fn load_dataset(cfg: &DataConfig) -> CliResult<Dataset> {
    let features = read_csv(&cfg.features)?;
    let performances = read_csv(&cfg.performances)?;
    let key: Vec<String> = features
        .table
        .columns()
        .iter()
        .filter(|c| performances.table.column_index(c).is_some())
        .cloned()
        .collect();
    if !key.contains(&cfg.id_column) {
        return Err(CliError::invalid(format!(
            "column '{}' (data.id_column) must appear in both {} and {}",
            cfg.id_column,
            cfg.features.display(),
            cfg.performances.display()
        )));
    }
    check_numeric(&features, &cfg.features, &value_columns(&features, &key))?;
    check_numeric(&performances, &cfg.performances, &value_columns(&performances, &key))?;

    let successes = cfg.successes.as_deref().map(read_csv).transpose()?;
    let cost_file;
    let groups;
    let costs = match &cfg.costs {
        None => None,
        Some(CostSource::Scalar(c)) => Some(CostInput::PerInstance(*c)),
        Some(CostSource::PerFeature(p)) => {
            cost_file = read_csv(p)?;
            check_numeric(&cost_file, p, &value_columns(&cost_file, &key))?;
            Some(CostInput::PerFeature(&cost_file.table))
        }
        Some(CostSource::Grouped(p)) => {
            let (g, table) = read_cost_groups(p)?;
            check_numeric(&table, p, &value_columns(&table, &key))?;
            groups = g;
            cost_file = table;
            Some(CostInput::Grouped {
                groups: groups.clone(),
                table: &cost_file.table,
            })
        }
    };
    input(
        &features.table,
        &performances.table,
        successes.as_ref().map(|s| &s.table),
        costs,
        cfg.minimize,
    )
    .map_err(core(format!(
        "joining {} and {}",
        cfg.features.display(),
        cfg.performances.display()
    )))
}

/// Reads `column` of a keyed auxiliary table and aligns it with the
/// dataset's instances.
pub fn aligned_column(path: &Path, id_column: &str, column: &str, d: &Dataset) -> CliResult<Vec<String>> {
    let f = read_csv(path)?;
    let id = f.table.column_index(id_column).ok_or_else(|| {
        CliError::invalid(format!("{}: missing id column '{id_column}'", path.display()))
    })?;
    let col = f
        .table
        .column_index(column)
        .ok_or_else(|| CliError::invalid(format!("{}: missing column '{column}'", path.display())))?;
    let by_id: HashMap<&str, &str> = f
        .table
        .rows()
        .iter()
        .map(|r| (r[id].as_str(), r[col].as_str()))
        .collect();
    d.instance_ids()
        .iter()
        .map(|i| {
            by_id
                .get(i.as_str())
                .map(|v| v.to_string())
                .ok_or_else(|| CliError::invalid(format!("{}: no row for instance '{i}'", path.display())))
        })
        .collect()
}

/// Header of a CSV file without its id column.
pub fn columns_except(path: &Path, id_column: &str) -> CliResult<Vec<String>> {
    let f = read_csv(path)?;
    Ok(f.table.columns().iter().filter(|c| *c != id_column).cloned().collect())
}

/// Parses a numeric auxiliary column, naming the file on failure.
pub fn numbers(values: &[String], path: &Path, d: &Dataset) -> CliResult<Vec<f64>> {
    values
        .iter()
        .zip(d.instance_ids())
        .map(|(v, id)| {
            v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| {
                CliError::invalid(format!("{}: instance '{id}': '{v}' is not a finite number", path.display()))
            })
        })
        .collect()
}
