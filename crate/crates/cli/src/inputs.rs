use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use mlaudit_core::data::{
    load_dataset, Dataset, SchemaSpec, SplitAssignment, SplitFile, SplitStrategy,
};
use mlaudit_core::Error;
use serde::de::DeserializeOwned;
use serde_json::Value as Json;

use crate::args::{DataArgs, SplitArgs, StrategyArg};
use crate::CliError;

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| Error::input(format!("{}: {e}", path.display())).into())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = read_text(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Schema(format!("{}: {e}", path.display())).into())
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| Error::input(format!("{}: {e}", path.display())).into())
}

fn json_cell(value: &Json) -> Result<String, String> {
    match value {
        Json::Null => Ok(String::new()),
        Json::Number(n) => Ok(n.to_string()),
        Json::String(s) => Ok(s.clone()),
        Json::Bool(b) => Ok(u8::from(*b).to_string()),
        Json::Array(items) => Ok(items
            .iter()
            .map(json_cell)
            .collect::<Result<Vec<_>, _>>()?
            .join(";")),
        Json::Object(_) => Err("objects are not column values".into()),
    }
}

/// A single column of values: a JSON array, or the first column of a CSV
/// file with a header row.
pub fn read_cells(path: &Path) -> Result<Vec<String>, CliError> {
    let text = read_text(path)?;
    if text.trim_start().starts_with('[') {
        let values: Vec<Json> = serde_json::from_str(&text)
            .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
        return values
            .iter()
            .enumerate()
            .map(|(i, v)| json_cell(v).map_err(|m| Error::input_at(i, m).into()))
            .collect();
    }
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    reader
        .records()
        .enumerate()
        .map(|(i, record)| {
            let record =
                record.map_err(|e| Error::input_at(i, format!("{}: {e}", path.display())))?;
            Ok(record.get(0).unwrap_or("").trim().to_string())
        })
        .collect()
}

/// A numeric matrix: a JSON array of arrays, or a CSV with a header row.
pub fn read_matrix(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let text = read_text(path)?;
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(&text)
            .map_err(|e| Error::Schema(format!("{}: {e}", path.display())).into());
    }
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    reader
        .records()
        .enumerate()
        .map(|(i, record)| {
            let record =
                record.map_err(|e| Error::input_at(i, format!("{}: {e}", path.display())))?;
            record
                .iter()
                .map(|cell| {
                    cell.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::input_at(i, format!("`{cell}` is not a number")).into())
                })
                .collect()
        })
        .collect()
}

pub fn parse_reals(cells: &[String]) -> Result<Vec<f64>, CliError> {
    cells
        .iter()
        .enumerate()
        .map(|(i, c)| {
            c.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::input_at(i, format!("`{c}` is not a finite number")).into())
        })
        .collect()
}

fn parse_class(cell: &str, k: Option<usize>, row: usize) -> Result<usize, Error> {
    let class = cell
        .parse::<f64>()
        .ok()
        .filter(|v| v.fract() == 0.0 && *v >= 0.0)
        .map(|v| v as usize)
        .ok_or_else(|| Error::input_at(row, format!("`{cell}` is not a class index")))?;
    match k {
        Some(k) if class >= k => Err(Error::input_at(
            row,
            format!("class {class} outside 0..{k}"),
        )),
        _ => Ok(class),
    }
}

pub fn parse_classes(cells: &[String], k: Option<usize>) -> Result<Vec<usize>, CliError> {
    cells
        .iter()
        .enumerate()
        .map(|(i, c)| parse_class(c, k, i).map_err(CliError::from))
        .collect()
}

pub fn parse_label_sets(cells: &[String], k: usize) -> Result<Vec<Vec<usize>>, CliError> {
    cells
        .iter()
        .enumerate()
        .map(|(i, c)| {
            c.split(';')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| parse_class(s, Some(k), i).map_err(CliError::from))
                .collect()
        })
        .collect()
}

pub fn load_data(args: &DataArgs) -> Result<(Dataset, SchemaSpec), CliError> {
    load_data_paths(&args.data, &args.schema)
}

pub fn load_data_paths(data: &Path, schema: &Path) -> Result<(Dataset, SchemaSpec), CliError> {
    let spec = SchemaSpec::from_json(&read_text(schema)?)?;
    let file =
        fs::File::open(data).map_err(|e| Error::input(format!("{}: {e}", data.display())))?;
    let dataset = load_dataset(file, &spec)?;
    Ok((dataset, spec))
}

pub fn read_split_file(path: &Path, n: Option<usize>) -> Result<SplitAssignment, CliError> {
    let file: SplitFile = read_json(path)?;
    let n = n.unwrap_or(file.membership.len());
    Ok(SplitAssignment::from_file(&file, n)?)
}

/// Reads `--split`, or builds the split from `--strategy`.
pub fn resolve_split(
    args: &SplitArgs,
    dataset: &Dataset,
    spec: &SchemaSpec,
) -> Result<SplitAssignment, CliError> {
    if let Some(path) = &args.split {
        return read_split_file(path, Some(dataset.len()));
    }
    let strategy = args.strategy.expect("clap requires --split or --strategy");
    let need_seed = || {
        args.seed.ok_or_else(|| {
            CliError::Usage("random and kfold strategies need an explicit --seed".into())
        })
    };
    let ratios = || -> Result<[f64; 3], CliError> {
        match args.ratios.as_deref() {
            None => Ok([0.7, 0.15, 0.15]),
            Some([a, b, c]) => Ok([*a, *b, *c]),
            Some(other) => Err(CliError::Usage(format!(
                "--ratios takes train,validation,test; got {} values",
                other.len()
            ))),
        }
    };
    let strategy = match strategy {
        StrategyArg::Random => SplitStrategy::Random {
            seed: need_seed()?,
            ratios: ratios()?,
        },
        StrategyArg::Kfold => SplitStrategy::KFold {
            folds: args
                .folds
                .ok_or_else(|| CliError::Usage("kfold strategy needs --folds".into()))?,
            seed: need_seed()?,
        },
        StrategyArg::Temporal => SplitStrategy::Temporal {
            column: args
                .temporal_column
                .clone()
                .or_else(|| spec.temporal_column.clone())
                .ok_or_else(|| {
                    CliError::Usage("temporal strategy needs --temporal-column".into())
                })?,
            ratios: ratios()?,
        },
    };
    let split = mlaudit_core::data::assign_splits(dataset, &strategy)?;
    if let Some(out) = &args.split_out {
        let text = serde_json::to_string_pretty(&split.to_file()).expect("split file serializes");
        write_text(out, &(text + "\n"))?;
    }
    Ok(split)
}

/// Cluster file: `{row_id: cluster_id}` with numeric or string cluster ids.
pub fn read_clusters(path: &Path) -> Result<BTreeMap<usize, String>, CliError> {
    let raw: BTreeMap<String, Json> = read_json(path)?;
    raw.into_iter()
        .map(|(row, cluster)| {
            let id: usize = row
                .parse()
                .map_err(|_| Error::input(format!("cluster file key `{row}` is not a row id")))?;
            let cluster = match cluster {
                Json::String(s) => s,
                Json::Number(n) => n.to_string(),
                other => {
                    return Err(Error::input_at(
                        id,
                        format!("cluster id {other} must be a string or number"),
                    )
                    .into())
                }
            };
            Ok((id, cluster))
        })
        .collect()
}
