//! CSV ingestion and column preprocessing.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use pcr_core::{Dataset, DenseMatrix};
use serde::Serialize;

use crate::error::AppError;

/// Christensen–Greene (1976) US electricity generation data for 1970,
/// 158 firms, as distributed in the Ecdat R package.
pub const ELECTRICITY_CSV: &str = include_str!("../data/electricity.csv");
pub const BUILTIN_ELECTRICITY: &str = "builtin:electricity";
pub const INTERCEPT_NAME: &str = "Intercept";

/// Reads a dataset from a file path, or from the bundled fixture when
/// `input` is [`BUILTIN_ELECTRICITY`].
pub fn load_input(input: &str, response: &str, add_intercept: bool) -> Result<Dataset, AppError> {
    if input == BUILTIN_ELECTRICITY {
        return parse_csv(input, ELECTRICITY_CSV.as_bytes(), response, add_intercept);
    }
    load_csv(Path::new(input), response, add_intercept)
}

pub fn load_csv(path: &Path, response: &str, add_intercept: bool) -> Result<Dataset, AppError> {
    let file = File::open(path).map_err(|source| AppError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_csv(&path.display().to_string(), file, response, add_intercept)
}

/// Parses a header-first, comma-delimited CSV. The response column is pulled
/// out; the remaining columns form the design in file order, with an
/// intercept column prepended when `add_intercept` is set.
pub fn parse_csv(
    source_name: &str,
    reader: impl Read,
    response: &str,
    add_intercept: bool,
) -> Result<Dataset, AppError> {
    let format_err = |line: u64, message: String| AppError::Format {
        source_name: source_name.to_string(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();

    let header = match records.next() {
        None => return Err(format_err(1, "empty file, expected a header row".into())),
        Some(rec) => rec.map_err(|e| csv_error(source_name, e))?,
    };
    let names: Vec<String> = header.iter().map(str::to_string).collect();
    for (j, name) in names.iter().enumerate() {
        if name.is_empty() {
            return Err(format_err(
                1,
                format!("missing header name for column {}", j + 1),
            ));
        }
        if names[..j].contains(name) {
            return Err(format_err(1, format!("duplicate header '{name}'")));
        }
    }
    let response_idx = names
        .iter()
        .position(|n| n == response)
        .ok_or_else(|| format_err(1, format!("response column '{response}' not found")))?;

    let mut y = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for rec in records {
        let rec = rec.map_err(|e| csv_error(source_name, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        for (j, cell) in rec.iter().enumerate() {
            let value = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| AppError::Parse {
                    source_name: source_name.to_string(),
                    line,
                    column: names[j].clone(),
                    value: cell.to_string(),
                })?;
            if j == response_idx {
                y.push(value);
            } else {
                columns[j].push(value);
            }
        }
    }
    if y.is_empty() {
        return Err(format_err(2, "no data rows".into()));
    }

    let mut design_names = Vec::new();
    let mut design_cols = Vec::new();
    if add_intercept {
        design_names.push(INTERCEPT_NAME.to_string());
        design_cols.push(vec![1.0; y.len()]);
    }
    for (j, col) in columns.into_iter().enumerate() {
        if j != response_idx {
            design_names.push(names[j].clone());
            design_cols.push(col);
        }
    }
    if design_cols.is_empty() {
        return Err(format_err(
            1,
            "no predictor columns besides the response".into(),
        ));
    }
    let x = DenseMatrix::from_columns(&design_cols)?;
    Ok(Dataset::new(y, x, design_names, add_intercept)?)
}

fn csv_error(source_name: &str, e: csv::Error) -> AppError {
    let line = e.position().map_or(0, |p| p.line());
    AppError::Format {
        source_name: source_name.to_string(),
        line,
        message: e.to_string(),
    }
}

/// Preprocessing applied to the predictor columns. The intercept is never touched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Standardize {
    None,
    Center,
    /// Center and divide by the sample standard deviation (divisor n − 1).
    Zscore,
}

/// Preprocessing applied to the response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ResponseScale {
    None,
    Center,
    Zscore,
    /// Divide by the root mean square `sqrt(Σy²/(n − 1))` without centering.
    Rms,
}

/// `x' = (x − shift) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnTransform {
    pub name: String,
    pub shift: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransformRecord {
    pub predictors: Standardize,
    pub response: ResponseScale,
    pub intercept_added: bool,
    pub columns: Vec<ColumnTransform>,
    pub response_transform: ColumnTransform,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_sd(v: &[f64], center: f64) -> f64 {
    (v.iter().map(|x| (x - center).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)).sqrt()
}

fn apply(v: &[f64], shift: f64, scale: f64) -> Vec<f64> {
    v.iter().map(|x| (x - shift) / scale).collect()
}

/// Centers or z-scores every predictor column except the intercept.
pub fn standardize(
    data: &Dataset,
    mode: Standardize,
) -> Result<(Dataset, Vec<ColumnTransform>), AppError> {
    let mut cols = Vec::with_capacity(data.p());
    let mut record = Vec::with_capacity(data.p());
    for j in 0..data.p() {
        let col = data.x.column(j);
        let name = data.names[j].clone();
        let exempt = data.intercept_included && j == 0;
        let (shift, scale) = match mode {
            _ if exempt => (0.0, 1.0),
            Standardize::None => (0.0, 1.0),
            Standardize::Center => (mean(&col), 1.0),
            Standardize::Zscore => {
                let m = mean(&col);
                let sd = sample_sd(&col, m);
                if sd.is_nan() || sd <= 0.0 {
                    return Err(AppError::ZeroVariance(name));
                }
                (m, sd)
            }
        };
        cols.push(apply(&col, shift, scale));
        record.push(ColumnTransform { name, shift, scale });
    }
    let x = DenseMatrix::from_columns(&cols)?;
    let out = Dataset::new(
        data.y.clone(),
        x,
        data.names.clone(),
        data.intercept_included,
    )?;
    Ok((out, record))
}

pub fn scale_response(
    data: &Dataset,
    mode: ResponseScale,
    name: &str,
) -> Result<(Dataset, ColumnTransform), AppError> {
    let y = &data.y;
    let (shift, scale) = match mode {
        ResponseScale::None => (0.0, 1.0),
        ResponseScale::Center => (mean(y), 1.0),
        ResponseScale::Zscore => {
            let m = mean(y);
            let sd = sample_sd(y, m);
            if sd.is_nan() || sd <= 0.0 {
                return Err(AppError::ZeroVariance(name.to_string()));
            }
            (m, sd)
        }
        ResponseScale::Rms => {
            let rms = sample_sd(y, 0.0);
            if rms.is_nan() || rms <= 0.0 {
                return Err(AppError::ZeroVariance(name.to_string()));
            }
            (0.0, rms)
        }
    };
    let out = Dataset::new(
        apply(y, shift, scale),
        data.x.clone(),
        data.names.clone(),
        data.intercept_included,
    )?;
    Ok((
        out,
        ColumnTransform {
            name: name.to_string(),
            shift,
            scale,
        },
    ))
}

/// Loads and preprocesses in one go.
pub fn prepare(
    input: &str,
    response: &str,
    add_intercept: bool,
    predictors: Standardize,
    response_scale: ResponseScale,
) -> Result<(Dataset, TransformRecord), AppError> {
    let raw = load_input(input, response, add_intercept)?;
    let (std, columns) = standardize(&raw, predictors)?;
    let (data, response_transform) = scale_response(&std, response_scale, response)?;
    Ok((
        data,
        TransformRecord {
            predictors,
            response: response_scale,
            intercept_added: add_intercept,
            columns,
            response_transform,
        },
    ))
}
