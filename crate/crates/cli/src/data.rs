//! CSV ingestion. Rows are observations, columns are variables.

use std::path::{Path, PathBuf};

use hlmt_core::Matrix;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Whether the first CSV row holds column names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum HeaderMode {
    /// Header iff no cell of the first row parses as a number.
    #[default]
    Auto,
    Yes,
    No,
}

/// A parsed numeric table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub names: Vec<String>,
    /// Column-major values.
    pub columns: Vec<Vec<f64>>,
    /// Source line of every data row.
    pub lines: Vec<u64>,
}

impl Table {
    pub fn ncols(&self) -> usize {
        self.columns.len()
    }

    pub fn into_matrix(self) -> CliResult<Matrix> {
        Ok(Matrix::from_columns(self.columns)?)
    }
}

fn parse_cell(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

fn cell_error(cell: &str) -> String {
    let t = cell.trim();
    if t.is_empty() {
        "empty cell".into()
    } else if t.parse::<f64>().is_ok() {
        format!("`{t}` is not a finite number")
    } else {
        format!("cannot parse `{t}` as a number")
    }
}

pub fn read_table(path: &Path, header: HeaderMode) -> CliResult<Table> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    parse_table(path, &bytes, header)
}

pub fn parse_table(path: &Path, bytes: &[u8], header: HeaderMode) -> CliResult<Table> {
    let parse_err = |row: u64, column: usize, message: String| CliError::Parse {
        path: path.to_path_buf(),
        row,
        column,
        message,
    };
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(bytes);
    let mut names: Option<Vec<String>> = None;
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut lines = Vec::new();
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let row = e.position().map_or(0, |p| p.line());
            parse_err(row, 0, e.to_string())
        })?;
        let row = record.position().map_or(0, |p| p.line());
        if record.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        if first {
            first = false;
            let is_header = match header {
                HeaderMode::Yes => true,
                HeaderMode::No => false,
                HeaderMode::Auto => record.iter().all(|c| parse_cell(c).is_none()),
            };
            columns = vec![Vec::new(); record.len()];
            if is_header {
                names = Some(record.iter().map(|c| c.trim().to_string()).collect());
                continue;
            }
        }
        if record.len() != columns.len() {
            return Err(parse_err(
                row,
                record.len().min(columns.len()) + 1,
                format!("expected {} columns, found {}", columns.len(), record.len()),
            ));
        }
        for (j, cell) in record.iter().enumerate() {
            let v = parse_cell(cell).ok_or_else(|| parse_err(row, j + 1, cell_error(cell)))?;
            columns[j].push(v);
        }
        lines.push(row);
    }
    if columns.is_empty() || columns[0].is_empty() {
        return Err(CliError::Data(format!("{}: no data rows", path.display())));
    }
    let names = names.unwrap_or_else(|| (1..=columns.len()).map(|j| format!("V{j}")).collect());
    Ok(Table { names, columns, lines })
}

/// Where the samples of a command come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    pub x: PathBuf,
    #[serde(default)]
    pub y: Option<PathBuf>,
    /// 1-based column holding the 0/1 group label (0 → X, 1 → Y).
    #[serde(default)]
    pub group_column: Option<usize>,
    #[serde(default)]
    pub header: HeaderMode,
}

impl DataSpec {
    pub fn is_two_sample(&self) -> bool {
        self.y.is_some() || self.group_column.is_some()
    }

    pub fn paths(&self) -> Vec<PathBuf> {
        std::iter::once(self.x.clone()).chain(self.y.clone()).collect()
    }
}

/// Loaded one- or two-sample data with column names.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub names: Vec<String>,
    pub x: Table,
    pub y: Option<Table>,
}

impl Loaded {
    pub fn p(&self) -> usize {
        self.x.ncols()
    }
}

pub fn load(spec: &DataSpec) -> CliResult<Loaded> {
    let x = read_table(&spec.x, spec.header)?;
    match (&spec.y, spec.group_column) {
        (Some(_), Some(_)) => Err(CliError::Usage("use either --y or --group-column, not both".into())),
        (Some(ypath), None) => {
            let y = read_table(ypath, spec.header)?;
            if y.ncols() != x.ncols() {
                return Err(CliError::Data(format!(
                    "{} has {} columns but {} has {}",
                    spec.x.display(),
                    x.ncols(),
                    ypath.display(),
                    y.ncols()
                )));
            }
            Ok(Loaded { names: x.names.clone(), x, y: Some(y) })
        }
        (None, Some(g)) => split_groups(&spec.x, x, g),
        (None, None) => Ok(Loaded { names: x.names.clone(), x, y: None }),
    }
}

fn split_by<T: Copy>(values: &[T], to_second: &[bool]) -> (Vec<T>, Vec<T>) {
    let mut first = Vec::new();
    let mut second = Vec::new();
    for (&v, &s) in values.iter().zip(to_second) {
        if s {
            second.push(v);
        } else {
            first.push(v);
        }
    }
    (first, second)
}

fn split_groups(path: &Path, table: Table, group: usize) -> CliResult<Loaded> {
    if group == 0 || group > table.ncols() {
        return Err(CliError::Usage(format!(
            "--group-column {group} out of range 1..={} (columns are 1-based)",
            table.ncols()
        )));
    }
    if table.ncols() < 2 {
        return Err(CliError::Data(format!("{}: no variables besides the group column", path.display())));
    }
    let g = group - 1;
    let labels = &table.columns[g];
    let mut is_y = Vec::with_capacity(labels.len());
    for (i, &v) in labels.iter().enumerate() {
        match v {
            0.0 => is_y.push(false),
            1.0 => is_y.push(true),
            other => {
                return Err(CliError::Parse {
                    path: path.to_path_buf(),
                    row: table.lines[i],
                    column: group,
                    message: format!("group label {other} is not 0 or 1"),
                })
            }
        }
    }
    let names: Vec<String> =
        table.names.iter().enumerate().filter(|&(j, _)| j != g).map(|(_, n)| n.clone()).collect();
    let (x_lines, y_lines) = split_by(&table.lines, &is_y);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (j, col) in table.columns.iter().enumerate() {
        if j != g {
            let (a, b) = split_by(col, &is_y);
            xs.push(a);
            ys.push(b);
        }
    }
    if xs[0].is_empty() || ys[0].is_empty() {
        return Err(CliError::Data(format!("{}: both groups 0 and 1 need at least one row", path.display())));
    }
    Ok(Loaded {
        names: names.clone(),
        x: Table { names: names.clone(), columns: xs, lines: x_lines },
        y: Some(Table { names, columns: ys, lines: y_lines }),
    })
}

/// Reads 1-based null coordinates separated by whitespace or commas and
/// returns them 0-based.
pub fn read_truth(path: &Path, p: usize) -> CliResult<Vec<usize>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut nulls = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        for (k, token) in line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).enumerate() {
            let idx: usize = token.parse().map_err(|_| CliError::Parse {
                path: path.to_path_buf(),
                row: line_no as u64 + 1,
                column: k + 1,
                message: format!("`{token}` is not a 1-based coordinate index"),
            })?;
            if idx == 0 || idx > p {
                return Err(CliError::TruthDimensionMismatch { index: idx, p });
            }
            nulls.push(idx - 1);
        }
    }
    nulls.sort_unstable();
    nulls.dedup();
    Ok(nulls)
}
