use serde::{Deserialize, Serialize};

use crate::error::{HlError, Result};

/// Dense column-major matrix; rows are observations, columns variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, data: vec![0.0; nrows * ncols] }
    }

    /// Builds a matrix from column vectors of equal length.
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        let ncols = columns.len();
        let nrows = columns.first().map_or(0, Vec::len);
        if let Some(j) = columns.iter().position(|c| c.len() != nrows) {
            return Err(HlError::DimensionMismatch(format!(
                "column {j} has {} rows, expected {nrows}",
                columns[j].len()
            )));
        }
        Ok(Self { nrows, ncols, data: columns.into_iter().flatten().collect() })
    }

    /// Builds a matrix from observation rows of equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != ncols) {
            return Err(HlError::DimensionMismatch(format!("row {i} has {} entries, expected {ncols}", rows[i].len())));
        }
        let mut m = Self::zeros(nrows, ncols);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.nrows + row]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[col * self.nrows + row] = value;
    }

    pub fn column(&self, col: usize) -> &[f64] {
        &self.data[col * self.nrows..(col + 1) * self.nrows]
    }

    pub fn column_mut(&mut self, col: usize) -> &mut [f64] {
        &mut self.data[col * self.nrows..(col + 1) * self.nrows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.ncols).map(move |j| self.column(j))
    }

    pub fn row(&self, row: usize) -> Vec<f64> {
        (0..self.ncols).map(|j| self.get(row, j)).collect()
    }

    /// Index of the first non-finite entry as (row, column).
    pub fn find_non_finite(&self) -> Option<(usize, usize)> {
        self.data.iter().position(|v| !v.is_finite()).map(|k| (k % self.nrows.max(1), k / self.nrows.max(1)))
    }
}

/// Observations for large-scale testing: `x` is n×p and the optional `y`
/// is m×p for two-sample problems.
#[derive(Debug, Clone, PartialEq)]
pub struct MultivariateDataset {
    pub x: Matrix,
    pub y: Option<Matrix>,
}

impl MultivariateDataset {
    pub fn one_sample(x: Matrix) -> Result<Self> {
        check_matrix(&x, "x")?;
        Ok(Self { x, y: None })
    }

    pub fn two_sample(x: Matrix, y: Matrix) -> Result<Self> {
        check_matrix(&x, "x")?;
        check_matrix(&y, "y")?;
        if x.ncols() != y.ncols() {
            return Err(HlError::DimensionMismatch(format!(
                "x has {} columns but y has {}",
                x.ncols(),
                y.ncols()
            )));
        }
        Ok(Self { x, y: Some(y) })
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }
}

fn check_matrix(m: &Matrix, name: &str) -> Result<()> {
    if m.nrows() < 2 {
        return Err(HlError::SampleTooSmall { needed: 2, got: m.nrows() });
    }
    if m.ncols() == 0 {
        return Err(HlError::DimensionMismatch(format!("{name} has no columns")));
    }
    if let Some((i, j)) = m.find_non_finite() {
        return Err(HlError::NonFiniteInput { index: j * m.nrows() + i, value: m.get(i, j) });
    }
    Ok(())
}
