use std::io::Read;

use crate::error::{Error, Result};

/// Row-major `N x D` matrix of finite observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    dims: usize,
    values: Vec<f64>,
}

impl Dataset {
    pub fn new(n: usize, dims: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || dims == 0 {
            return Err(Error::InvalidDataset(format!("need N >= 1 and D >= 1, got {n}x{dims}")));
        }
        if values.len() != n * dims {
            return Err(Error::InvalidDataset(format!("{} values do not fill a {n}x{dims} matrix", values.len())));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite value at row {}, column {}",
                pos / dims + 1,
                pos % dims + 1
            )));
        }
        Ok(Self { n, dims, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dims = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != dims) {
            return Err(Error::InvalidDataset(format!("row {} has {} columns, expected {dims}", i + 1, rows[i].len())));
        }
        Self::new(rows.len(), dims, rows.concat())
    }

    /// One column of values, `N x 1`.
    pub fn from_column(values: &[f64]) -> Result<Self> {
        Self::new(values.len(), 1, values.to_vec())
    }

    /// Reads decimal CSV, one observation per record. `has_header` skips the
    /// first record. Errors name the 1-based file line and column.
    pub fn from_csv_reader<R: Read>(reader: R, has_header: bool) -> Result<Self> {
        let mut rdr =
            csv::ReaderBuilder::new().has_headers(has_header).flexible(true).trim(csv::Trim::All).from_reader(reader);
        let mut values = Vec::new();
        let mut dims = None;
        let mut n = 0;
        for record in rdr.records() {
            let record = record.map_err(|e| {
                let row = e.position().map_or(0, |p| p.line());
                Error::Csv { row, column: 0, message: e.to_string() }
            })?;
            let row = record.position().map_or(n as u64 + 1, |p| p.line());
            if record.len() == 1 && record[0].is_empty() {
                continue;
            }
            let expected = *dims.get_or_insert(record.len());
            if record.len() != expected {
                return Err(Error::Csv {
                    row,
                    column: record.len().min(expected) + 1,
                    message: format!("expected {expected} columns, found {}", record.len()),
                });
            }
            for (j, field) in record.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| Error::Csv {
                    row,
                    column: j + 1,
                    message: format!("cannot parse {field:?} as a number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Csv { row, column: j + 1, message: format!("non-finite value {field:?}") });
                }
                values.push(v);
            }
            n += 1;
        }
        if n == 0 {
            return Err(Error::InvalidDataset("no observations".into()));
        }
        Self::new(n, dims.unwrap_or(0), values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dims..(i + 1) * self.dims]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dims)
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.dims];
        for row in self.rows() {
            for (m, x) in means.iter_mut().zip(row) {
                *m += x;
            }
        }
        means.iter_mut().for_each(|m| *m /= self.n as f64);
        means
    }

    /// Population (biased) variance of each feature.
    pub fn column_variances(&self) -> Vec<f64> {
        let means = self.column_means();
        let mut vars = vec![0.0; self.dims];
        for row in self.rows() {
            for ((v, x), m) in vars.iter_mut().zip(row).zip(&means) {
                *v += (x - m) * (x - m);
            }
        }
        vars.iter_mut().for_each(|v| *v /= self.n as f64);
        vars
    }

    /// Per-feature variance floor `rel * var_j`. Constant features use
    /// `rel` itself so the floor stays positive.
    pub fn variance_floor(&self, rel: f64) -> Vec<f64> {
        self.column_variances().into_iter().map(|v| if v > 0.0 { rel * v } else { rel }).collect()
    }

    /// Copies every feature column `r` times: `[a, b]` becomes
    /// `[a, a, .., b, b, ..]`.
    pub fn replicate_columns(&self, r: usize) -> Result<Dataset> {
        if r == 0 {
            return Err(Error::InvalidConfig("replication factor must be at least 1".into()));
        }
        let values = self.rows().flat_map(|row| row.iter().flat_map(move |&v| std::iter::repeat_n(v, r))).collect();
        Dataset::new(self.n, self.dims * r, values)
    }
}
