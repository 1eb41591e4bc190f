//! Deterministic feature engineering on keyed panels and time series.
//!
//! A [`FeatureMatrix`] holds named real columns keyed by `(entity, date)` —
//! or by date alone for national series — with an explicit per-cell missing
//! mask. Lag-induced gaps are masked, never filled with sentinel values, so
//! downstream transforms cannot silently propagate bogus zeros.

use std::collections::BTreeSet;

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Identifies one row of a [`FeatureMatrix`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowKey {
    /// Entity label; `None` for single-series (national) matrices.
    pub entity: Option<String>,
    pub date: NaiveDate,
}

#[derive(Debug, Clone)]
struct Column {
    name: String,
    values: Vec<f64>,
    missing: Vec<bool>,
}

/// A dummy-variable calendar: the column is 1 exactly on `active_dates`.
#[derive(Debug, Clone)]
pub struct DummyCalendar {
    pub name: String,
    pub active_dates: BTreeSet<NaiveDate>,
}

/// Named real columns over `(entity, date)` keys with a missing mask.
///
/// Rows are entity-major and date-ascending within each entity; lags operate
/// strictly within entity blocks.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    entities: Vec<String>,
    /// Per-row entity index into `entities`; `None` for pure time series.
    row_entity: Vec<Option<usize>>,
    row_date: Vec<NaiveDate>,
    columns: Vec<Column>,
}

impl FeatureMatrix {
    /// An empty matrix keyed by date alone.
    pub fn time_series(dates: Vec<NaiveDate>) -> Self {
        FeatureMatrix {
            entities: Vec::new(),
            row_entity: vec![None; dates.len()],
            row_date: dates,
            columns: Vec::new(),
        }
    }

    /// An empty balanced panel: one row per (entity, date), entity-major.
    pub fn balanced_panel(entities: Vec<String>, dates: Vec<NaiveDate>) -> Self {
        let mut row_entity = Vec::with_capacity(entities.len() * dates.len());
        let mut row_date = Vec::with_capacity(entities.len() * dates.len());
        for e in 0..entities.len() {
            for d in &dates {
                row_entity.push(Some(e));
                row_date.push(*d);
            }
        }
        FeatureMatrix {
            entities,
            row_entity,
            row_date,
            columns: Vec::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.row_date.len()
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c.name == name)
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn row_key(&self, row: usize) -> RowKey {
        RowKey {
            entity: self.row_entity[row].map(|e| self.entities[e].clone()),
            date: self.row_date[row],
        }
    }

    /// Entity index of a row (`None` for time series).
    pub fn row_entity_index(&self, row: usize) -> Option<usize> {
        self.row_entity[row]
    }

    pub fn row_date(&self, row: usize) -> NaiveDate {
        self.row_date[row]
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.row_date
    }

    fn col(&self, name: &str) -> Result<&Column> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn values(&self, name: &str) -> Result<&[f64]> {
        Ok(&self.col(name)?.values)
    }

    pub fn missing_mask(&self, name: &str) -> Result<&[bool]> {
        Ok(&self.col(name)?.missing)
    }

    pub fn value(&self, name: &str, row: usize) -> Result<f64> {
        Ok(self.col(name)?.values[row])
    }

    /// Overwrites one cell; test scaffolding for leakage probes.
    pub fn set_value(&mut self, name: &str, row: usize, value: f64) -> Result<()> {
        let col = self
            .columns
            .iter_mut()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))?;
        col.values[row] = value;
        Ok(())
    }

    /// Appends a fully observed column.
    pub fn push_column(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        self.push_column_masked(name, values, vec![false; self.n_rows()])
    }

    /// Appends a column with an explicit missing mask.
    pub fn push_column_masked(
        &mut self,
        name: &str,
        values: Vec<f64>,
        missing: Vec<bool>,
    ) -> Result<()> {
        if self.has_column(name) {
            return Err(Error::DuplicateColumn(name.to_string()));
        }
        assert_eq!(values.len(), self.n_rows(), "column length mismatch");
        assert_eq!(missing.len(), self.n_rows(), "mask length mismatch");
        self.columns.push(Column {
            name: name.to_string(),
            values,
            missing,
        });
        Ok(())
    }

    /// Copies an existing column under a new name.
    pub fn duplicate_column(&mut self, src: &str, dst: &str) -> Result<()> {
        let col = self.col(src)?.clone();
        self.push_column_masked(dst, col.values, col.missing)
    }

    /// Contiguous row ranges per entity, in storage order.
    fn entity_blocks(&self) -> Vec<(usize, usize)> {
        let n = self.n_rows();
        if n == 0 {
            return Vec::new();
        }
        let mut blocks = Vec::new();
        let mut start = 0;
        for row in 1..n {
            if self.row_entity[row] != self.row_entity[start] {
                blocks.push((start, row));
                start = row;
            }
        }
        blocks.push((start, n));
        blocks
    }

    /// Adds `<col>_lag<k>` columns, shifting strictly within each entity.
    ///
    /// The first `k` dates of every entity are masked missing; a masked
    /// source cell stays masked after shifting.
    pub fn add_lags(&self, columns: &[&str], lags: &[usize]) -> Result<Self> {
        let mut out = self.clone();
        let blocks = self.entity_blocks();
        let min_block = blocks.iter().map(|(s, e)| e - s).min().unwrap_or(0);
        for &k in lags {
            if k == 0 {
                return Err(Error::Config("lag order must be positive".into()));
            }
            if k >= min_block {
                return Err(Error::Insufficient(format!(
                    "lag {k} not shorter than series length {min_block}"
                )));
            }
        }
        for &name in columns {
            let col = self.col(name)?;
            for &k in lags {
                let mut values = vec![0.0; self.n_rows()];
                let mut missing = vec![true; self.n_rows()];
                for &(s, e) in &blocks {
                    for row in s + k..e {
                        values[row] = col.values[row - k];
                        missing[row] = col.missing[row - k];
                    }
                }
                out.push_column_masked(&format!("{name}_lag{k}"), values, missing)?;
            }
        }
        Ok(out)
    }

    /// Replaces the named columns elementwise by their square roots.
    pub fn sqrt_transform(&self, columns: &[&str]) -> Result<Self> {
        let mut out = self.clone();
        for &name in columns {
            self.col(name)?;
            let col = out
                .columns
                .iter_mut()
                .find(|c| c.name == name)
                .expect("checked above");
            for row in 0..col.values.len() {
                if col.missing[row] {
                    continue;
                }
                let v = col.values[row];
                if v < 0.0 {
                    return Err(Error::InvalidValue {
                        column: name.to_string(),
                        row,
                        reason: format!("square root of negative value {v}"),
                    });
                }
                col.values[row] = v.sqrt();
            }
        }
        Ok(out)
    }

    /// Adds one {0,1} column per calendar, in the order given.
    pub fn apply_dummies(&self, calendars: &[DummyCalendar]) -> Result<Self> {
        let mut out = self.clone();
        for cal in calendars {
            let values: Vec<f64> = self
                .row_date
                .iter()
                .map(|d| if cal.active_dates.contains(d) { 1.0 } else { 0.0 })
                .collect();
            out.push_column(&cal.name, values)?;
        }
        Ok(out)
    }

    /// Extracts a response vector and design matrix.
    ///
    /// Rows with any masked cell among the selected columns are dropped when
    /// `drop_missing` is set (an error otherwise, so masked gaps can never be
    /// read as data). Row keys travel with the design for fixed-effects and
    /// clustering use.
    pub fn assemble_design(
        &self,
        response: &str,
        predictors: &[&str],
        drop_missing: bool,
        intercept: bool,
    ) -> Result<Design> {
        let y_col = self.col(response)?;
        let x_cols: Vec<&Column> = predictors
            .iter()
            .map(|&p| self.col(p))
            .collect::<Result<_>>()?;

        let mut rows = Vec::new();
        for row in 0..self.n_rows() {
            let any_missing =
                y_col.missing[row] || x_cols.iter().any(|c| c.missing[row]);
            if any_missing {
                if !drop_missing {
                    return Err(Error::Insufficient(format!(
                        "masked cells present at row {row}; assemble with drop_missing"
                    )));
                }
                continue;
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Insufficient(
                "no usable rows after dropping masked cells".into(),
            ));
        }

        let n = rows.len();
        let k = x_cols.len() + usize::from(intercept);
        let mut x = DMatrix::zeros(n, k);
        let mut y = DVector::zeros(n);
        let mut labels = Vec::with_capacity(k);
        if intercept {
            labels.push("intercept".to_string());
        }
        labels.extend(predictors.iter().map(|p| p.to_string()));
        for (i, &row) in rows.iter().enumerate() {
            y[i] = y_col.values[row];
            let mut j = 0;
            if intercept {
                x[(i, 0)] = 1.0;
                j = 1;
            }
            for c in &x_cols {
                x[(i, j)] = c.values[row];
                j += 1;
            }
        }
        let row_keys = rows.iter().map(|&r| self.row_key(r)).collect();
        Ok(Design {
            y,
            x,
            labels,
            row_keys,
        })
    }

    /// Drops rows failing the predicate; used for configurable trim rules.
    pub fn filter_rows<F: Fn(&RowKey) -> bool>(&self, keep: F) -> Self {
        let mut out = FeatureMatrix {
            entities: self.entities.clone(),
            row_entity: Vec::new(),
            row_date: Vec::new(),
            columns: self
                .columns
                .iter()
                .map(|c| Column {
                    name: c.name.clone(),
                    values: Vec::new(),
                    missing: Vec::new(),
                })
                .collect(),
        };
        for row in 0..self.n_rows() {
            if keep(&self.row_key(row)) {
                out.row_entity.push(self.row_entity[row]);
                out.row_date.push(self.row_date[row]);
                for (dst, src) in out.columns.iter_mut().zip(&self.columns) {
                    dst.values.push(src.values[row]);
                    dst.missing.push(src.missing[row]);
                }
            }
        }
        out
    }
}

/// A response vector and design matrix with row identity preserved.
pub struct Design {
    pub y: DVector<f64>,
    pub x: DMatrix<f64>,
    pub labels: Vec<String>,
    pub row_keys: Vec<RowKey>,
}
