//! CSV ingestion, standardization and train/test splitting.
//!
//! Continuous predictors are mapped to `[-1, 1]` with training min/max,
//! categorical predictors are coded by order of first appearance, and the
//! outcome is centred on its midrange and divided by its half-range.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::tree::{Observation, Schema, UNSEEN_LEVEL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Regression,
    Classification,
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regression" => Ok(Self::Regression),
            "classification" => Ok(Self::Classification),
            other => Err(Error::Config(format!("unknown task '{other}'"))),
        }
    }
}

/// Row-major predictor matrix in the sampler's coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix<T> {
    n: usize,
    schema: Schema,
    cont: Vec<T>,
    cat: Vec<u32>,
}

impl<T: Real> DesignMatrix<T> {
    /// `cont` holds `n * p_cont` values and `cat` holds `n * p_cat` codes, both
    /// row-major.
    pub fn new(schema: Schema, cont: Vec<T>, cat: Vec<u32>) -> Result<Self> {
        let n = cont
            .len()
            .checked_div(schema.p_cont)
            .or_else(|| cat.len().checked_div(schema.p_cat()))
            .unwrap_or(0);
        if cont.len() != n * schema.p_cont || cat.len() != n * schema.p_cat() {
            return Err(Error::Data("design matrix blocks have inconsistent row counts".into()));
        }
        let design = Self { n, schema, cont, cat };
        for i in 0..n {
            design.schema.validate(design.row(i))?;
        }
        Ok(design)
    }

    /// Matrix with no rows.
    pub fn empty(schema: Schema) -> Self {
        Self {
            n: 0,
            schema,
            cont: Vec::new(),
            cat: Vec::new(),
        }
    }

    /// Continuous-only matrix from rows.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::Data("rows have different lengths".into()));
        }
        Self::new(Schema::continuous(p), rows.concat(), Vec::new())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    #[inline]
    pub fn row(&self, i: usize) -> Observation<'_, T> {
        let pc = self.schema.p_cont;
        let pk = self.schema.p_cat();
        Observation::new(&self.cont[i * pc..(i + 1) * pc], &self.cat[i * pk..(i + 1) * pk])
    }

    pub fn select(&self, rows: &[usize]) -> Self {
        let pc = self.schema.p_cont;
        let pk = self.schema.p_cat();
        let mut cont = Vec::with_capacity(rows.len() * pc);
        let mut cat = Vec::with_capacity(rows.len() * pk);
        for &i in rows {
            cont.extend_from_slice(&self.cont[i * pc..(i + 1) * pc]);
            cat.extend_from_slice(&self.cat[i * pk..(i + 1) * pk]);
        }
        Self {
            n: rows.len(),
            schema: self.schema.clone(),
            cont,
            cat,
        }
    }

    pub fn continuous_block(&self) -> &[T] {
        &self.cont
    }

    pub fn categorical_block(&self) -> &[u32] {
        &self.cat
    }
}

/// Column roles for a CSV file. Columns not listed are continuous.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CsvSchema {
    pub outcome: Option<String>,
    pub categorical: Vec<String>,
    pub ignore: Vec<String>,
}

/// Parsed but unscaled table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawTable {
    pub cont_names: Vec<String>,
    /// Column-major continuous values.
    pub cont: Vec<Vec<f64>>,
    pub cat_names: Vec<String>,
    /// Column-major categorical labels.
    pub cat: Vec<Vec<String>>,
    pub outcome_name: Option<String>,
    pub outcome: Option<Vec<f64>>,
    pub n: usize,
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<RawTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    read_csv(file, schema)
}

/// Header names of a CSV file, trimmed.
pub fn read_headers(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    let mut rdr = csv::Reader::from_reader(file);
    Ok(rdr.headers()?.iter().map(|h| h.trim().to_string()).collect())
}

pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(Error::Data("empty file: no header row".into()));
    }
    let mut index = HashMap::new();
    for (i, h) in headers.iter().enumerate() {
        if index.insert(h.clone(), i).is_some() {
            return Err(Error::Data(format!("duplicate column name '{h}'")));
        }
    }
    let named = schema
        .outcome
        .iter()
        .chain(&schema.categorical)
        .chain(&schema.ignore);
    for name in named {
        if !index.contains_key(name) {
            return Err(Error::Data(format!("column '{name}' not found in header")));
        }
    }

    let mut table = RawTable {
        outcome_name: schema.outcome.clone(),
        ..RawTable::default()
    };
    let mut cont_idx = Vec::new();
    let mut cat_idx = Vec::new();
    for (i, h) in headers.iter().enumerate() {
        if schema.outcome.as_deref() == Some(h.as_str()) || schema.ignore.contains(h) {
            continue;
        }
        if schema.categorical.contains(h) {
            cat_idx.push(i);
            table.cat_names.push(h.clone());
        } else {
            cont_idx.push(i);
            table.cont_names.push(h.clone());
        }
    }
    table.cont = vec![Vec::new(); cont_idx.len()];
    table.cat = vec![Vec::new(); cat_idx.len()];
    let outcome_idx = schema.outcome.as_ref().map(|o| index[o]);
    let mut outcome = Vec::new();

    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 2; // 1-based, after the header
        let cell = |i: usize| -> Result<&str> {
            let v = record.get(i).map(str::trim).unwrap_or("");
            if v.is_empty() {
                Err(Error::Data(format!("missing value at row {row}, column '{}'", headers[i])))
            } else {
                Ok(v)
            }
        };
        let number = |i: usize| -> Result<f64> {
            let v = cell(i)?;
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Data(format!("cannot parse '{v}' as a number at row {row}, column '{}'", headers[i])))
        };
        for (k, &i) in cont_idx.iter().enumerate() {
            table.cont[k].push(number(i)?);
        }
        for (k, &i) in cat_idx.iter().enumerate() {
            table.cat[k].push(cell(i)?.to_string());
        }
        if let Some(i) = outcome_idx {
            outcome.push(number(i)?);
        }
        table.n += 1;
    }
    if table.n == 0 {
        return Err(Error::Data("file has a header but no data rows".into()));
    }
    if outcome_idx.is_some() {
        table.outcome = Some(outcome);
    }
    Ok(table)
}

impl RawTable {
    pub fn select_rows(&self, rows: &[usize]) -> RawTable {
        RawTable {
            cont_names: self.cont_names.clone(),
            cont: self.cont.iter().map(|c| rows.iter().map(|&i| c[i]).collect()).collect(),
            cat_names: self.cat_names.clone(),
            cat: self.cat.iter().map(|c| rows.iter().map(|&i| c[i].clone()).collect()).collect(),
            outcome_name: self.outcome_name.clone(),
            outcome: self.outcome.as_ref().map(|y| rows.iter().map(|&i| y[i]).collect()),
            n: rows.len(),
        }
    }

    /// Uniform random partition into `round(fraction * n)` training rows and
    /// the rest.
    pub fn split(&self, fraction: f64, seed: u64) -> Result<(RawTable, RawTable)> {
        let (train, test) = split_indices(self.n, fraction, seed)?;
        Ok((self.select_rows(&train), self.select_rows(&test)))
    }

    /// Writes the table back out as CSV (continuous, categorical, outcome).
    pub fn to_csv(&self) -> Result<String> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<&str> = self.cont_names.iter().map(String::as_str).collect();
        header.extend(self.cat_names.iter().map(String::as_str));
        if let Some(name) = &self.outcome_name {
            header.push(name);
        }
        wtr.write_record(&header)?;
        for i in 0..self.n {
            let mut rec: Vec<String> = self.cont.iter().map(|c| c[i].to_string()).collect();
            rec.extend(self.cat.iter().map(|c| c[i].clone()));
            if let Some(y) = &self.outcome {
                rec.push(y[i].to_string());
            }
            wtr.write_record(&rec)?;
        }
        String::from_utf8(wtr.into_inner().map_err(|e| Error::Data(e.to_string()))?)
            .map_err(|e| Error::Data(e.to_string()))
    }
}

/// Shuffled (train, test) row indices, each side sorted.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("split fraction must lie in (0, 1), got {fraction}")));
    }
    let n_train = (fraction * n as f64).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::Data(format!(
            "splitting {n} rows at fraction {fraction} leaves one side empty"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Affine outcome map `y_std = (y - center) / half_range`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeScaling {
    pub center: f64,
    pub half_range: f64,
}

impl OutcomeScaling {
    pub const IDENTITY: Self = Self {
        center: 0.0,
        half_range: 1.0,
    };

    /// Midrange centring and half-range scaling; constant outcomes are rejected.
    pub fn fit(y: &[f64]) -> Result<Self> {
        let (lo, hi) = min_max(y).ok_or_else(|| Error::Data("outcome is empty".into()))?;
        if hi <= lo {
            return Err(Error::Config("outcome is constant; nothing to fit".into()));
        }
        Ok(Self {
            center: 0.5 * (lo + hi),
            half_range: 0.5 * (hi - lo),
        })
    }

    #[inline]
    pub fn to_std(&self, y: f64) -> f64 {
        (y - self.center) / self.half_range
    }

    #[inline]
    pub fn from_std(&self, v: f64) -> f64 {
        self.center + self.half_range * v
    }
}

fn min_max(v: &[f64]) -> Option<(f64, f64)> {
    let first = *v.first()?;
    Some(v.iter().fold((first, first), |(lo, hi), &x| (lo.min(x), hi.max(x))))
}

/// Training-set statistics used to map any table into model coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub task: Task,
    pub cont_names: Vec<String>,
    /// Training (min, max) per continuous column.
    pub ranges: Vec<(f64, f64)>,
    pub cat_names: Vec<String>,
    /// Training levels per categorical column, in first-appearance order.
    pub levels: Vec<Vec<String>>,
    pub outcome_name: Option<String>,
    pub outcome: OutcomeScaling,
}

impl Standardizer {
    pub fn fit(raw: &RawTable, task: Task) -> Result<Self> {
        let ranges = raw
            .cont
            .iter()
            .zip(&raw.cont_names)
            .map(|(c, name)| {
                let (lo, hi) = min_max(c).ok_or_else(|| Error::Data("no rows".into()))?;
                if hi <= lo {
                    log::warn!("continuous column '{name}' is constant; it is mapped to 0");
                }
                Ok((lo, hi))
            })
            .collect::<Result<Vec<_>>>()?;
        let levels = raw
            .cat
            .iter()
            .map(|c| {
                let mut seen: Vec<String> = Vec::new();
                for v in c {
                    if !seen.contains(v) {
                        seen.push(v.clone());
                    }
                }
                seen
            })
            .collect();
        let outcome = match (task, &raw.outcome) {
            (_, None) => return Err(Error::Data("training data needs an outcome column".into())),
            (Task::Regression, Some(y)) => OutcomeScaling::fit(y)?,
            (Task::Classification, Some(y)) => {
                check_binary(y)?;
                OutcomeScaling::IDENTITY
            }
        };
        Ok(Self {
            task,
            cont_names: raw.cont_names.clone(),
            ranges,
            cat_names: raw.cat_names.clone(),
            levels,
            outcome_name: raw.outcome_name.clone(),
            outcome,
        })
    }

    pub fn schema(&self) -> Schema {
        Schema::new(self.cont_names.len(), self.levels.iter().map(|l| l.len() as u32).collect())
    }

    #[inline]
    pub fn scale_value(&self, column: usize, x: f64) -> f64 {
        let (lo, hi) = self.ranges[column];
        if hi > lo {
            2.0 * (x - lo) / (hi - lo) - 1.0
        } else {
            0.0
        }
    }

    #[inline]
    pub fn unscale_value(&self, column: usize, v: f64) -> f64 {
        let (lo, hi) = self.ranges[column];
        lo + (v + 1.0) * 0.5 * (hi - lo)
    }

    /// Maps `raw` into model coordinates with the training statistics. Test
    /// values outside the training range extrapolate (no clamping) and unseen
    /// categorical labels get [`UNSEEN_LEVEL`].
    pub fn transform<T: Real>(&self, raw: &RawTable) -> Result<Dataset<T>> {
        if raw.cont_names != self.cont_names || raw.cat_names != self.cat_names {
            return Err(Error::Data(format!(
                "columns do not match the training schema (expected continuous {:?}, categorical {:?})",
                self.cont_names, self.cat_names
            )));
        }
        let pc = self.cont_names.len();
        let pk = self.cat_names.len();
        let mut cont = Vec::with_capacity(raw.n * pc);
        let mut cat = Vec::with_capacity(raw.n * pk);
        for i in 0..raw.n {
            for j in 0..pc {
                cont.push(T::lit(self.scale_value(j, raw.cont[j][i])));
            }
            for j in 0..pk {
                let label = &raw.cat[j][i];
                let code = self.levels[j]
                    .iter()
                    .position(|l| l == label)
                    .map_or(UNSEEN_LEVEL, |p| p as u32);
                cat.push(code);
            }
        }
        let design = DesignMatrix::new(self.schema(), cont, cat)?;
        let outcome = match &raw.outcome {
            None => None,
            Some(y) => {
                if self.task == Task::Classification {
                    check_binary(y)?;
                }
                Some(y.iter().map(|&v| T::lit(self.outcome.to_std(v))).collect())
            }
        };
        Ok(Dataset { design, outcome })
    }
}

fn check_binary(y: &[f64]) -> Result<()> {
    if let Some(v) = y.iter().find(|&&v| v != 0.0 && v != 1.0) {
        return Err(Error::Data(format!("classification outcome must be 0 or 1, found {v}")));
    }
    Ok(())
}

/// Predictors and outcome in model coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub design: DesignMatrix<T>,
    /// Standardized outcome (regression) or 0/1 labels (classification).
    pub outcome: Option<Vec<T>>,
}

/// Fits a [`Standardizer`] on `raw` and applies it.
pub fn standardize<T: Real>(raw: &RawTable, task: Task) -> Result<(Dataset<T>, Standardizer)> {
    let scaler = Standardizer::fit(raw, task)?;
    let data = scaler.transform(raw)?;
    Ok((data, scaler))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "x,colour,y\n0,red,1.5\n5,blue,2.5\n10,red,3.5\n";

    fn schema() -> CsvSchema {
        CsvSchema {
            outcome: Some("y".into()),
            categorical: vec!["colour".into()],
            ignore: vec![],
        }
    }

    #[test]
    fn loads_roles() {
        let t = read_csv(CSV.as_bytes(), &schema()).unwrap();
        assert_eq!(t.n, 3);
        assert_eq!(t.cont_names, vec!["x"]);
        assert_eq!(t.cat_names, vec!["colour"]);
        assert_eq!(t.outcome.as_deref(), Some(&[1.5, 2.5, 3.5][..]));
    }

    #[test]
    fn parse_errors_name_the_cell() {
        let err = read_csv("x,colour,y\n0,red,1\nabc,red,2\n".as_bytes(), &schema()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 3") && msg.contains("'x'"), "{msg}");
        assert!(read_csv("x,x,y\n1,2,3\n".as_bytes(), &CsvSchema::default()).is_err());
        assert!(read_csv("".as_bytes(), &CsvSchema::default()).is_err());
        assert!(read_csv("x,colour,y\n".as_bytes(), &schema()).is_err());
        assert!(read_csv("x,colour,y\n1,,2\n".as_bytes(), &schema()).is_err());
        let missing = CsvSchema {
            outcome: Some("z".into()),
            ..CsvSchema::default()
        };
        assert!(read_csv(CSV.as_bytes(), &missing).is_err());
    }

    #[test]
    fn standardizes_to_unit_box() {
        let raw = read_csv(CSV.as_bytes(), &schema()).unwrap();
        let (data, scaler) = standardize::<f64>(&raw, Task::Regression).unwrap();
        assert_eq!(data.design.continuous_block(), &[-1.0, 0.0, 1.0]);
        assert_eq!(data.design.categorical_block(), &[0, 1, 0]);
        assert_eq!(data.outcome.as_deref(), Some(&[-1.0, 0.0, 1.0][..]));
        assert_eq!(scaler.outcome, OutcomeScaling { center: 2.5, half_range: 1.0 });
        assert_eq!(scaler.schema(), Schema::new(1, vec![2]));
    }

    #[test]
    fn identity_on_unit_columns() {
        let raw = read_csv("a,y\n-1,0\n0.25,1\n1,2\n".as_bytes(), &schema_y()).unwrap();
        let (data, _) = standardize::<f64>(&raw, Task::Regression).unwrap();
        for (a, b) in data.design.continuous_block().iter().zip([-1.0, 0.25, 1.0]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    fn schema_y() -> CsvSchema {
        CsvSchema {
            outcome: Some("y".into()),
            ..CsvSchema::default()
        }
    }

    #[test]
    fn test_rows_extrapolate_and_unseen_levels() {
        let raw = read_csv(CSV.as_bytes(), &schema()).unwrap();
        let scaler = Standardizer::fit(&raw, Task::Regression).unwrap();
        let test = read_csv("x,colour,y\n20,green,0\n".as_bytes(), &schema()).unwrap();
        let data: Dataset<f64> = scaler.transform(&test).unwrap();
        assert_eq!(data.design.continuous_block(), &[3.0]);
        assert_eq!(data.design.categorical_block(), &[UNSEEN_LEVEL]);
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let raw = read_csv("a,b,y\n3,1,0\n3,2,1\n".as_bytes(), &schema_y()).unwrap();
        let (data, _) = standardize::<f64>(&raw, Task::Regression).unwrap();
        assert_eq!(data.design.row(0).cont, &[0.0, -1.0]);
    }

    #[test]
    fn constant_outcome_is_rejected() {
        let raw = read_csv("a,y\n1,2\n3,2\n".as_bytes(), &schema_y()).unwrap();
        assert!(matches!(standardize::<f64>(&raw, Task::Regression), Err(Error::Config(_))));
    }

    #[test]
    fn classification_needs_binary_labels() {
        let raw = read_csv("a,y\n1,0\n3,2\n".as_bytes(), &schema_y()).unwrap();
        assert!(standardize::<f64>(&raw, Task::Classification).is_err());
        let raw = read_csv("a,y\n1,0\n3,1\n".as_bytes(), &schema_y()).unwrap();
        let (data, _) = standardize::<f64>(&raw, Task::Classification).unwrap();
        assert_eq!(data.outcome.unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn split_sizes_and_determinism() {
        let (train, test) = split_indices(100, 0.75, 9).unwrap();
        assert_eq!((train.len(), test.len()), (75, 25));
        assert_eq!(split_indices(100, 0.75, 9).unwrap(), (train.clone(), test.clone()));
        let mut all: Vec<usize> = train.into_iter().chain(test).collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert!(split_indices(3, 0.1, 1).is_err());
        assert!(split_indices(10, 1.0, 1).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let raw = read_csv(CSV.as_bytes(), &schema()).unwrap();
        let again = read_csv(raw.to_csv().unwrap().as_bytes(), &schema()).unwrap();
        assert_eq!(raw, again);
    }
}
