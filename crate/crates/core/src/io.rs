//! Dataset ingestion and result tables on disk.

use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::harness::{Record, StudyResult};
use crate::population::Population;

/// File name of the white-wine quality dataset in the UCI repository.
pub const WINE_FILE_NAME: &str = "winequality-white.csv";
pub const WINE_ROWS: usize = 4898;
pub const WINE_COLUMNS: [&str; 12] = [
    "fixed acidity",
    "volatile acidity",
    "citric acid",
    "residual sugar",
    "chlorides",
    "free sulfur dioxide",
    "total sulfur dioxide",
    "density",
    "pH",
    "sulphates",
    "alcohol",
    "quality",
];

/// Header of every emitted result file.
pub const RESULTS_HEADER: [&str; 9] = [
    "study",
    "N",
    "n",
    "kn",
    "design",
    "grid_point",
    "replicate",
    "statistic",
    "value",
];

const AGGREGATE: &str = "aggregate";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Real,
    Integer,
}

/// Layout of a delimited numeric table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularSchema {
    pub columns: Vec<(String, ColumnKind)>,
    pub delimiter: char,
    pub decimal: char,
    pub has_header: bool,
    /// Column holding `y`.
    pub response: String,
    /// Columns read but left out of the covariates.
    pub drop: Vec<String>,
}

impl TabularSchema {
    /// The UCI white-wine file: `;`-separated, quoted header, density dropped.
    pub fn wine() -> TabularSchema {
        TabularSchema {
            columns: WINE_COLUMNS
                .iter()
                .map(|&c| {
                    let kind = if c == "quality" {
                        ColumnKind::Integer
                    } else {
                        ColumnKind::Real
                    };
                    (c.to_string(), kind)
                })
                .collect(),
            delimiter: ';',
            decimal: '.',
            has_header: true,
            response: "quality".into(),
            drop: vec!["density".into()],
        }
    }

    /// Comma-separated, headed, all-real table with the given columns.
    pub fn simple(columns: &[&str], response: &str) -> TabularSchema {
        TabularSchema {
            columns: columns
                .iter()
                .map(|&c| (c.to_string(), ColumnKind::Real))
                .collect(),
            delimiter: ',',
            decimal: '.',
            has_header: true,
            response: response.into(),
            drop: vec![],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.delimiter.is_ascii() {
            return Err(invalid(format!(
                "delimiter {:?} is not a single byte",
                self.delimiter
            )));
        }
        if self.decimal == self.delimiter {
            return Err(invalid("decimal separator equals the delimiter"));
        }
        if self.decimal != '.' && self.decimal != ',' {
            return Err(invalid(format!(
                "unsupported decimal separator {:?}",
                self.decimal
            )));
        }
        for (i, (name, _)) in self.columns.iter().enumerate() {
            if self.columns[..i].iter().any(|(n, _)| n == name) {
                return Err(invalid(format!("duplicate column `{name}`")));
            }
        }
        if self.position(&self.response).is_none() {
            return Err(invalid(format!(
                "response column `{}` not in schema",
                self.response
            )));
        }
        for d in &self.drop {
            if self.position(d).is_none() {
                return Err(invalid(format!("dropped column `{d}` not in schema")));
            }
            if *d == self.response {
                return Err(invalid("the response column cannot be dropped"));
            }
        }
        Ok(())
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|(n, _)| n == name)
    }

    /// Covariate column names in file order.
    pub fn covariates(&self) -> Vec<&str> {
        self.columns
            .iter()
            .map(|(n, _)| n.as_str())
            .filter(|n| *n != self.response && !self.drop.iter().any(|d| d == n))
            .collect()
    }
}

/// Columns of a numeric table, in schema order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn data_err(path: &Path, row: usize, column: &str, message: impl Into<String>) -> Error {
    Error::Data {
        path: path.to_path_buf(),
        row,
        column: column.to_string(),
        message: message.into(),
    }
}

/// Read every schema column. Rows are numbered as file lines.
pub fn read_table(path: &Path, schema: &TabularSchema) -> Result<Table> {
    schema.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter as u8)
        .has_headers(schema.has_header)
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    if schema.has_header {
        let header = reader.headers().map_err(csv_err(path))?.clone();
        if header.len() != schema.columns.len() {
            return Err(data_err(
                path,
                1,
                "header",
                format!(
                    "expected {} columns, found {}",
                    schema.columns.len(),
                    header.len()
                ),
            ));
        }
        for ((expected, _), found) in schema.columns.iter().zip(header.iter()) {
            if expected != found {
                return Err(data_err(path, 1, expected, format!("header has `{found}`")));
            }
        }
    }
    let mut columns = vec![Vec::new(); schema.columns.len()];
    for record in reader.records() {
        let record = record.map_err(csv_err(path))?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != schema.columns.len() {
            return Err(data_err(
                path,
                row,
                "*",
                format!(
                    "expected {} fields, found {}",
                    schema.columns.len(),
                    record.len()
                ),
            ));
        }
        for (j, ((name, kind), cell)) in schema.columns.iter().zip(record.iter()).enumerate() {
            let text = if schema.decimal == ',' {
                cell.replace(',', ".")
            } else {
                cell.to_string()
            };
            let value = match kind {
                ColumnKind::Real => text.parse::<f64>().ok().filter(|v| v.is_finite()),
                ColumnKind::Integer => text.parse::<i64>().ok().map(|v| v as f64),
            }
            .ok_or_else(|| {
                data_err(
                    path,
                    row,
                    name,
                    format!("cannot parse `{cell}` as {kind:?}"),
                )
            })?;
            columns[j].push(value);
        }
    }
    Ok(Table {
        names: schema.columns.iter().map(|(n, _)| n.clone()).collect(),
        columns,
    })
}

/// A population read from disk with its covariate names and any warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedPopulation {
    pub population: Population,
    pub covariate_names: Vec<String>,
    pub warnings: Vec<String>,
}

/// Project a table onto its covariates and response, preserving row order.
pub fn table_to_population(table: &Table, schema: &TabularSchema) -> Result<LoadedPopulation> {
    let names: Vec<String> = schema.covariates().into_iter().map(String::from).collect();
    let cols: Vec<&[f64]> = names
        .iter()
        .map(|n| {
            table
                .column(n)
                .ok_or_else(|| invalid(format!("missing column `{n}`")))
        })
        .collect::<Result<_>>()?;
    let y = table
        .column(&schema.response)
        .ok_or_else(|| invalid(format!("missing column `{}`", schema.response)))?
        .to_vec();
    let rows = y.len();
    if rows == 0 {
        return Err(invalid("the table has no rows"));
    }
    let mut x = Vec::with_capacity(rows * cols.len());
    for i in 0..rows {
        x.extend(cols.iter().map(|c| c[i]));
    }
    Ok(LoadedPopulation {
        population: Population::new(cols.len(), x, y, None)?,
        covariate_names: names,
        warnings: vec![],
    })
}

pub fn read_population_csv(path: &Path, schema: &TabularSchema) -> Result<LoadedPopulation> {
    table_to_population(&read_table(path, schema)?, schema)
}

/// Read the white-wine file. A row count other than 4898 is reported as a
/// warning, not an error.
pub fn read_wine_csv(path: &Path, schema: &TabularSchema) -> Result<LoadedPopulation> {
    let mut loaded = read_population_csv(path, schema)?;
    let rows = loaded.population.len();
    if rows != WINE_ROWS {
        loaded.warnings.push(format!(
            "{} has {rows} rows, the UCI white-wine file has {WINE_ROWS}",
            path.display()
        ));
    }
    Ok(loaded)
}

fn fmt_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write records as long-format CSV, sorted by record key.
pub fn write_results(result: &StudyResult, path: &Path) -> Result<()> {
    let mut sorted = result.clone();
    sorted.sort();
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(RESULTS_HEADER).map_err(csv_err(path))?;
    for r in &sorted.records {
        w.write_record([
            r.study.clone(),
            r.population_size.to_string(),
            r.sample_size.to_string(),
            r.kn.to_string(),
            r.design.clone(),
            r.grid_point.map_or_else(String::new, |g| g.to_string()),
            r.replicate
                .map_or_else(|| AGGREGATE.to_string(), |l| l.to_string()),
            r.statistic.clone(),
            fmt_value(r.value),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Read a file produced by [`write_results`].
pub fn read_results(path: &Path) -> Result<StudyResult> {
    let mut reader = csv::Reader::from_reader(open(path)?);
    let header = reader.headers().map_err(csv_err(path))?.clone();
    if header.iter().ne(RESULTS_HEADER.iter().copied()) {
        return Err(data_err(path, 1, "header", "not a results file"));
    }
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(csv_err(path))?;
        let row = rec.position().map_or(0, |p| p.line() as usize);
        let field = |j: usize| &rec[j];
        let int = |j: usize| {
            field(j)
                .parse::<usize>()
                .map_err(|e| data_err(path, row, RESULTS_HEADER[j], e.to_string()))
        };
        let grid_point = if field(5).is_empty() {
            None
        } else {
            Some(int(5)?)
        };
        let replicate = if field(6) == AGGREGATE {
            None
        } else {
            Some(int(6)?)
        };
        records.push(Record {
            study: field(0).to_string(),
            population_size: int(1)?,
            sample_size: int(2)?,
            kn: int(3)?,
            design: field(4).to_string(),
            grid_point,
            replicate,
            statistic: field(7).to_string(),
            value: field(8)
                .parse::<f64>()
                .map_err(|e| data_err(path, row, "value", e.to_string()))?,
        });
    }
    Ok(StudyResult {
        records,
        ..StudyResult::default()
    })
}

/// Write evaluation points, one per row, columns `x1..xd`.
pub fn write_grid(points: &[Vec<f64>], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = csv::Writer::from_writer(file);
    let d = points.first().map_or(0, Vec::len);
    let mut header = vec!["point".to_string()];
    header.extend((1..=d).map(|j| format!("x{j}")));
    w.write_record(&header).map_err(csv_err(path))?;
    for (g, p) in points.iter().enumerate() {
        let mut row = vec![g.to_string()];
        row.extend(p.iter().map(|&v| fmt_value(v)));
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Read a file produced by [`write_grid`].
pub fn read_grid(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::Reader::from_reader(open(path)?);
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(csv_err(path))?;
        let row = rec.position().map_or(0, |p| p.line() as usize);
        let point = rec
            .iter()
            .skip(1)
            .enumerate()
            .map(|(j, v)| {
                v.parse::<f64>()
                    .map_err(|e| data_err(path, row, &format!("x{}", j + 1), e.to_string()))
            })
            .collect::<Result<Vec<f64>>>()?;
        out.push(point);
    }
    Ok(out)
}
