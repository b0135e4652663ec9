//! Datasets, bounded queries and their sensitivity.
//!
//! Neighboring datasets differ by the removal of one record.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An immutable table of real-valued records.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    fields: Vec<String>,
    records: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(fields: Vec<String>, records: Vec<Vec<f64>>) -> Result<Self> {
        for (i, name) in fields.iter().enumerate() {
            if fields[..i].contains(name) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate field name {name:?}"
                )));
            }
        }
        for (i, row) in records.iter().enumerate() {
            if row.len() != fields.len() {
                return Err(Error::Ingestion {
                    row: i + 1,
                    message: format!("expected {} values, found {}", fields.len(), row.len()),
                });
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::Ingestion {
                    row: i + 1,
                    message: format!("non-finite value {v}"),
                });
            }
        }
        Ok(Self { fields, records })
    }

    /// A single-field dataset.
    pub fn from_column(field: &str, values: &[f64]) -> Result<Self> {
        Self::new(
            vec![field.to_string()],
            values.iter().map(|&v| vec![v]).collect(),
        )
    }

    /// Reads a CSV table with a header row.
    ///
    /// When `only` is given, just those columns are kept (and must exist);
    /// otherwise every column must be numeric. Errors carry the line number
    /// within the file, the header being line 1.
    pub fn read_csv<R: Read>(reader: R, only: Option<&[&str]>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let header = rdr
            .headers()
            .map_err(|e| Error::Ingestion {
                row: 1,
                message: e.to_string(),
            })?
            .clone();
        let names: Vec<String> = header.iter().map(|h| h.trim().to_string()).collect();
        let columns: Vec<usize> = match only {
            None => (0..names.len()).collect(),
            Some(wanted) => wanted
                .iter()
                .map(|w| {
                    names
                        .iter()
                        .position(|n| n == w)
                        .ok_or_else(|| Error::MissingField(w.to_string()))
                })
                .collect::<Result<_>>()?,
        };
        let fields: Vec<String> = columns.iter().map(|&c| names[c].clone()).collect();

        let mut records = Vec::new();
        for (i, row) in rdr.records().enumerate() {
            let line = i + 2;
            let row = row.map_err(|e| Error::Ingestion {
                row: line,
                message: e.to_string(),
            })?;
            if row.len() != names.len() {
                return Err(Error::Ingestion {
                    row: line,
                    message: format!("expected {} columns, found {}", names.len(), row.len()),
                });
            }
            let values = columns
                .iter()
                .map(|&c| {
                    let cell = row[c].trim();
                    if cell.is_empty() {
                        return Err(Error::Ingestion {
                            row: line,
                            message: format!("missing value for {:?}", names[c]),
                        });
                    }
                    match cell.parse::<f64>() {
                        Ok(v) if v.is_finite() => Ok(v),
                        _ => Err(Error::Ingestion {
                            row: line,
                            message: format!(
                                "{:?} is not a finite number (field {:?})",
                                cell, names[c]
                            ),
                        }),
                    }
                })
                .collect::<Result<Vec<f64>>>()?;
            records.push(values);
        }
        Ok(Self { fields, records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn fields(&self) -> &[String] {
        &self.fields
    }

    pub fn record(&self, k: usize) -> &[f64] {
        &self.records[k]
    }

    pub fn column(&self, field: &str) -> Result<Vec<f64>> {
        let c = self
            .fields
            .iter()
            .position(|f| f == field)
            .ok_or_else(|| Error::MissingField(field.to_string()))?;
        Ok(self.records.iter().map(|r| r[c]).collect())
    }

    /// Copy with `record` inserted at position `k`.
    pub fn with_record_inserted(&self, k: usize, record: Vec<f64>) -> Result<Self> {
        if k > self.len() {
            return Err(Error::InvalidParameter(format!(
                "insert position {k} beyond {} records",
                self.len()
            )));
        }
        let mut records = self.records.clone();
        records.insert(k, record);
        Self::new(self.fields.clone(), records)
    }

    fn without_record(&self, k: usize) -> Self {
        let mut records = self.records.clone();
        records.remove(k);
        Self {
            fields: self.fields.clone(),
            records,
        }
    }
}

/// The `n` leave-one-out datasets, in record order.
pub fn neighbors(dataset: &Dataset) -> Vec<Dataset> {
    (0..dataset.len())
        .map(|k| dataset.without_record(k))
        .collect()
}

pub const DEFAULT_COUNT_CAP: u64 = 1_000_000_000;

fn default_count_cap() -> u64 {
    DEFAULT_COUNT_CAP
}

/// A query with a compact codomain.
///
/// Histogram bins are `[e_i, e_{i+1})`, the last one closed; values outside
/// the edges fall in no bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QueryRepr", into = "QueryRepr")]
pub enum BoundedQuery {
    Count {
        n_max: u64,
    },
    ClippedMean {
        field: String,
        lower: f64,
        upper: f64,
    },
    Histogram {
        field: String,
        edges: Vec<f64>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum QueryRepr {
    Count {
        #[serde(default = "default_count_cap")]
        n_max: u64,
    },
    ClippedMean {
        field: String,
        lower: f64,
        upper: f64,
    },
    Histogram {
        field: String,
        edges: Vec<f64>,
    },
}

impl TryFrom<QueryRepr> for BoundedQuery {
    type Error = Error;

    fn try_from(repr: QueryRepr) -> Result<Self> {
        let q = match repr {
            QueryRepr::Count { n_max } => BoundedQuery::Count { n_max },
            QueryRepr::ClippedMean {
                field,
                lower,
                upper,
            } => BoundedQuery::ClippedMean {
                field,
                lower,
                upper,
            },
            QueryRepr::Histogram { field, edges } => BoundedQuery::Histogram { field, edges },
        };
        q.validate()?;
        Ok(q)
    }
}

impl From<BoundedQuery> for QueryRepr {
    fn from(q: BoundedQuery) -> Self {
        match q {
            BoundedQuery::Count { n_max } => QueryRepr::Count { n_max },
            BoundedQuery::ClippedMean {
                field,
                lower,
                upper,
            } => QueryRepr::ClippedMean {
                field,
                lower,
                upper,
            },
            BoundedQuery::Histogram { field, edges } => QueryRepr::Histogram { field, edges },
        }
    }
}

impl BoundedQuery {
    pub fn count() -> Self {
        BoundedQuery::Count {
            n_max: DEFAULT_COUNT_CAP,
        }
    }

    pub fn clipped_mean(field: &str, lower: f64, upper: f64) -> Result<Self> {
        let q = BoundedQuery::ClippedMean {
            field: field.to_string(),
            lower,
            upper,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn histogram(field: &str, edges: Vec<f64>) -> Result<Self> {
        let q = BoundedQuery::Histogram {
            field: field.to_string(),
            edges,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BoundedQuery::Count { n_max } if *n_max == 0 => Err(Error::InvalidQuery(
                "count cap n_max must be positive".into(),
            )),
            BoundedQuery::Count { .. } => Ok(()),
            BoundedQuery::ClippedMean { lower, upper, .. } => {
                if lower.is_finite() && upper.is_finite() && lower < upper {
                    Ok(())
                } else {
                    Err(Error::InvalidQuery(format!(
                        "clipping interval needs lower < upper, got [{lower}, {upper}]"
                    )))
                }
            }
            BoundedQuery::Histogram { edges, .. } => {
                if edges.len() < 2 {
                    return Err(Error::InvalidQuery(
                        "histogram needs at least two edges".into(),
                    ));
                }
                if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidQuery(
                        "histogram edges must be finite and strictly increasing".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            BoundedQuery::Histogram { edges, .. } => edges.len() - 1,
            _ => 1,
        }
    }

    /// The field the query reads, if any.
    pub fn field(&self) -> Option<&str> {
        match self {
            BoundedQuery::Count { .. } => None,
            BoundedQuery::ClippedMean { field, .. } | BoundedQuery::Histogram { field, .. } => {
                Some(field)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub values: Vec<f64>,
    pub lower_bounds: Vec<f64>,
    pub upper_bounds: Vec<f64>,
}

fn bin_index(edges: &[f64], v: f64) -> Option<usize> {
    let last = *edges.last()?;
    if v < edges[0] || v > last {
        return None;
    }
    if v == last {
        return Some(edges.len() - 2);
    }
    Some(edges.partition_point(|&e| e <= v) - 1)
}

pub fn evaluate(dataset: &Dataset, query: &BoundedQuery) -> Result<QueryResult> {
    query.validate()?;
    let n = dataset.len();
    match query {
        BoundedQuery::Count { n_max } => {
            if n as u64 > *n_max {
                return Err(Error::InvalidQuery(format!(
                    "{n} records exceed the count cap {n_max}"
                )));
            }
            Ok(QueryResult {
                values: vec![n as f64],
                lower_bounds: vec![0.0],
                upper_bounds: vec![*n_max as f64],
            })
        }
        BoundedQuery::ClippedMean {
            field,
            lower,
            upper,
        } => {
            let column = dataset.column(field)?;
            if column.is_empty() {
                return Err(Error::EmptyDataset("clipped mean of an empty dataset"));
            }
            let mean = column.iter().map(|v| v.clamp(*lower, *upper)).sum::<f64>() / n as f64;
            // rounding could push the mean a hair outside the interval
            let mean = mean.clamp(*lower, *upper);
            Ok(QueryResult {
                values: vec![mean],
                lower_bounds: vec![*lower],
                upper_bounds: vec![*upper],
            })
        }
        BoundedQuery::Histogram { field, edges } => {
            let column = dataset.column(field)?;
            let bins = edges.len() - 1;
            let mut counts = vec![0.0; bins];
            for v in column {
                if let Some(b) = bin_index(edges, v) {
                    counts[b] += 1.0;
                }
            }
            Ok(QueryResult {
                values: counts,
                lower_bounds: vec![0.0; bins],
                upper_bounds: vec![n as f64; bins],
            })
        }
    }
}

/// Order `p` of an l_p norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormOrder {
    P(f64),
    Infinity,
}

impl NormOrder {
    pub fn new(p: f64) -> Result<Self> {
        if p == f64::INFINITY {
            Ok(NormOrder::Infinity)
        } else if p >= 1.0 && p.is_finite() {
            Ok(NormOrder::P(p))
        } else {
            Err(Error::UnsupportedNorm(p))
        }
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        match *self {
            NormOrder::Infinity => v.iter().fold(0.0, |m, x| m.max(x.abs())),
            NormOrder::P(1.0) => v.iter().map(|x| x.abs()).sum(),
            NormOrder::P(p) => v.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p),
        }
    }
}

fn check_norm(p: NormOrder) -> Result<()> {
    match p {
        NormOrder::P(v) if !(v >= 1.0 && v.is_finite()) => Err(Error::UnsupportedNorm(v)),
        _ => Ok(()),
    }
}

/// Worst-case `||f(D) - f(D')||_p` over all datasets of `n` records and
/// their removal neighbors.
///
/// A removal changes one histogram bin by at most one, so the histogram
/// sensitivity is 1 in every norm.
pub fn global_sensitivity(query: &BoundedQuery, n: usize, p: NormOrder) -> Result<f64> {
    check_norm(p)?;
    query.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("sensitivity needs n >= 1".into()));
    }
    match query {
        BoundedQuery::Count { .. } | BoundedQuery::Histogram { .. } => Ok(1.0),
        BoundedQuery::ClippedMean { lower, upper, .. } => {
            if n < 2 {
                return Err(Error::InvalidParameter(
                    "clipped mean sensitivity needs n >= 2; the neighbor of a single record is empty".into(),
                ));
            }
            Ok((upper - lower) / n as f64)
        }
    }
}

/// Largest `||f(D) - f(D')||_p` over the realized neighbors of `dataset`.
pub fn empirical_sensitivity(dataset: &Dataset, query: &BoundedQuery, p: NormOrder) -> Result<f64> {
    check_norm(p)?;
    if matches!(query, BoundedQuery::ClippedMean { .. }) && dataset.len() < 2 {
        return Err(Error::InvalidParameter(
            "clipped mean sensitivity needs n >= 2".into(),
        ));
    }
    let base = evaluate(dataset, query)?;
    let mut worst = 0.0f64;
    for d in neighbors(dataset) {
        let other = evaluate(&d, query)?;
        let diff: Vec<f64> = base
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        worst = worst.max(p.norm(&diff));
    }
    Ok(worst)
}
