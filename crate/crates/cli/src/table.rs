//! Long-format result tables: `run_id,generation,metric,value,stderr`.
//!
//! Missing or non-finite numbers are written as `NA`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const HEADER: [&str; 5] = ["run_id", "generation", "metric", "value", "stderr"];
pub const NA: &str = "NA";

#[derive(Debug, Error)]
pub enum TableError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("bad header {0:?}")]
    Header(Vec<String>),
    #[error("line {line}: cannot parse `{field}` as {expected}")]
    Field {
        line: u64,
        field: String,
        expected: &'static str,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub run_id: String,
    /// `None` for run-level quantities.
    pub generation: Option<u64>,
    pub metric: String,
    pub value: Option<f64>,
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<Row>,
}

fn finite(x: Option<f64>) -> Option<f64> {
    x.filter(|v| v.is_finite())
}

impl ResultTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(
        &mut self,
        run_id: &str,
        generation: Option<u64>,
        metric: &str,
        value: Option<f64>,
        stderr: Option<f64>,
    ) {
        self.rows.push(Row {
            run_id: run_id.to_owned(),
            generation,
            metric: metric.to_owned(),
            value: finite(value),
            stderr: finite(stderr),
        });
    }

    pub fn extend(&mut self, other: ResultTable) {
        self.rows.extend(other.rows);
    }

    /// Values of one metric ordered by generation.
    pub fn series(&self, run_id: &str, metric: &str) -> Vec<(u64, Option<f64>, Option<f64>)> {
        let mut out: Vec<_> = self
            .rows
            .iter()
            .filter(|r| r.run_id == run_id && r.metric == metric)
            .filter_map(|r| r.generation.map(|g| (g, r.value, r.stderr)))
            .collect();
        out.sort_by_key(|x| x.0);
        out
    }

    pub fn scalar(&self, run_id: &str, metric: &str) -> Option<&Row> {
        self.rows
            .iter()
            .find(|r| r.run_id == run_id && r.metric == metric && r.generation.is_none())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), TableError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.run_id.clone(),
                r.generation.map_or_else(|| NA.to_owned(), |g| g.to_string()),
                r.metric.clone(),
                number(r.value),
                number(r.stderr),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, TableError> {
        let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header: Vec<String> = rd.headers()?.iter().map(str::to_owned).collect();
        if header != HEADER {
            return Err(TableError::Header(header));
        }
        let mut table = ResultTable::new();
        for rec in rd.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            let field = |i: usize| rec.get(i).unwrap_or("");
            let generation = match field(1) {
                NA => None,
                g => Some(g.parse().map_err(|_| TableError::Field {
                    line,
                    field: g.to_owned(),
                    expected: "an integer or NA",
                })?),
            };
            let parse_num = |s: &str| -> Result<Option<f64>, TableError> {
                match s {
                    NA => Ok(None),
                    v => v.parse().map(Some).map_err(|_| TableError::Field {
                        line,
                        field: v.to_owned(),
                        expected: "a number or NA",
                    }),
                }
            };
            table.rows.push(Row {
                run_id: field(0).to_owned(),
                generation,
                metric: field(2).to_owned(),
                value: parse_num(field(3))?,
                stderr: parse_num(field(4))?,
            });
        }
        Ok(table)
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<(), TableError> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

/// Shortest decimal that reads back to the same `f64`.
fn number(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => format!("{v:?}"),
        _ => NA.to_owned(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_is_header_only() {
        assert_eq!(ResultTable::new().to_csv_string(), "run_id,generation,metric,value,stderr\n");
    }

    #[test]
    fn sentinels_are_na() {
        let mut t = ResultTable::new();
        t.push("r", Some(1), "sigma", Some(f64::NAN), None);
        t.push("r", None, "g_n", Some(f64::INFINITY), Some(0.5));
        let s = t.to_csv_string();
        assert_eq!(
            s,
            "run_id,generation,metric,value,stderr\nr,1,sigma,NA,NA\nr,NA,g_n,NA,0.5\n"
        );
        assert!(!s.contains("NaN") && !s.contains("inf") && !s.contains('\r'));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut t = ResultTable::new();
        let awkward = [0.1 + 0.2, 1e-300, 5e-324, 123456789.123456789, -0.0, 1.0 / 3.0];
        for (i, v) in awkward.into_iter().enumerate() {
            t.push("abc", Some(i as u64), "m,with comma", Some(v), Some(v / 7.0));
        }
        t.push("abc", None, "scalar", None, None);
        let back = ResultTable::read_csv(t.to_csv_string().as_bytes()).unwrap();
        assert_eq!(back, t);
        for (a, b) in back.rows.iter().zip(&t.rows) {
            assert_eq!(a.value.map(f64::to_bits), b.value.map(f64::to_bits));
        }
    }

    #[test]
    fn bad_header_rejected() {
        assert!(matches!(
            ResultTable::read_csv("a,b\n1,2\n".as_bytes()),
            Err(TableError::Header(_))
        ));
    }
}
