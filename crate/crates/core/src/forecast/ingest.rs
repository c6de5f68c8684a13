//! Hourly load CSV ingestion.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HourlyRecord {
    pub timestamp: NaiveDateTime,
    /// Load in MW; always positive.
    pub load: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IngestOptions {
    pub datetime_column: String,
    pub load_column: String,
    pub datetime_format: String,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            datetime_column: "Datetime".into(),
            load_column: "AEP_MW".into(),
            datetime_format: "%Y-%m-%d %H:%M:%S".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestSummary {
    pub rows_read: usize,
    pub unparseable: usize,
    pub rejected_nonpositive: usize,
    /// Rows folded into an earlier row with the same timestamp.
    pub duplicates_merged: usize,
    pub records: usize,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    /// Sorted by timestamp, one per distinct timestamp.
    pub records: Vec<HourlyRecord>,
    pub summary: IngestSummary,
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim() == name)
}

/// Reads `datetime,load` rows. Rows sharing a timestamp are averaged; rows that
/// fail to parse or carry a nonpositive load are dropped and counted.
///
/// When the configured column names are absent from a two-column header, the
/// columns are taken positionally.
pub fn ingest_hourly_csv<R: Read>(reader: R, opts: &IngestOptions) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(Error::Ingest("input is empty".into()));
    }
    let (dt_col, load_col) = match (
        column_index(&headers, &opts.datetime_column),
        column_index(&headers, &opts.load_column),
    ) {
        (Some(a), Some(b)) => (a, b),
        _ if headers.len() == 2 => (0, 1),
        _ => {
            return Err(Error::Ingest(format!(
                "header lacks columns {:?} and {:?}",
                opts.datetime_column, opts.load_column
            )))
        }
    };

    let mut rows_read = 0;
    let mut unparseable = 0;
    let mut rejected = 0;
    let mut merged = 0;
    let mut acc: BTreeMap<NaiveDateTime, (f64, usize)> = BTreeMap::new();
    for record in rdr.records() {
        rows_read += 1;
        let Ok(record) = record else {
            unparseable += 1;
            continue;
        };
        let ts = record
            .get(dt_col)
            .and_then(|s| NaiveDateTime::parse_from_str(s, &opts.datetime_format).ok());
        let load = record.get(load_col).and_then(|s| s.parse::<f64>().ok());
        let (Some(ts), Some(load)) = (ts, load) else {
            unparseable += 1;
            continue;
        };
        if !load.is_finite() {
            unparseable += 1;
            continue;
        }
        if load <= 0.0 {
            rejected += 1;
            continue;
        }
        let slot = acc.entry(ts).or_insert((0.0, 0));
        if slot.1 > 0 {
            merged += 1;
        }
        slot.0 += load;
        slot.1 += 1;
    }
    if rows_read == 0 {
        return Err(Error::Ingest("input has no data rows".into()));
    }
    let records: Vec<HourlyRecord> = acc
        .into_iter()
        .map(|(timestamp, (sum, count))| HourlyRecord {
            timestamp,
            load: sum / count as f64,
        })
        .collect();
    if records.is_empty() {
        return Err(Error::Ingest(format!(
            "no usable rows ({unparseable} unparseable, {rejected} nonpositive)"
        )));
    }
    Ok(Ingested {
        summary: IngestSummary {
            rows_read,
            unparseable,
            rejected_nonpositive: rejected,
            duplicates_merged: merged,
            records: records.len(),
        },
        records,
    })
}

pub fn ingest_hourly_path(path: &Path, opts: &IngestOptions) -> Result<Ingested> {
    let file = std::fs::File::open(path)?;
    ingest_hourly_csv(file, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feed(rows: &[(&str, &str)]) -> String {
        let mut s = String::from("Datetime,AEP_MW\n");
        for (t, v) in rows {
            s.push_str(&format!("{t},{v}\n"));
        }
        s
    }

    #[test]
    fn clean_two_days() {
        let mut rows = Vec::new();
        for day in 1..=2 {
            for h in 0..24 {
                rows.push((format!("2020-01-0{day} {h:02}:00:00"), "100".to_string()));
            }
        }
        let refs: Vec<(&str, &str)> = rows.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let out = ingest_hourly_csv(feed(&refs).as_bytes(), &IngestOptions::default()).unwrap();
        assert_eq!(out.records.len(), 48);
        assert!(out
            .records
            .windows(2)
            .all(|w| w[0].timestamp < w[1].timestamp));
    }

    #[test]
    fn duplicates_are_averaged_and_sorted() {
        let text = feed(&[
            ("2020-11-01 02:00:00", "102"),
            ("2020-11-01 01:00:00", "100"),
            ("2020-11-01 01:00:00", "102"),
        ]);
        let out = ingest_hourly_csv(text.as_bytes(), &IngestOptions::default()).unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.records[0].load, 101.0);
        assert_eq!(out.summary.duplicates_merged, 1);
    }

    #[test]
    fn nonpositive_and_garbage_rows() {
        let text = feed(&[
            ("2020-01-01 00:00:00", "0"),
            ("2020-01-01 01:00:00", "-4"),
            ("not a date", "5"),
            ("2020-01-01 02:00:00", "abc"),
            ("2020-01-01 03:00:00", "7"),
        ]);
        let out = ingest_hourly_csv(text.as_bytes(), &IngestOptions::default()).unwrap();
        assert_eq!(out.summary.rejected_nonpositive, 2);
        assert_eq!(out.summary.unparseable, 2);
        assert_eq!(out.records.len(), 1);

        let only_zero = feed(&[("2020-01-01 00:00:00", "0")]);
        let err = ingest_hourly_csv(only_zero.as_bytes(), &IngestOptions::default());
        assert!(matches!(err, Err(Error::Ingest(_))));
    }

    #[test]
    fn empty_input() {
        assert!(matches!(
            ingest_hourly_csv("".as_bytes(), &IngestOptions::default()),
            Err(Error::Ingest(_))
        ));
        assert!(matches!(
            ingest_hourly_csv("Datetime,AEP_MW\n".as_bytes(), &IngestOptions::default()),
            Err(Error::Ingest(_))
        ));
    }

    #[test]
    fn custom_and_positional_columns() {
        let text = "when,extra,PJM\n2020-01-01 00:00:00,x,5\n";
        let opts = IngestOptions {
            datetime_column: "when".into(),
            load_column: "PJM".into(),
            ..Default::default()
        };
        assert_eq!(
            ingest_hourly_csv(text.as_bytes(), &opts)
                .unwrap()
                .records
                .len(),
            1
        );
        assert!(ingest_hourly_csv(text.as_bytes(), &IngestOptions::default()).is_err());
        let two = "ts,mw\n2020-01-01 00:00:00,5\n";
        assert_eq!(
            ingest_hourly_csv(two.as_bytes(), &IngestOptions::default())
                .unwrap()
                .records
                .len(),
            1
        );
    }
}
