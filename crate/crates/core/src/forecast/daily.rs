//! Daily functional covariates from hourly loads.
//!
//! Day `d` contributes the curve of its 24 log-loads; its response is the log of
//! the total load of day `d + 1`. A pair exists only when both days carry all
//! 24 hours.

use std::collections::BTreeMap;
use std::sync::Arc;

use chrono::{Days, NaiveDate, Timelike};
use serde::Serialize;

use super::ingest::HourlyRecord;
use crate::curve::{make_uniform_grid, Curve, FunctionalSample, Grid};
use crate::error::{Error, Result};

pub const HOURS_PER_DAY: usize = 24;

#[derive(Debug, Clone)]
pub struct DailyDataset {
    /// Covariate day of each pair; the response belongs to the following day.
    pub dates: Vec<NaiveDate>,
    pub curves: Vec<Curve>,
    pub responses: Vec<f64>,
    pub grid: Arc<Grid>,
}

impl DailyDataset {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Day whose total load is the response of pair `k`.
    pub fn target_date(&self, k: usize) -> NaiveDate {
        self.dates[k] + Days::new(1)
    }

    /// Pairs `range` as a functional sample.
    pub fn sample(&self, range: std::ops::Range<usize>) -> Result<FunctionalSample> {
        FunctionalSample::new(
            self.curves[range.clone()].to_vec(),
            self.responses[range].to_vec(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DailySummary {
    pub days_seen: usize,
    pub complete_days: usize,
    /// Days lacking exactly one observation for each of the 24 hours.
    pub dropped_days: usize,
    pub pairs: usize,
}

#[derive(Debug, Clone)]
pub struct DailyBuild {
    pub dataset: DailyDataset,
    pub summary: DailySummary,
}

/// Groups sorted hourly records into complete days and pairs consecutive ones.
pub fn build_daily_dataset(records: &[HourlyRecord]) -> Result<DailyBuild> {
    let mut days: BTreeMap<NaiveDate, Vec<Option<f64>>> = BTreeMap::new();
    let mut broken: BTreeMap<NaiveDate, bool> = BTreeMap::new();
    for rec in records {
        let date = rec.timestamp.date();
        let hours = days
            .entry(date)
            .or_insert_with(|| vec![None; HOURS_PER_DAY]);
        let ts = rec.timestamp;
        let slot = &mut hours[ts.hour() as usize];
        if slot.is_some() || ts.minute() != 0 || ts.second() != 0 {
            broken.insert(date, true);
        }
        *slot = Some(rec.load);
    }
    let complete: BTreeMap<NaiveDate, Vec<f64>> = days
        .iter()
        .filter(|(d, _)| !broken.contains_key(*d))
        .filter_map(|(d, hours)| {
            hours
                .iter()
                .copied()
                .collect::<Option<Vec<f64>>>()
                .map(|v| (*d, v))
        })
        .collect();

    let grid = Arc::new(make_uniform_grid(HOURS_PER_DAY)?);
    let mut dates = Vec::new();
    let mut curves = Vec::new();
    let mut responses = Vec::new();
    for (date, loads) in &complete {
        let next = *date + Days::new(1);
        if let Some(next_loads) = complete.get(&next) {
            let logs = loads.iter().map(|v| v.ln()).collect();
            dates.push(*date);
            curves.push(Curve::new(Arc::clone(&grid), logs)?);
            responses.push(next_loads.iter().sum::<f64>().ln());
        }
    }
    if dates.is_empty() {
        return Err(Error::DatasetTooSmall {
            usable: 0,
            required: 1,
        });
    }
    let summary = DailySummary {
        days_seen: days.len(),
        complete_days: complete.len(),
        dropped_days: days.len() - complete.len(),
        pairs: dates.len(),
    };
    Ok(DailyBuild {
        dataset: DailyDataset {
            dates,
            curves,
            responses,
            grid,
        },
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDateTime;

    fn day(date: &str, hours: impl Iterator<Item = u32>, load: f64) -> Vec<HourlyRecord> {
        hours
            .map(|h| HourlyRecord {
                timestamp: NaiveDateTime::parse_from_str(
                    &format!("{date} {h:02}:00:00"),
                    "%Y-%m-%d %H:%M:%S",
                )
                .unwrap(),
                load,
            })
            .collect()
    }

    #[test]
    fn constant_e_loads() {
        let e = std::f64::consts::E;
        let mut recs = day("2021-03-01", 0..24, e);
        recs.extend(day("2021-03-02", 0..24, e));
        let out = build_daily_dataset(&recs).unwrap();
        assert_eq!(out.dataset.len(), 1);
        assert!(out.dataset.curves[0]
            .values()
            .iter()
            .all(|v| (*v - 1.0).abs() < 1e-15));
        let expected = 1.0 + 24f64.ln();
        assert!((out.dataset.responses[0] - expected).abs() < 1e-12);
        assert!((expected - 4.178).abs() < 1e-3);
        assert_eq!(out.dataset.grid.len(), 24);
    }

    #[test]
    fn three_days_two_pairs() {
        let mut recs = Vec::new();
        for d in ["2021-03-01", "2021-03-02", "2021-03-03"] {
            recs.extend(day(d, 0..24, 10.0));
        }
        let out = build_daily_dataset(&recs).unwrap();
        assert_eq!(out.dataset.len(), 2);
        assert_eq!(out.dataset.target_date(1).to_string(), "2021-03-03");
    }

    #[test]
    fn short_day_is_dropped() {
        let mut recs = day("2021-03-13", 0..24, 10.0);
        recs.extend(day("2021-03-14", (0..24).filter(|h| *h != 2), 10.0));
        recs.extend(day("2021-03-15", 0..24, 10.0));
        recs.extend(day("2021-03-16", 0..24, 10.0));
        let out = build_daily_dataset(&recs).unwrap();
        assert_eq!(out.summary.dropped_days, 1);
        assert_eq!(out.dataset.len(), 1);
        assert_eq!(out.dataset.dates[0].to_string(), "2021-03-15");
    }

    #[test]
    fn too_small() {
        let recs = day("2021-03-01", 0..24, 10.0);
        assert!(matches!(
            build_daily_dataset(&recs),
            Err(Error::DatasetTooSmall { .. })
        ));
    }
}
