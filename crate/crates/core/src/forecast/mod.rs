//! Day-ahead load forecasting with functional covariates.
//!
//! Pipeline: [`ingest_hourly_csv`] → [`build_daily_dataset`] →
//! [`rolling_forecast`] → [`csfe`] / [`gw_test`].

mod daily;
mod evaluation;
mod ingest;
mod rolling;

pub use daily::{build_daily_dataset, DailyBuild, DailyDataset, DailySummary, HOURS_PER_DAY};
pub use evaluation::{csfe, gw_test, CsfeSeries, GwResult, GW_MIN_LENGTH};
pub use ingest::{
    ingest_hourly_csv, ingest_hourly_path, HourlyRecord, IngestOptions, IngestSummary, Ingested,
};
pub use rolling::{
    rolling_forecast, ForecastRow, RollingConfig, RollingOutcome, TuningEpoch, MIN_WINDOW,
};
