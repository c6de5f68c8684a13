//! Rolling-window one-step-ahead forecasts with FLC and FLL.
//!
//! Target pair `t` (for `t = W..T`) is forecast from the `W` pairs `t − W..t`
//! using the curve of pair `t`, which is observed by the end of its covariate
//! day. Tuning runs once per epoch of `cv_refresh` consecutive targets, on the
//! window of the epoch's first target; the PCA basis is refit on every window.

use std::io::Write;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::daily::DailyDataset;
use super::evaluation::{csfe, gw_test, CsfeSeries, GwResult};
use crate::error::{invalid, Error, Result};
use crate::estimator::{loo_cv_select, CvSpec, EstimatorConfig, Method, PreparedSample};
use crate::semimetric::fit_pca_basis;

pub const MIN_WINDOW: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollingConfig {
    pub window: usize,
    pub cv_refresh: usize,
    pub flc: CvSpec,
    pub fll: CvSpec,
}

impl Default for RollingConfig {
    fn default() -> Self {
        Self {
            window: 1081,
            cv_refresh: 250,
            flc: CvSpec::new(Method::Flc),
            fll: CvSpec::new(Method::Fll),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForecastRow {
    /// Pair index of the forecast target.
    pub index: usize,
    /// Day whose log total load is forecast.
    pub date: NaiveDate,
    pub y: f64,
    pub yhat_flc: Option<f64>,
    pub yhat_fll: Option<f64>,
}

impl ForecastRow {
    pub fn loss_flc(&self) -> Option<f64> {
        self.yhat_flc.map(|v| (v - self.y) * (v - self.y))
    }

    pub fn loss_fll(&self) -> Option<f64> {
        self.yhat_fll.map(|v| (v - self.y) * (v - self.y))
    }

    pub fn is_complete(&self) -> bool {
        self.yhat_flc.is_some() && self.yhat_fll.is_some()
    }
}

/// Tuned configurations shared by the targets of one refresh epoch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuningEpoch {
    pub first_target: usize,
    pub flc: Option<EstimatorConfig>,
    pub fll: Option<EstimatorConfig>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RollingOutcome {
    pub t_pairs: usize,
    pub window: usize,
    pub rows: Vec<ForecastRow>,
    pub epochs: Vec<TuningEpoch>,
}

impl RollingOutcome {
    /// Number of forecasts, `T_pairs − W`.
    pub fn t_out(&self) -> usize {
        self.rows.len()
    }

    /// Rows where at least one method failed to produce a forecast.
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.is_complete()).count()
    }

    fn complete(&self) -> impl Iterator<Item = &ForecastRow> {
        self.rows.iter().filter(|r| r.is_complete())
    }

    /// Losses `(flc, fll)` over rows where both methods forecast.
    pub fn complete_losses(&self) -> (Vec<f64>, Vec<f64>) {
        self.complete()
            .map(|r| (r.loss_flc().unwrap(), r.loss_fll().unwrap()))
            .unzip()
    }

    pub fn csfe(&self) -> Result<CsfeSeries> {
        let (flc, fll) = self.complete_losses();
        csfe(&flc, &fll)
    }

    pub fn gw(&self) -> Result<GwResult> {
        let (flc, fll) = self.complete_losses();
        gw_test(&fll, &flc)
    }

    /// CSV `date,y,yhat_flc,yhat_fll,loss_flc,loss_fll`; failed forecasts are empty.
    pub fn write_forecasts_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["date", "y", "yhat_flc", "yhat_fll", "loss_flc", "loss_fll"])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            out.write_record([
                r.date.to_string(),
                r.y.to_string(),
                opt(r.yhat_flc),
                opt(r.yhat_fll),
                opt(r.loss_flc()),
                opt(r.loss_fll()),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// CSV `index,date,csfe` over complete rows; `index` counts from 1.
    pub fn write_csfe_csv<W: Write>(&self, writer: W) -> Result<()> {
        let series = self.csfe()?;
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["index", "date", "csfe"])?;
        for (k, (row, value)) in self.complete().zip(series.values()).enumerate() {
            out.write_record([(k + 1).to_string(), row.date.to_string(), value.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn tune(
    data: &DailyDataset,
    start: usize,
    window: usize,
    spec: &CvSpec,
) -> Result<EstimatorConfig> {
    let sample = data.sample(start - window..start)?;
    Ok(loo_cv_select(&sample, spec)?.best)
}

fn forecast_one(
    data: &DailyDataset,
    t: usize,
    window: usize,
    configs: [Option<&EstimatorConfig>; 2],
) -> Result<[Option<f64>; 2]> {
    let sample = data.sample(t - window..t)?;
    let dim = configs
        .iter()
        .flatten()
        .map(|c| c.score_dimension())
        .max()
        .unwrap_or(1)
        .max(1);
    let basis = fit_pca_basis(&sample, dim)?;
    let mut out = [None, None];
    for (slot, cfg) in out.iter_mut().zip(configs) {
        if let Some(cfg) = cfg {
            let prepared = PreparedSample::new(&sample, &basis, *cfg)?;
            *slot = prepared.predict(&data.curves[t], None)?.value;
        }
    }
    Ok(out)
}

pub fn rolling_forecast(data: &DailyDataset, cfg: &RollingConfig) -> Result<RollingOutcome> {
    let t_pairs = data.len();
    let w = cfg.window;
    if w < MIN_WINDOW {
        return Err(invalid(format!(
            "window must be at least {MIN_WINDOW}, got {w}"
        )));
    }
    if w >= t_pairs {
        return Err(Error::DatasetTooSmall {
            usable: t_pairs,
            required: w + 1,
        });
    }
    if cfg.cv_refresh == 0 {
        return Err(invalid("cv_refresh must be positive"));
    }

    let epoch_starts: Vec<usize> = (w..t_pairs).step_by(cfg.cv_refresh).collect();
    let epochs: Vec<TuningEpoch> = epoch_starts
        .par_iter()
        .map(|&start| {
            let mut errors = Vec::new();
            let mut run = |spec: &CvSpec| match tune(data, start, w, spec) {
                Ok(c) => Some(c),
                Err(e) => {
                    errors.push(format!("{}: {e}", spec.method));
                    None
                }
            };
            let flc = run(&cfg.flc);
            let fll = run(&cfg.fll);
            TuningEpoch {
                first_target: start,
                flc,
                fll,
                errors,
            }
        })
        .collect();

    let rows = (w..t_pairs)
        .into_par_iter()
        .map(|t| {
            let epoch = &epochs[(t - w) / cfg.cv_refresh];
            let [flc, fll] = forecast_one(data, t, w, [epoch.flc.as_ref(), epoch.fll.as_ref()])?;
            Ok(ForecastRow {
                index: t,
                date: data.target_date(t),
                y: data.responses[t],
                yhat_flc: flc,
                yhat_fll: fll,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(RollingOutcome {
        t_pairs,
        window: w,
        rows,
        epochs,
    })
}
