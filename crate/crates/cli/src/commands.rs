use anyhow::{anyhow, Context, Result};
use fdareg::diagnostics::{distance_quantiles, small_ball_profile};
use fdareg::estimator::loo_cv_select;
use fdareg::forecast::{build_daily_dataset, ingest_hourly_path, rolling_forecast, RollingConfig};
use fdareg::rng::CounterRng;
use fdareg::semimetric::fit_pca_basis;
use fdareg::simulate::{gen_dgp, rate_check, run_monte_carlo};
use fdareg::{FunctionalSample, SemimetricSpec};
use serde_json::json;

use crate::artifacts::Artifacts;
use crate::config::RunConfig;

fn alpha_label(alpha: f64) -> String {
    format!("{alpha:.4}")
}

pub fn simulate(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let sim = &cfg.simulate;
    let estimators = [cfg.flc_spec(), cfg.fll_spec()];
    for &alpha in &sim.alphas {
        let label = alpha_label(alpha);
        // the same base seed for every alpha keeps the curve draws common
        let dgp = sim.dgp(sim.n, alpha, cfg.seed)?;
        let result = match run_monte_carlo(&dgp, sim.replicates, &estimators) {
            Ok(r) => r,
            Err(e) => {
                out.fail(&format!("mc_alpha{label}.csv"), e.into());
                continue;
            }
        };
        let summary = result.summary();
        for s in &summary {
            eprintln!(
                "alpha={label} {}: median MSPE {:.6} (IQR {:.6}), {} ok, {} failed",
                s.estimator, s.median, s.iqr, s.replicates_ok, s.replicates_failed
            );
        }
        out.csv(&format!("mc_alpha{label}.csv"), |w| {
            result.write_csv(w, true)
        });
        let failures: Vec<_> = result
            .rows
            .iter()
            .filter_map(|r| {
                r.failure.as_ref().map(
                    |f| json!({"replicate": r.replicate, "estimator": r.estimator, "error": f}),
                )
            })
            .collect();
        let fll_below_flc = result.median_mspe("FLL") < result.median_mspe("FLC");
        out.json(
            &format!("summary_alpha{label}.json"),
            Ok(json!({
                "alpha": alpha,
                "n": sim.n,
                "replicates": sim.replicates,
                "estimators": summary,
                "fll_median_below_flc": fll_below_flc,
                "failures": failures,
            })),
        );
    }
    Ok(())
}

pub fn ratecheck(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let rc = &cfg.ratecheck;
    for &alpha in &rc.alphas {
        let label = alpha_label(alpha);
        let template = cfg.simulate.dgp(rc.n[0], alpha, cfg.seed)?;
        let reports: Result<Vec<_>> = rc
            .methods
            .iter()
            .map(|m| {
                let report = rate_check(&rc.n, &template, &cfg.spec_for(*m), rc.replicates)?;
                eprintln!(
                    "alpha={label} {}: medians {:?}, slope {:.4}",
                    report.estimator, report.median_mspe, report.slope
                );
                Ok(report)
            })
            .collect();
        out.json(
            &format!("ratecheck_alpha{label}.json"),
            reports.map(|r| json!({"alpha": alpha, "replicates": rc.replicates, "reports": r})),
        );
    }
    Ok(())
}

pub fn forecast(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let fc = &cfg.forecast;
    let input = cfg.require_input(&fc.input, "forecast.input")?;
    let ingested = ingest_hourly_path(&input, &fc.ingest)
        .with_context(|| format!("ingesting {}", input.display()))?;
    let s = &ingested.summary;
    eprintln!(
        "ingest: {} rows read, {} unparseable, {} nonpositive, {} duplicates merged, {} hourly records",
        s.rows_read, s.unparseable, s.rejected_nonpositive, s.duplicates_merged, s.records
    );
    let build = build_daily_dataset(&ingested.records)?;
    let ds = &build.summary;
    eprintln!(
        "days: {} seen, {} complete, {} dropped, {} pairs",
        ds.days_seen, ds.complete_days, ds.dropped_days, ds.pairs
    );
    let rolling_cfg = RollingConfig {
        window: fc.window,
        cv_refresh: fc.cv_refresh,
        flc: cfg.flc_spec().cv,
        fll: cfg.fll_spec().cv,
    };
    let outcome = rolling_forecast(&build.dataset, &rolling_cfg)?;
    eprintln!(
        "T={} W={} T_out={} failures={} dropped_days={}",
        outcome.t_pairs,
        outcome.window,
        outcome.t_out(),
        outcome.failures(),
        ds.dropped_days
    );
    for epoch in &outcome.epochs {
        for e in &epoch.errors {
            eprintln!("tuning at target {}: {e}", epoch.first_target);
        }
    }

    out.csv("forecasts.csv", |w| outcome.write_forecasts_csv(w));
    out.csv("csfe.csv", |w| outcome.write_csfe_csv(w));
    let gw = outcome.gw().map_err(anyhow::Error::from).map(|gw| {
        json!({
            "t_pairs": outcome.t_pairs,
            "window": outcome.window,
            "t_out": outcome.t_out(),
            "forecast_failures": outcome.failures(),
            "ingest": s,
            "days": ds,
            "level": fc.gw_level,
            "favors_fll": gw.favors_fll(fc.gw_level),
            "gw": gw,
            "epochs": outcome.epochs,
        })
    });
    out.json("gw.json", gw);
    Ok(())
}

pub fn cv(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let input = cfg.require_input(&cfg.cv.input, "cv.input")?;
    let sample = FunctionalSample::read_csv_path(&input)?;
    let mut selected = Vec::new();
    for m in &cfg.cv.methods {
        let spec = cfg.spec_for(*m);
        let name = format!("cv_table_{}.csv", spec.name.to_lowercase());
        match loo_cv_select(&sample, &spec.cv) {
            Ok(outcome) => {
                eprintln!(
                    "{}: h={} d={:?} score={}",
                    spec.name, outcome.best.h, outcome.best.d_spec, outcome.best_score
                );
                out.csv(&name, |w| outcome.write_table_csv(w));
                selected.push(json!({
                    "method": spec.name,
                    "cv_score": outcome.best_score,
                    "config": outcome.best,
                }));
            }
            Err(e) => out.fail(&name, anyhow!("{}: {e}", spec.name)),
        }
    }
    out.json(
        "cv_selected.json",
        Ok(json!({"n": sample.len(), "selected": selected})),
    );
    Ok(())
}

pub fn diagnose(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let dg = &cfg.diagnose;
    let sample = match &dg.input {
        Some(p) => FunctionalSample::read_csv_path(&cfg.resolve(p))?,
        None => {
            let dgp = cfg
                .simulate
                .dgp(cfg.simulate.n, cfg.simulate.alphas[0], cfg.seed)?;
            gen_dgp(&dgp, &mut CounterRng::new(cfg.seed))?.sample
        }
    };
    anyhow::ensure!(
        dg.center < sample.len(),
        "diagnose.center {} out of range for {} curves",
        dg.center,
        sample.len()
    );
    let basis = fit_pca_basis(&sample, dg.r)?;
    let d_spec = SemimetricSpec::Pca { r: dg.r };
    let quantiles = distance_quantiles(&sample, &d_spec, &basis, &dg.quantiles)?;
    let top = distance_quantiles(&sample, &d_spec, &basis, &[1.0])?[0];
    anyhow::ensure!(top > 0.0, "all pairwise distances are zero");
    let radii: Vec<f64> = (1..=dg.radii)
        .map(|k| top * k as f64 / dg.radii as f64)
        .collect();
    let profile = small_ball_profile(
        &sample.curves()[dg.center],
        &sample,
        &d_spec,
        &basis,
        &radii,
    )?;
    out.csv("ball_profile.csv", |w| profile.write_csv(w));
    out.json(
        "quantiles.json",
        Ok(json!({
            "n": sample.len(),
            "r": dg.r,
            "eigenvalues": basis.eigenvalues(),
            "levels": dg.quantiles,
            "quantiles": quantiles,
        })),
    );
    Ok(())
}
