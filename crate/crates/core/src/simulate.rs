//! Wiener-process data generation and the Monte Carlo MSPE study.
//!
//! Curves are truncated Karhunen-Loève expansions of standard Brownian motion,
//! `χ(t) = Σ_{j ≤ J} v_j(t) N_j` with `v_j(t) = √2 sin((j − ½)πt)` and
//! independent `N_j ~ N(0, λ_j)`, `λ_j = ((j − ½)π)⁻²`. Responses are
//! `Y_i = m(χ_i) + ε_i` with stationary AR(1) errors.
//!
//! The default regression function is `m(χ) = sqrt(|N_1 + N_2|)`: the square
//! root of the raw score sum is undefined whenever the sum is negative, so the
//! absolute value is taken.

use std::f64::consts::{PI, SQRT_2};
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::statistics::{Data, Median, OrderStatistics};

use crate::curve::{Curve, FunctionalSample, Grid};
use crate::error::{invalid, Result};
use crate::estimator::{loo_cv_select, CvSpec, Method, PreparedSample};
use crate::rng::CounterRng;

/// `v_j(t) = √2 sin((j − ½)πt)`.
pub fn kl_eigenfunction(j: usize, t: f64) -> f64 {
    assert!(j >= 1, "eigenfunction index starts at 1");
    SQRT_2 * ((j as f64 - 0.5) * PI * t).sin()
}

/// `λ_j = ((j − ½)π)⁻²`.
pub fn kl_eigenvalue(j: usize) -> f64 {
    assert!(j >= 1, "eigenvalue index starts at 1");
    let a = (j as f64 - 0.5) * PI;
    1.0 / (a * a)
}

/// Truncated Karhunen-Loève expansion on a fixed grid, with the eigenfunction
/// table evaluated once.
#[derive(Debug, Clone)]
pub struct WienerConfig {
    grid: Arc<Grid>,
    truncation: usize,
    /// `table[k][j] = v_{j+1}(t_k)`
    table: Vec<Vec<f64>>,
    score_sd: Vec<f64>,
}

impl WienerConfig {
    pub fn new(grid: Arc<Grid>, truncation: usize) -> Result<Self> {
        if truncation == 0 {
            return Err(invalid("KL truncation must be at least 1"));
        }
        let table = grid
            .points()
            .iter()
            .map(|&t| (1..=truncation).map(|j| kl_eigenfunction(j, t)).collect())
            .collect();
        let score_sd = (1..=truncation).map(|j| kl_eigenvalue(j).sqrt()).collect();
        Ok(Self {
            grid,
            truncation,
            table,
            score_sd,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// `Σ_j v_j(t_k) N_j` at every grid point.
    pub fn curve_from_scores(&self, scores: &[f64]) -> Result<Curve> {
        if scores.len() != self.truncation {
            return Err(invalid(format!(
                "expected {} scores, got {}",
                self.truncation,
                scores.len()
            )));
        }
        let values = self
            .table
            .iter()
            .map(|row| row.iter().zip(scores).map(|(v, n)| v * n).sum())
            .collect();
        Curve::new(Arc::clone(&self.grid), values)
    }

    /// Variance of the truncated expansion at `t`: `Σ_j 2 sin²((j − ½)πt) λ_j`.
    pub fn truncated_variance(&self, t: f64) -> f64 {
        (1..=self.truncation)
            .map(|j| kl_eigenfunction(j, t).powi(2) * kl_eigenvalue(j))
            .sum()
    }
}

/// One Wiener path and its scores `N_1..N_J`.
pub fn sample_wiener(cfg: &WienerConfig, rng: &mut CounterRng) -> (Curve, Vec<f64>) {
    let scores: Vec<f64> = cfg
        .score_sd
        .iter()
        .map(|sd| sd * rng.standard_normal())
        .collect();
    let curve = cfg
        .curve_from_scores(&scores)
        .expect("score count matches truncation");
    (curve, scores)
}

/// Stationary AR(1) series `ε_i = α ε_{i−1} + u_i`, `u_i ~ N(0, var_u)`, with
/// `ε_0` drawn from the stationary law `N(0, var_u / (1 − α²))`.
pub fn gen_ar1(n: usize, alpha: f64, var_u: f64, rng: &mut CounterRng) -> Result<Vec<f64>> {
    if alpha.is_nan() || alpha.abs() >= 1.0 {
        return Err(invalid(format!(
            "AR coefficient must satisfy |alpha| < 1, got {alpha}"
        )));
    }
    if !(var_u >= 0.0 && var_u.is_finite()) {
        return Err(invalid(
            "innovation variance must be finite and nonnegative",
        ));
    }
    let sd_u = var_u.sqrt();
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return Ok(out);
    }
    let mut eps = rng.standard_normal() * (var_u / (1.0 - alpha * alpha)).sqrt();
    out.push(eps);
    for _ in 1..n {
        eps = alpha * eps + sd_u * rng.standard_normal();
        out.push(eps);
    }
    Ok(out)
}

/// The regression function of the simulated design.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegressionTarget {
    /// `m = sqrt(|N_1 + N_2|)`
    #[default]
    SqrtAbsFirstTwo,
    Constant {
        value: f64,
    },
}

impl RegressionTarget {
    pub fn eval(&self, scores: &[f64]) -> f64 {
        match *self {
            RegressionTarget::SqrtAbsFirstTwo => (scores[0] + scores[1]).abs().sqrt(),
            RegressionTarget::Constant { value } => value,
        }
    }

    fn min_truncation(&self) -> usize {
        match self {
            RegressionTarget::SqrtAbsFirstTwo => 2,
            RegressionTarget::Constant { .. } => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DgpConfig {
    pub n: usize,
    pub ar_alpha: f64,
    /// Innovation variance of the AR(1) errors; 0 gives noise-free responses.
    pub u_variance: f64,
    pub wiener: WienerConfig,
    pub target: RegressionTarget,
    pub seed: u64,
}

impl DgpConfig {
    /// The simulated design on a `p`-point uniform grid with `J = truncation`.
    pub fn standard(
        n: usize,
        ar_alpha: f64,
        p: usize,
        truncation: usize,
        seed: u64,
    ) -> Result<Self> {
        let grid = Arc::new(crate::curve::make_uniform_grid(p)?);
        Ok(Self {
            n,
            ar_alpha,
            u_variance: 0.01,
            wiener: WienerConfig::new(grid, truncation)?,
            target: RegressionTarget::default(),
            seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("sample size must be positive"));
        }
        if self.ar_alpha.is_nan() || self.ar_alpha.abs() >= 1.0 {
            return Err(invalid("AR coefficient must satisfy |alpha| < 1"));
        }
        if !(self.u_variance >= 0.0 && self.u_variance.is_finite()) {
            return Err(invalid(
                "innovation variance must be finite and nonnegative",
            ));
        }
        if self.wiener.truncation() < self.target.min_truncation() {
            return Err(invalid("KL truncation too small for the regression target"));
        }
        Ok(())
    }
}

/// A simulated sample with the true regression values `m(χ_i)`.
#[derive(Debug, Clone)]
pub struct SimulatedSample {
    pub sample: FunctionalSample,
    pub truth: Vec<f64>,
    pub scores: Vec<Vec<f64>>,
}

/// Builds responses from given scores and errors.
pub fn assemble_dgp(
    wiener: &WienerConfig,
    target: RegressionTarget,
    scores: Vec<Vec<f64>>,
    errors: &[f64],
) -> Result<SimulatedSample> {
    if scores.len() != errors.len() {
        return Err(crate::Error::LengthMismatch {
            left: scores.len(),
            right: errors.len(),
        });
    }
    let curves = scores
        .iter()
        .map(|s| wiener.curve_from_scores(s))
        .collect::<Result<Vec<_>>>()?;
    let truth: Vec<f64> = scores.iter().map(|s| target.eval(s)).collect();
    let responses = truth.iter().zip(errors).map(|(m, e)| m + e).collect();
    Ok(SimulatedSample {
        sample: FunctionalSample::new(curves, responses)?,
        truth,
        scores,
    })
}

/// Draws `n` curves, then `n` AR(1) errors, from `rng`.
pub fn gen_dgp(cfg: &DgpConfig, rng: &mut CounterRng) -> Result<SimulatedSample> {
    cfg.validate()?;
    let scores: Vec<Vec<f64>> = (0..cfg.n)
        .map(|_| sample_wiener(&cfg.wiener, rng).1)
        .collect();
    let errors = gen_ar1(cfg.n, cfg.ar_alpha, cfg.u_variance, rng)?;
    assemble_dgp(&cfg.wiener, cfg.target, scores, &errors)
}

/// An estimator entered in a Monte Carlo comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    pub name: String,
    pub cv: CvSpec,
}

impl EstimatorSpec {
    pub fn default_flc() -> Self {
        Self {
            name: "FLC".into(),
            cv: CvSpec::new(Method::Flc),
        }
    }

    pub fn default_fll() -> Self {
        Self {
            name: "FLL".into(),
            cv: CvSpec::new(Method::Fll),
        }
    }
}

/// One (replicate, estimator) outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McRow {
    pub replicate: usize,
    pub seed: u64,
    pub estimator: String,
    pub alpha: f64,
    pub h: Option<f64>,
    pub r_d: Option<usize>,
    pub r_beta: Option<usize>,
    /// `None` when tuning or prediction failed; see `failure`.
    pub mspe: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorSummary {
    pub estimator: String,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub replicates_ok: usize,
    pub replicates_failed: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McResult {
    pub alpha: f64,
    pub n: usize,
    pub n_r: usize,
    pub base_seed: u64,
    /// Ordered by replicate, then by estimator as listed.
    pub rows: Vec<McRow>,
}

/// Seed of replicate `j` under `base`.
pub fn replicate_seed(base: u64, j: usize) -> u64 {
    base ^ j as u64
}

impl McResult {
    pub fn estimators(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        for row in &self.rows {
            if !names.contains(&row.estimator) {
                names.push(row.estimator.clone());
            }
        }
        names
    }

    pub fn mspe_of(&self, estimator: &str) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.estimator == estimator)
            .filter_map(|r| r.mspe)
            .collect()
    }

    pub fn summary(&self) -> Vec<EstimatorSummary> {
        self.estimators()
            .into_iter()
            .map(|name| {
                let values = self.mspe_of(&name);
                let failed = self
                    .rows
                    .iter()
                    .filter(|r| r.estimator == name && r.mspe.is_none())
                    .count();
                let ok = values.len();
                let (median, q1, q3) = if values.is_empty() {
                    (f64::NAN, f64::NAN, f64::NAN)
                } else {
                    let mut data = Data::new(values);
                    (data.median(), data.lower_quartile(), data.upper_quartile())
                };
                EstimatorSummary {
                    estimator: name,
                    median,
                    q1,
                    q3,
                    iqr: q3 - q1,
                    replicates_ok: ok,
                    replicates_failed: failed,
                }
            })
            .collect()
    }

    pub fn median_mspe(&self, estimator: &str) -> f64 {
        self.summary()
            .into_iter()
            .find(|s| s.estimator == estimator)
            .map(|s| s.median)
            .unwrap_or(f64::NAN)
    }

    /// CSV rows `replicate,estimator,alpha,h,r_d,r_beta,mspe`; failures leave
    /// `mspe` empty. `write_header` allows concatenating several results.
    pub fn write_csv<W: Write>(&self, writer: W, write_header: bool) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        if write_header {
            out.write_record([
                "replicate",
                "estimator",
                "alpha",
                "h",
                "r_d",
                "r_beta",
                "mspe",
            ])?;
        }
        fn opt<T: ToString>(v: Option<T>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        for row in &self.rows {
            out.write_record([
                row.replicate.to_string(),
                row.estimator.clone(),
                row.alpha.to_string(),
                opt(row.h),
                opt(row.r_d),
                opt(row.r_beta),
                opt(row.mspe),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Tunes `spec` by leave-one-out CV on the sample and scores its in-sample
/// predictions against the true regression values.
fn evaluate_estimator(
    sim: &SimulatedSample,
    spec: &EstimatorSpec,
) -> Result<(f64, f64, Option<usize>, Option<usize>)> {
    let outcome = loo_cv_select(&sim.sample, &spec.cv)?;
    let best = outcome.best;
    let prepared = PreparedSample::new(&sim.sample, &outcome.basis, best)?;
    let predictions = prepared.predict_in_sample()?;
    let mut sse = 0.0;
    for (p, m) in predictions.iter().zip(&sim.truth) {
        let v = p
            .value
            .ok_or_else(|| crate::Error::NumericFailure("undefined in-sample prediction".into()))?;
        sse += (v - m) * (v - m);
    }
    let r_beta = match best.method {
        Method::Flc => None,
        Method::Fll => Some(best.beta_spec.r),
    };
    Ok((
        sse / sim.truth.len() as f64,
        best.h,
        best.d_spec.pca_dimension(),
        r_beta,
    ))
}

/// Monte Carlo MSPE comparison over `n_r` replicates.
///
/// Replicate `j` draws from `CounterRng::new(base_seed ⊕ j)`, so results do not
/// depend on how replicates are scheduled across threads.
pub fn run_monte_carlo(
    dgp: &DgpConfig,
    n_r: usize,
    estimators: &[EstimatorSpec],
) -> Result<McResult> {
    dgp.validate()?;
    if n_r == 0 {
        return Err(invalid("need at least one Monte Carlo replicate"));
    }
    if estimators.is_empty() {
        return Err(invalid("no estimators to compare"));
    }
    let rows: Vec<Vec<McRow>> = (0..n_r)
        .into_par_iter()
        .map(|j| {
            let seed = replicate_seed(dgp.seed, j);
            let mut rng = CounterRng::new(seed);
            let sim = gen_dgp(dgp, &mut rng)?;
            Ok(estimators
                .iter()
                .map(|spec| {
                    let base = McRow {
                        replicate: j,
                        seed,
                        estimator: spec.name.clone(),
                        alpha: dgp.ar_alpha,
                        h: None,
                        r_d: None,
                        r_beta: None,
                        mspe: None,
                        failure: None,
                    };
                    match evaluate_estimator(&sim, spec) {
                        Ok((mspe, h, r_d, r_beta)) => McRow {
                            h: Some(h),
                            r_d,
                            r_beta,
                            mspe: Some(mspe),
                            ..base
                        },
                        Err(e) => McRow {
                            failure: Some(e.to_string()),
                            ..base
                        },
                    }
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(McResult {
        alpha: dgp.ar_alpha,
        n: dgp.n,
        n_r,
        base_seed: dgp.seed,
        rows: rows.concat(),
    })
}

/// Below this every median MSPE is treated as numerically zero.
pub const NEAR_ZERO_MSPE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub estimator: String,
    pub alpha: f64,
    pub n: Vec<usize>,
    pub median_mspe: Vec<f64>,
    /// Least-squares slope of `ln(median MSPE)` on `ln(n)`.
    pub slope: f64,
    pub intercept: f64,
    pub strictly_decreasing: bool,
    /// All medians below [`NEAR_ZERO_MSPE`]; the slope is then meaningless.
    pub near_zero: bool,
    pub failures: usize,
}

/// Median MSPE of one estimator across sample sizes, with a log-log slope.
pub fn rate_check(
    n_list: &[usize],
    template: &DgpConfig,
    estimator: &EstimatorSpec,
    n_r: usize,
) -> Result<RateReport> {
    if n_list.len() < 3 {
        return Err(invalid("rate check needs at least 3 sample sizes"));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("sample sizes must be increasing"));
    }
    let mut medians = Vec::with_capacity(n_list.len());
    let mut failures = 0;
    for &n in n_list {
        let dgp = DgpConfig {
            n,
            ..template.clone()
        };
        let result = run_monte_carlo(&dgp, n_r, std::slice::from_ref(estimator))?;
        failures += result.rows.iter().filter(|r| r.mspe.is_none()).count();
        medians.push(result.median_mspe(&estimator.name));
    }
    let xs: Vec<f64> = n_list.iter().map(|n| (*n as f64).ln()).collect();
    let ys: Vec<f64> = medians
        .iter()
        .map(|m| m.max(f64::MIN_POSITIVE).ln())
        .collect();
    let (slope, intercept) = least_squares_line(&xs, &ys);
    Ok(RateReport {
        estimator: estimator.name.clone(),
        alpha: template.ar_alpha,
        n: n_list.to_vec(),
        strictly_decreasing: medians.windows(2).all(|w| w[1] < w[0]),
        near_zero: medians.iter().all(|m| *m < NEAR_ZERO_MSPE),
        median_mspe: medians,
        slope,
        intercept,
        failures,
    })
}

fn least_squares_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
