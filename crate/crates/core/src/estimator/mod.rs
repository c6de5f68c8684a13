//! Functional local constant (FLC) and local linear (FLL) estimation.
//!
//! Both estimators share the form `m̂(x) = Σ_{i,j} w_{ij} φ_j / Σ_{i,j} w_{ij}`.
//! For FLC the weights reduce to `K_j = K(d(χ_j, x)/h)`. For FLL they are
//! `w_{ij} = β_i(β_i − β_j) K_i K_j` with `β_i = β(χ_i, x)`, and the double sum
//! factorizes into five single sums:
//!
//! ```text
//! S0 = Σ K_i        Sa = Σ K_i β_i²    Sb = Σ K_j φ_j
//! Sc = Σ K_i β_i    Sd = Σ K_j β_j φ_j
//!
//! m̂(x) = (Sa·Sb − Sc·Sd) / (Sa·S0 − Sc²)
//! ```
//!
//! which is the intercept of the kernel-weighted least-squares fit of
//! `φ(Y_i) ≈ a + b·β_i`. [`fll_estimate`] evaluates it in one pass;
//! [`fll_estimate_naive`] keeps the literal `O(n²)` double sum as an oracle.

mod cv;

pub use cv::{loo_cv_select, BandwidthGrid, CvOutcome, CvRow, CvSpec, DistanceKind};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::curve::{l2_distance, Curve, FunctionalSample};
use crate::error::{invalid, Error, Result};
use crate::kernel::KernelSpec;
use crate::semimetric::{score_distance, LocatorSpec, PcaBasis, SemimetricSpec};

/// Absolute threshold under which a denominator counts as zero.
pub const DENOMINATOR_FLOOR: f64 = 1e-300;

/// Relative threshold on the FLL denominator `Sa·S0 − Sc²` against `Sa·S0`.
/// Below it the active `β` values are numerically indistinguishable and the
/// slope is not identified.
pub const FLL_RELATIVE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Flc,
    Fll,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Flc => "FLC",
            Method::Fll => "FLL",
        })
    }
}

/// The response transform `φ`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ResponseTransform {
    #[default]
    Identity,
    /// `φ(y) = 1{y ≤ threshold}`; the estimator then targets a conditional CDF.
    IndicatorAtOrBelow { threshold: f64 },
}

impl ResponseTransform {
    #[inline]
    pub fn apply(&self, y: f64) -> f64 {
        match *self {
            ResponseTransform::Identity => y,
            ResponseTransform::IndicatorAtOrBelow { threshold } => {
                if y <= threshold {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ResponseTransform::IndicatorAtOrBelow { threshold } if !threshold.is_finite() => {
                Err(invalid("indicator threshold must be finite"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub method: Method,
    pub kernel: KernelSpec,
    pub d_spec: SemimetricSpec,
    /// Used by FLL only.
    pub beta_spec: LocatorSpec,
    pub h: f64,
    pub transform: ResponseTransform,
}

impl EstimatorConfig {
    pub fn flc(kernel: KernelSpec, d_spec: SemimetricSpec, h: f64) -> Self {
        Self {
            method: Method::Flc,
            kernel,
            d_spec,
            beta_spec: LocatorSpec::pca_distance(1),
            h,
            transform: ResponseTransform::Identity,
        }
    }

    pub fn fll(kernel: KernelSpec, d_spec: SemimetricSpec, beta_spec: LocatorSpec, h: f64) -> Self {
        Self {
            method: Method::Fll,
            kernel,
            d_spec,
            beta_spec,
            h,
            transform: ResponseTransform::Identity,
        }
    }

    pub fn with_transform(mut self, transform: ResponseTransform) -> Self {
        self.transform = transform;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(invalid(format!(
                "bandwidth must be positive, got {}",
                self.h
            )));
        }
        self.d_spec.validate()?;
        self.beta_spec.validate()?;
        self.transform.validate()
    }

    /// Number of leading basis scores needed to evaluate `d` and (for FLL) `β`.
    pub(crate) fn score_dimension(&self) -> usize {
        let d = self.d_spec.pca_dimension().unwrap_or(0);
        match self.method {
            Method::Flc => d,
            Method::Fll => d.max(self.beta_spec.dimension()),
        }
    }

    fn check_basis(&self, basis: &PcaBasis) -> Result<()> {
        let need = self.score_dimension();
        if need > basis.r() {
            return Err(invalid(format!(
                "configuration needs {need} eigenfunctions, basis has {}",
                basis.r()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    /// `None` when the estimator's denominator vanishes.
    pub value: Option<f64>,
    /// Number of sample points with positive kernel weight.
    pub active_count: usize,
}

impl Prediction {
    pub fn is_defined(&self) -> bool {
        self.value.is_some()
    }
}

/// The five single sums of the factorized FLL estimator.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FllSums {
    /// `Σ K_i`
    pub s0: f64,
    /// `Σ K_i β_i²`
    pub sa: f64,
    /// `Σ K_j φ_j`
    pub sb: f64,
    /// `Σ K_i β_i`
    pub sc: f64,
    /// `Σ K_j β_j φ_j`
    pub sd: f64,
}

impl FllSums {
    #[inline]
    pub(crate) fn add(&mut self, k: f64, beta: f64, phi: f64) {
        let kb = k * beta;
        self.s0 += k;
        self.sa += kb * beta;
        self.sb += k * phi;
        self.sc += kb;
        self.sd += kb * phi;
    }

    pub fn numerator(&self) -> f64 {
        self.sa * self.sb - self.sc * self.sd
    }

    pub fn denominator(&self) -> f64 {
        self.sa * self.s0 - self.sc * self.sc
    }

    pub fn estimate(&self) -> Option<f64> {
        fll_ratio(self.numerator(), self.denominator(), self.sa * self.s0)
    }
}

#[inline]
fn fll_ratio(numerator: f64, denominator: f64, positive_part: f64) -> Option<f64> {
    if denominator.abs() <= DENOMINATOR_FLOOR
        || denominator.abs() <= FLL_RELATIVE_FLOOR * positive_part.abs()
    {
        None
    } else {
        Some(numerator / denominator)
    }
}

/// Nadaraya-Watson combination over `(distance, φ)` terms.
///
/// Accumulates `φ` relative to the first active response so that constant
/// responses are reproduced exactly.
#[inline]
pub(crate) fn flc_from_terms(
    kernel: KernelSpec,
    h: f64,
    terms: impl Iterator<Item = (f64, f64)>,
) -> Prediction {
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut reference = None;
    let mut active = 0;
    for (d, phi) in terms {
        let k = kernel.eval(d / h);
        if k > 0.0 {
            active += 1;
            let r = *reference.get_or_insert(phi);
            s0 += k;
            s1 += k * (phi - r);
        }
    }
    let value = match reference {
        Some(r) if s0 > DENOMINATOR_FLOOR => Some(r + s1 / s0),
        _ => None,
    };
    Prediction {
        value,
        active_count: active,
    }
}

/// Single pass over `(distance, β, φ)` terms.
#[inline]
pub(crate) fn fll_sums_from_terms(
    kernel: KernelSpec,
    h: f64,
    terms: impl Iterator<Item = (f64, f64, f64)>,
) -> (FllSums, usize) {
    let mut sums = FllSums::default();
    let mut active = 0;
    for (d, beta, phi) in terms {
        let k = kernel.eval(d / h);
        if k > 0.0 {
            active += 1;
            sums.add(k, beta, phi);
        }
    }
    (sums, active)
}

/// Per-point distances and locator values of the sample relative to `x`.
struct Neighborhood {
    d: Vec<f64>,
    beta: Vec<f64>,
    phi: Vec<f64>,
}

fn neighborhood(
    x: &Curve,
    sample: &FunctionalSample,
    cfg: &EstimatorConfig,
    basis: &PcaBasis,
    need_beta: bool,
) -> Result<Neighborhood> {
    cfg.validate()?;
    cfg.check_basis(basis)?;
    if !x.same_grid(&sample.curves()[0]) {
        return Err(Error::GridMismatch);
    }
    let dim = if need_beta {
        cfg.score_dimension()
    } else {
        cfg.d_spec.pca_dimension().unwrap_or(0)
    };
    let x_scores = if dim > 0 {
        let mut s = basis.scores(x)?;
        s.truncate(dim);
        s
    } else {
        Vec::new()
    };

    let n = sample.len();
    let mut d = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(if need_beta { n } else { 0 });
    let mut scratch = Vec::with_capacity(dim);
    for curve in sample.curves() {
        if dim > 0 {
            scratch.clear();
            scratch.extend(
                basis.eigenfunctions()[..dim]
                    .iter()
                    .map(|v| basis.grid().integrate_product(curve.values(), v.values())),
            );
        }
        d.push(match cfg.d_spec {
            SemimetricSpec::L2 => l2_distance(curve, x)?,
            SemimetricSpec::Pca { r } => score_distance(&scratch, &x_scores, r),
        });
        if need_beta {
            beta.push(cfg.beta_spec.locate_scores(&scratch, &x_scores));
        }
    }
    let phi = sample
        .responses()
        .iter()
        .map(|y| cfg.transform.apply(*y))
        .collect();
    Ok(Neighborhood { d, beta, phi })
}

fn require_method(cfg: &EstimatorConfig, method: Method) -> Result<()> {
    if cfg.method != method {
        return Err(invalid(format!(
            "configuration is for {}, operation needs {method}",
            cfg.method
        )));
    }
    Ok(())
}

/// Functional local constant estimate `Σ K_j φ_j / Σ K_j` at `x`.
pub fn flc_estimate(
    x: &Curve,
    sample: &FunctionalSample,
    cfg: &EstimatorConfig,
    basis: &PcaBasis,
) -> Result<Prediction> {
    require_method(cfg, Method::Flc)?;
    let nb = neighborhood(x, sample, cfg, basis, false)?;
    Ok(flc_from_terms(
        cfg.kernel,
        cfg.h,
        nb.d.iter().copied().zip(nb.phi.iter().copied()),
    ))
}

/// The five FLL sums at `x`, in one pass over the sample.
pub fn fll_sums(
    x: &Curve,
    sample: &FunctionalSample,
    cfg: &EstimatorConfig,
    basis: &PcaBasis,
) -> Result<FllSums> {
    require_method(cfg, Method::Fll)?;
    let nb = neighborhood(x, sample, cfg, basis, true)?;
    Ok(fll_sums_from_terms(cfg.kernel, cfg.h, triples(&nb)).0)
}

fn triples(nb: &Neighborhood) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
    nb.d.iter()
        .zip(&nb.beta)
        .zip(&nb.phi)
        .map(|((d, b), p)| (*d, *b, *p))
}

/// Functional local linear estimate at `x` via the factorized sums.
pub fn fll_estimate(
    x: &Curve,
    sample: &FunctionalSample,
    cfg: &EstimatorConfig,
    basis: &PcaBasis,
) -> Result<Prediction> {
    require_method(cfg, Method::Fll)?;
    let nb = neighborhood(x, sample, cfg, basis, true)?;
    let (sums, active) = fll_sums_from_terms(cfg.kernel, cfg.h, triples(&nb));
    Ok(Prediction {
        value: sums.estimate(),
        active_count: active,
    })
}

/// Literal double-sum evaluation of the FLL weights `w_{ij}`. Quadratic in `n`.
pub fn fll_estimate_naive(
    x: &Curve,
    sample: &FunctionalSample,
    cfg: &EstimatorConfig,
    basis: &PcaBasis,
) -> Result<Prediction> {
    require_method(cfg, Method::Fll)?;
    let nb = neighborhood(x, sample, cfg, basis, true)?;
    let k: Vec<f64> = nb.d.iter().map(|d| cfg.kernel.eval(d / cfg.h)).collect();
    let n = k.len();
    let mut num = 0.0;
    let mut den = 0.0;
    let mut positive = 0.0;
    for i in 0..n {
        for j in 0..n {
            let kk = k[i] * k[j];
            let w = nb.beta[i] * (nb.beta[i] - nb.beta[j]) * kk;
            num += w * nb.phi[j];
            den += w;
            positive += nb.beta[i] * nb.beta[i] * kk;
        }
    }
    Ok(Prediction {
        value: fll_ratio(num, den, positive),
        active_count: k.iter().filter(|v| **v > 0.0).count(),
    })
}

/// Dispatches on `cfg.method`.
pub fn estimate(
    x: &Curve,
    sample: &FunctionalSample,
    cfg: &EstimatorConfig,
    basis: &PcaBasis,
) -> Result<Prediction> {
    match cfg.method {
        Method::Flc => flc_estimate(x, sample, cfg, basis),
        Method::Fll => fll_estimate(x, sample, cfg, basis),
    }
}

/// A sample with its basis scores cached, for repeated evaluation.
#[derive(Debug, Clone)]
pub struct PreparedSample<'a> {
    sample: &'a FunctionalSample,
    basis: &'a PcaBasis,
    scores: Vec<Vec<f64>>,
    phi: Vec<f64>,
    cfg: EstimatorConfig,
}

impl<'a> PreparedSample<'a> {
    pub fn new(
        sample: &'a FunctionalSample,
        basis: &'a PcaBasis,
        cfg: EstimatorConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        cfg.check_basis(basis)?;
        let dim = cfg.score_dimension();
        let scores = sample
            .curves()
            .iter()
            .map(|c| {
                let mut s = basis.scores(c)?;
                s.truncate(dim);
                Ok(s)
            })
            .collect::<Result<Vec<_>>>()?;
        let phi = sample
            .responses()
            .iter()
            .map(|y| cfg.transform.apply(*y))
            .collect();
        Ok(Self {
            sample,
            basis,
            scores,
            phi,
            cfg,
        })
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.cfg
    }

    /// Prediction at `x`, optionally leaving out one sample index.
    pub fn predict(&self, x: &Curve, exclude: Option<usize>) -> Result<Prediction> {
        if !x.same_grid(&self.sample.curves()[0]) {
            return Err(Error::GridMismatch);
        }
        let mut xs = self.basis.scores(x)?;
        xs.truncate(self.cfg.score_dimension());
        let d = self
            .sample
            .curves()
            .iter()
            .zip(&self.scores)
            .map(|(c, s)| match self.cfg.d_spec {
                SemimetricSpec::L2 => l2_distance(c, x),
                SemimetricSpec::Pca { r } => Ok(score_distance(s, &xs, r)),
            })
            .collect::<Result<Vec<f64>>>()?;
        let keep = |i: &usize| Some(*i) != exclude;
        let cfg = &self.cfg;
        Ok(match cfg.method {
            Method::Flc => flc_from_terms(
                cfg.kernel,
                cfg.h,
                (0..d.len()).filter(keep).map(|i| (d[i], self.phi[i])),
            ),
            Method::Fll => {
                let (sums, active) = fll_sums_from_terms(
                    cfg.kernel,
                    cfg.h,
                    (0..d.len()).filter(keep).map(|i| {
                        (
                            d[i],
                            cfg.beta_spec.locate_scores(&self.scores[i], &xs),
                            self.phi[i],
                        )
                    }),
                );
                Prediction {
                    value: sums.estimate(),
                    active_count: active,
                }
            }
        })
    }

    /// Predictions at every sample curve using the full sample.
    pub fn predict_in_sample(&self) -> Result<Vec<Prediction>> {
        self.sample
            .curves()
            .iter()
            .map(|c| self.predict(c, None))
            .collect()
    }

    /// Leave-one-out predictions `m̂_(−k)(χ_k)` for every `k`.
    pub fn loo_predictions(&self) -> Result<Vec<Prediction>> {
        self.sample
            .curves()
            .iter()
            .enumerate()
            .map(|(k, c)| self.predict(c, Some(k)))
            .collect()
    }
}
