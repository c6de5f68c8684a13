//! Leave-one-out selection of the bandwidth and the semimetric dimensions.
//!
//! The PCA basis is fit once on the whole sample with enough eigenfunctions for
//! every candidate dimension; the pairwise semimetric matrices are then shared
//! by every candidate. For each candidate `(h, r_d[, r_β])` and each `k`, the
//! prediction at `χ_k` uses every observation except `k` in all of its sums.
//! A candidate with any undefined leave-one-out prediction scores `+∞`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{flc_from_terms, fll_sums_from_terms, EstimatorConfig, Method, ResponseTransform};
use crate::curve::{l2_distance, FunctionalSample};
use crate::diagnostics::nearest_rank_quantiles;
use crate::error::{invalid, Error, Result};
use crate::kernel::KernelSpec;
use crate::semimetric::{
    fit_pca_basis, score_distance, LocatorKind, LocatorSpec, PcaBasis, SemimetricSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceKind {
    L2,
    #[default]
    Pca,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    content = "values",
    rename_all = "snake_case",
    deny_unknown_fields
)]
pub enum BandwidthGrid {
    /// Nearest-rank quantiles of the pairwise semimetric distances, per `r_d`.
    DistanceQuantiles(Vec<f64>),
    Explicit(Vec<f64>),
}

impl Default for BandwidthGrid {
    fn default() -> Self {
        BandwidthGrid::DistanceQuantiles((1..=20).map(|k| k as f64 * 0.05).collect())
    }
}

impl BandwidthGrid {
    pub fn len(&self) -> usize {
        match self {
            BandwidthGrid::DistanceQuantiles(v) | BandwidthGrid::Explicit(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSpec {
    pub method: Method,
    pub kernel: KernelSpec,
    pub transform: ResponseTransform,
    pub distance: DistanceKind,
    pub locator: LocatorKind,
    pub bandwidths: BandwidthGrid,
    pub r_d: Vec<usize>,
    pub r_beta: Vec<usize>,
}

impl CvSpec {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            kernel: KernelSpec::Quadratic,
            transform: ResponseTransform::Identity,
            distance: DistanceKind::Pca,
            locator: LocatorKind::PcaDistance,
            bandwidths: BandwidthGrid::default(),
            r_d: (1..=6).collect(),
            r_beta: (1..=6).collect(),
        }
    }

    fn validate(&self) -> Result<()> {
        self.transform.validate()?;
        if self.bandwidths.is_empty() {
            return Err(invalid("bandwidth grid is empty"));
        }
        if let BandwidthGrid::DistanceQuantiles(q) = &self.bandwidths {
            if q.iter().any(|q| !(*q > 0.0 && *q <= 1.0)) {
                return Err(invalid("bandwidth quantiles must lie in (0, 1]"));
            }
        }
        if self.distance == DistanceKind::Pca && self.r_d.is_empty() {
            return Err(invalid("no r_d candidates"));
        }
        if self.method == Method::Fll
            && self.locator == LocatorKind::PcaDistance
            && self.r_beta.is_empty()
        {
            return Err(invalid("no r_beta candidates"));
        }
        if self.r_d.iter().chain(&self.r_beta).any(|r| *r == 0) {
            return Err(invalid("dimension candidates must be >= 1"));
        }
        Ok(())
    }

    /// Effective `r_d` candidates; `None` stands for the L2 distance.
    fn d_candidates(&self) -> Vec<Option<usize>> {
        match self.distance {
            DistanceKind::L2 => vec![None],
            DistanceKind::Pca => self.r_d.iter().map(|r| Some(*r)).collect(),
        }
    }

    /// Effective `r_β` candidates; `None` for FLC.
    fn beta_candidates(&self) -> Vec<Option<usize>> {
        match (self.method, self.locator) {
            (Method::Flc, _) => vec![None],
            (Method::Fll, LocatorKind::SignedFirstScore) => vec![Some(1)],
            (Method::Fll, LocatorKind::PcaDistance) => {
                self.r_beta.iter().map(|r| Some(*r)).collect()
            }
        }
    }

    fn basis_dimension(&self) -> usize {
        let d = match self.distance {
            DistanceKind::L2 => 1,
            DistanceKind::Pca => *self.r_d.iter().max().unwrap_or(&1),
        };
        let b = match (self.method, self.locator) {
            (Method::Fll, LocatorKind::PcaDistance) => *self.r_beta.iter().max().unwrap_or(&1),
            _ => 1,
        };
        d.max(b)
    }

    fn config(&self, h: f64, r_d: Option<usize>, r_beta: Option<usize>) -> EstimatorConfig {
        let d_spec = match r_d {
            None => SemimetricSpec::L2,
            Some(r) => SemimetricSpec::Pca { r },
        };
        let beta_spec = match self.locator {
            LocatorKind::PcaDistance => LocatorSpec::pca_distance(r_beta.unwrap_or(1)),
            LocatorKind::SignedFirstScore => LocatorSpec::signed_first_score(),
        };
        EstimatorConfig {
            method: self.method,
            kernel: self.kernel,
            d_spec,
            beta_spec,
            h,
            transform: self.transform,
        }
    }
}

/// One line of the cross-validation table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CvRow {
    pub method: Method,
    pub h: f64,
    pub r_d: Option<usize>,
    pub r_beta: Option<usize>,
    pub cv_score: f64,
    pub undefined_count: usize,
}

#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub best: EstimatorConfig,
    pub best_score: f64,
    pub table: Vec<CvRow>,
    /// The basis fit on the full sample; `best` is meant to be used with it.
    pub basis: PcaBasis,
}

impl CvOutcome {
    /// CSV with columns `method,h,r_d,r_beta,cv_score,undefined_count`.
    pub fn write_table_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_cv_table(&self.table, writer)
    }
}

pub fn write_cv_table<W: Write>(table: &[CvRow], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record([
        "method",
        "h",
        "r_d",
        "r_beta",
        "cv_score",
        "undefined_count",
    ])?;
    let opt = |r: Option<usize>| r.map(|v| v.to_string()).unwrap_or_default();
    for row in table {
        out.write_record([
            row.method.to_string(),
            row.h.to_string(),
            opt(row.r_d),
            opt(row.r_beta),
            row.cv_score.to_string(),
            row.undefined_count.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Dense symmetric `n × n` matrix stored row-major.
struct Pairwise {
    n: usize,
    data: Vec<f64>,
}

impl Pairwise {
    fn build(n: usize, f: impl Fn(usize, usize) -> f64 + Sync) -> Self {
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|k| (0..n).map(|i| f(k, i)).collect())
            .collect();
        Self {
            n,
            data: rows.concat(),
        }
    }

    #[inline]
    fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.n..(k + 1) * self.n]
    }

    fn upper_triangle(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n * (self.n - 1) / 2);
        for k in 0..self.n {
            v.extend_from_slice(&self.row(k)[k + 1..]);
        }
        v
    }
}

/// Selects `(h, r_d[, r_β])` by leave-one-out cross-validation.
pub fn loo_cv_select(sample: &FunctionalSample, spec: &CvSpec) -> Result<CvOutcome> {
    spec.validate()?;
    let n = sample.len();
    if n < 3 {
        return Err(invalid(format!("cross-validation needs n >= 3, got {n}")));
    }
    let basis = fit_pca_basis(sample, spec.basis_dimension())?;
    let scores: Vec<Vec<f64>> = sample
        .curves()
        .iter()
        .map(|c| basis.scores(c))
        .collect::<Result<_>>()?;
    let phi: Vec<f64> = sample
        .responses()
        .iter()
        .map(|y| spec.transform.apply(*y))
        .collect();

    // distance matrices for every dimension any candidate touches
    let d_cands = spec.d_candidates();
    let b_cands = spec.beta_candidates();
    let mut dims: Vec<usize> = d_cands.iter().flatten().copied().collect();
    if spec.locator == LocatorKind::PcaDistance {
        dims.extend(b_cands.iter().flatten().copied());
    }
    dims.sort_unstable();
    dims.dedup();
    let max_dim = dims.last().copied().unwrap_or(0);
    let mut pca: Vec<Option<Pairwise>> = (0..=max_dim).map(|_| None).collect();
    for &r in &dims {
        pca[r] = Some(Pairwise::build(n, |k, i| {
            score_distance(&scores[i], &scores[k], r)
        }));
    }
    let l2 = if spec.distance == DistanceKind::L2 {
        let curves = sample.curves();
        Some(Pairwise::build(n, |k, i| {
            l2_distance(&curves[i], &curves[k]).unwrap_or(f64::NAN)
        }))
    } else {
        None
    };
    let dist_for = |r_d: Option<usize>| -> &Pairwise {
        match r_d {
            None => l2.as_ref().expect("L2 matrix built"),
            Some(r) => pca[r].as_ref().expect("PCA matrix built"),
        }
    };

    let mut groups: Vec<(Option<usize>, f64)> = Vec::new();
    for &r_d in &d_cands {
        let hs = match &spec.bandwidths {
            BandwidthGrid::Explicit(hs) => hs.clone(),
            BandwidthGrid::DistanceQuantiles(qs) => {
                let mut pairs = dist_for(r_d).upper_triangle();
                pairs.sort_by(f64::total_cmp);
                nearest_rank_quantiles(&pairs, qs)
            }
        };
        groups.extend(hs.into_iter().map(|h| (r_d, h)));
    }

    let table: Vec<CvRow> = groups
        .par_iter()
        .map(|&(r_d, h)| {
            let dist = dist_for(r_d);
            b_cands
                .iter()
                .map(|&r_beta| {
                    let (cv_score, undefined_count) = if h > 0.0 && h.is_finite() {
                        loo_score(spec, dist, r_beta, &pca, &scores, &phi, h)
                    } else {
                        (f64::INFINITY, n)
                    };
                    CvRow {
                        method: spec.method,
                        h,
                        r_d,
                        r_beta,
                        cv_score,
                        undefined_count,
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .concat();

    let best = table
        .iter()
        .filter(|row| row.cv_score.is_finite())
        .min_by(|a, b| {
            a.cv_score
                .total_cmp(&b.cv_score)
                .then(a.h.total_cmp(&b.h))
                .then(a.r_d.cmp(&b.r_d))
                .then(a.r_beta.cmp(&b.r_beta))
        })
        .copied()
        .ok_or(Error::NoValidCandidate)?;

    Ok(CvOutcome {
        best: spec.config(best.h, best.r_d, best.r_beta),
        best_score: best.cv_score,
        table,
        basis,
    })
}

fn loo_score(
    spec: &CvSpec,
    dist: &Pairwise,
    r_beta: Option<usize>,
    pca: &[Option<Pairwise>],
    scores: &[Vec<f64>],
    phi: &[f64],
    h: f64,
) -> (f64, usize) {
    let n = phi.len();
    let mut sse = 0.0;
    let mut undefined = 0;
    for k in 0..n {
        let d = dist.row(k);
        let others = (0..n).filter(|&i| i != k);
        let prediction = match (spec.method, r_beta) {
            (Method::Flc, _) | (Method::Fll, None) => {
                flc_from_terms(spec.kernel, h, others.map(|i| (d[i], phi[i]))).value
            }
            (Method::Fll, Some(rb)) => {
                let sums = match spec.locator {
                    LocatorKind::PcaDistance => {
                        let b = pca[rb].as_ref().expect("beta matrix built").row(k);
                        fll_sums_from_terms(spec.kernel, h, others.map(|i| (d[i], b[i], phi[i]))).0
                    }
                    LocatorKind::SignedFirstScore => {
                        let sk = scores[k][0];
                        fll_sums_from_terms(
                            spec.kernel,
                            h,
                            others.map(|i| (d[i], scores[i][0] - sk, phi[i])),
                        )
                        .0
                    }
                };
                sums.estimate()
            }
        };
        match prediction {
            Some(v) => sse += (phi[k] - v) * (phi[k] - v),
            None => undefined += 1,
        }
    }
    if undefined > 0 {
        (f64::INFINITY, undefined)
    } else {
        (sse / n as f64, 0)
    }
}
