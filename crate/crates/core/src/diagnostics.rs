//! Empirical small-ball fractions and pairwise-distance quantiles.

use std::io::Write;

use serde::Serialize;

use crate::curve::{Curve, FunctionalSample};
use crate::error::{invalid, Result};
use crate::semimetric::{PcaBasis, SemimetricSpec};

/// Nearest-rank quantiles of an ascending slice: the value of rank `⌈q·N⌉`.
pub fn nearest_rank_quantiles(sorted: &[f64], qs: &[f64]) -> Vec<f64> {
    let n = sorted.len();
    if n == 0 {
        return vec![f64::NAN; qs.len()];
    }
    qs.iter()
        .map(|q| {
            // absorb representation error such as 0.1 * 4950 = 495.00000000000006
            let rank = (q * n as f64 - 1e-9).ceil().clamp(1.0, n as f64) as usize;
            sorted[rank - 1]
        })
        .collect()
}

fn pairwise_distances(
    sample: &FunctionalSample,
    d_spec: &SemimetricSpec,
    basis: &PcaBasis,
) -> Result<Vec<f64>> {
    let curves = sample.curves();
    let n = curves.len();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            out.push(d_spec.distance(&curves[i], &curves[j], basis)?);
        }
    }
    Ok(out)
}

/// Nearest-rank quantiles of the `n(n−1)/2` pairwise distances.
pub fn distance_quantiles(
    sample: &FunctionalSample,
    d_spec: &SemimetricSpec,
    basis: &PcaBasis,
    q_list: &[f64],
) -> Result<Vec<f64>> {
    if sample.len() < 2 {
        return Err(invalid("distance quantiles need at least 2 curves"));
    }
    if q_list.iter().any(|q| !(*q > 0.0 && *q <= 1.0)) {
        return Err(invalid("quantile levels must lie in (0, 1]"));
    }
    d_spec.validate()?;
    let mut d = pairwise_distances(sample, d_spec, basis)?;
    d.sort_by(f64::total_cmp);
    Ok(nearest_rank_quantiles(&d, q_list))
}

/// Fractions of the sample inside closed balls `{d(χ_i, x) ≤ h}` around a center.
#[derive(Debug, Clone, Serialize)]
pub struct BallProfile {
    pub h: Vec<f64>,
    pub fraction: Vec<f64>,
}

impl BallProfile {
    /// CSV with columns `h,fraction`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["h", "fraction"])?;
        for (h, f) in self.h.iter().zip(&self.fraction) {
            out.write_record([h.to_string(), f.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn small_ball_profile(
    x: &Curve,
    sample: &FunctionalSample,
    d_spec: &SemimetricSpec,
    basis: &PcaBasis,
    h_list: &[f64],
) -> Result<BallProfile> {
    if h_list.iter().any(|h| h.is_nan() || *h <= 0.0) {
        return Err(invalid("ball radii must be positive"));
    }
    if h_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("ball radii must be increasing"));
    }
    d_spec.validate()?;
    let mut d = sample
        .curves()
        .iter()
        .map(|c| d_spec.distance(c, x, basis))
        .collect::<Result<Vec<f64>>>()?;
    d.sort_by(f64::total_cmp);
    let n = d.len() as f64;
    let fraction = h_list
        .iter()
        .map(|h| d.partition_point(|v| v <= h) as f64 / n)
        .collect();
    Ok(BallProfile {
        h: h_list.to_vec(),
        fraction,
    })
}
