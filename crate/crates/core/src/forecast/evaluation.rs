//! Cumulative squared forecast error and the conditional predictive-ability test.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{invalid, Error, Result};

/// Exact running sum of doubles, kept as nonoverlapping partials (Shewchuk).
#[derive(Debug, Clone, Default, PartialEq)]
struct ExactSum {
    partials: Vec<f64>,
}

impl ExactSum {
    fn add(&mut self, mut x: f64) {
        let mut i = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        self.partials.truncate(i);
        self.partials.push(x);
    }

    /// The exact sum, correctly rounded.
    fn value(&self) -> f64 {
        let p = &self.partials;
        let mut n = p.len();
        if n == 0 {
            return 0.0;
        }
        n -= 1;
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            n -= 1;
            let y = p[n];
            hi = x + y;
            lo = y - (hi - x);
            if lo != 0.0 {
                break;
            }
        }
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
        hi
    }

    fn minus(&self, other: &ExactSum) -> f64 {
        let mut d = self.clone();
        for p in &other.partials {
            d.add(-p);
        }
        d.value()
    }
}

/// Running sum of `loss_flc − loss_fll`. Upward drift favors FLL.
///
/// Partial sums are held exactly, so [`CsfeSeries::increments`] returns the
/// per-step loss differences bit for bit.
#[derive(Debug, Clone)]
pub struct CsfeSeries {
    sums: Vec<ExactSum>,
}

impl CsfeSeries {
    pub fn len(&self) -> usize {
        self.sums.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sums.is_empty()
    }

    /// Correctly rounded cumulative values.
    pub fn values(&self) -> Vec<f64> {
        self.sums.iter().map(ExactSum::value).collect()
    }

    /// `CSFE_t − CSFE_{t−1}`, with `CSFE_{−1} = 0`.
    pub fn increments(&self) -> Vec<f64> {
        let zero = ExactSum::default();
        (0..self.sums.len())
            .map(|t| {
                let prev = if t == 0 { &zero } else { &self.sums[t - 1] };
                self.sums[t].minus(prev)
            })
            .collect()
    }
}

pub fn csfe(loss_flc: &[f64], loss_fll: &[f64]) -> Result<CsfeSeries> {
    if loss_flc.len() != loss_fll.len() {
        return Err(Error::LengthMismatch {
            left: loss_flc.len(),
            right: loss_fll.len(),
        });
    }
    if loss_flc.is_empty() {
        return Err(invalid("CSFE needs at least one loss pair"));
    }
    let mut acc = ExactSum::default();
    let sums = loss_flc
        .iter()
        .zip(loss_fll)
        .map(|(a, b)| {
            acc.add(a - b);
            acc.clone()
        })
        .collect();
    Ok(CsfeSeries { sums })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GwResult {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    /// Mean of `loss_flc − loss_fll`; positive values favor FLL.
    pub mean_loss_diff: f64,
    /// Observations entering the statistic (`n − 1` after lagging).
    pub n: usize,
    /// The instrument covariance was singular; the statistic is 0 and `p = 1`.
    pub degenerate: bool,
}

impl GwResult {
    /// Rejects "FLC at least as good as FLL" at `level`.
    pub fn favors_fll(&self, level: f64) -> bool {
        !self.degenerate && self.p_value < level && self.mean_loss_diff > 0.0
    }
}

pub const GW_MIN_LENGTH: usize = 10;

/// One-step conditional predictive-ability test on squared-error losses.
///
/// With `d_t = loss_flc_t − loss_fll_t` and instruments `h_{t−1} = (1, d_{t−1})`,
/// `Z_t = h_{t−1} d_t` and the statistic is `m · Z̄ᵀ Ω̂⁻¹ Z̄` with
/// `Ω̂ = m⁻¹ Σ Z_t Z_tᵀ` over the `m = n − 1` usable periods, referred to χ²₂.
pub fn gw_test(loss_fll: &[f64], loss_flc: &[f64]) -> Result<GwResult> {
    if loss_fll.len() != loss_flc.len() {
        return Err(Error::LengthMismatch {
            left: loss_fll.len(),
            right: loss_flc.len(),
        });
    }
    let n = loss_fll.len();
    if n < GW_MIN_LENGTH {
        return Err(invalid(format!(
            "GW test needs at least {GW_MIN_LENGTH} losses, got {n}"
        )));
    }
    let d: Vec<f64> = loss_flc.iter().zip(loss_fll).map(|(c, l)| c - l).collect();
    let mean_loss_diff = d.iter().sum::<f64>() / n as f64;

    let m = n - 1;
    let (mut z1, mut z2) = (0.0, 0.0);
    let (mut o11, mut o12, mut o22) = (0.0, 0.0, 0.0);
    for t in 1..n {
        let a = d[t];
        let b = d[t - 1] * d[t];
        z1 += a;
        z2 += b;
        o11 += a * a;
        o12 += a * b;
        o22 += b * b;
    }
    let mf = m as f64;
    let (z1, z2) = (z1 / mf, z2 / mf);
    let (o11, o12, o22) = (o11 / mf, o12 / mf, o22 / mf);
    let det = o11 * o22 - o12 * o12;

    let degenerate_result = GwResult {
        statistic: 0.0,
        degrees_of_freedom: 2,
        p_value: 1.0,
        mean_loss_diff,
        n: m,
        degenerate: true,
    };
    if !(o11 > 0.0 && o22 > 0.0) || det <= 1e-12 * o11 * o22 {
        return Ok(degenerate_result);
    }
    let quad = (o22 * z1 * z1 - 2.0 * o12 * z1 * z2 + o11 * z2 * z2) / det;
    let statistic = (mf * quad).max(0.0);
    let chi2 = ChiSquared::new(2.0).map_err(|e| Error::NumericFailure(e.to_string()))?;
    let p_value = chi2.sf(statistic).clamp(0.0, 1.0);
    Ok(GwResult {
        statistic,
        degrees_of_freedom: 2,
        p_value,
        mean_loss_diff,
        n: m,
        degenerate: false,
    })
}
