//! PCA semimetrics and locating functions.
//!
//! The basis comes from the uncentered empirical covariance
//! `Ĝ(s, t) = n⁻¹ Σᵢ χᵢ(s) χᵢ(t)`. The discrete operator is symmetrized with the
//! square roots of the quadrature weights before diagonalization, so that the
//! returned eigenfunctions are orthonormal under the grid quadrature and the
//! eigenvalues approximate those of the integral operator.
//!
//! `d_r(a, b) = sqrt(Σ_{k ≤ r} ⟨a − b, v_k⟩²)` is a semimetric: curves that
//! differ only outside the span of the first `r` eigenfunctions are at distance 0.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::curve::{l2_distance, Curve, FunctionalSample, Grid};
use crate::error::{invalid, Error, Result};
use crate::linalg::symmetric_eigen;

/// Leading eigenpairs of the empirical covariance operator.
#[derive(Debug, Clone)]
pub struct PcaBasis {
    grid: Arc<Grid>,
    eigenfunctions: Vec<Curve>,
    eigenvalues: Vec<f64>,
}

impl PcaBasis {
    pub fn r(&self) -> usize {
        self.eigenfunctions.len()
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn eigenfunctions(&self) -> &[Curve] {
        &self.eigenfunctions
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    fn check_curve(&self, c: &Curve) -> Result<()> {
        if Arc::ptr_eq(c.grid(), &self.grid) || **c.grid() == *self.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Quadrature projections `⟨c, v_k⟩` for `k = 1..=r`.
    pub fn scores(&self, c: &Curve) -> Result<Vec<f64>> {
        self.check_curve(c)?;
        Ok(self.scores_unchecked(c.values()))
    }

    pub(crate) fn scores_unchecked(&self, values: &[f64]) -> Vec<f64> {
        self.eigenfunctions
            .iter()
            .map(|v| self.grid.integrate_product(values, v.values()))
            .collect()
    }

    /// Writes one eigenfunction per column, the eigenvalue in each column header.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend(
            self.eigenvalues
                .iter()
                .enumerate()
                .map(|(k, l)| format!("v{}[lambda={}]", k + 1, l)),
        );
        out.write_record(&header)?;
        for (a, t) in self.grid.points().iter().enumerate() {
            let mut row = vec![t.to_string()];
            row.extend(
                self.eigenfunctions
                    .iter()
                    .map(|v| v.values()[a].to_string()),
            );
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Fits the top-`r` eigenpairs of the uncentered covariance of `sample`.
pub fn fit_pca_basis(sample: &FunctionalSample, r: usize) -> Result<PcaBasis> {
    let grid = Arc::clone(sample.grid());
    let p = grid.len();
    if r == 0 || r > p {
        return Err(invalid(format!(
            "PCA dimension must be in 1..={p}, got {r}"
        )));
    }
    if sample.len() < 2 {
        return Err(invalid("PCA basis needs at least 2 curves"));
    }
    let n = sample.len() as f64;
    let sqrt_w: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();

    let mut cov = vec![vec![0.0; p]; p];
    for curve in sample.curves() {
        let x = curve.values();
        for a in 0..p {
            let xa = x[a];
            let row = &mut cov[a];
            for b in a..p {
                row[b] += xa * x[b];
            }
        }
    }
    for a in 0..p {
        for b in a..p {
            let m = cov[a][b] / n * sqrt_w[a] * sqrt_w[b];
            cov[a][b] = m;
            cov[b][a] = m;
        }
    }

    let eig = symmetric_eigen(&cov)?;
    let mut eigenfunctions = Vec::with_capacity(r);
    let mut eigenvalues = Vec::with_capacity(r);
    for k in 0..r {
        let values = eig.vectors[k]
            .iter()
            .zip(&sqrt_w)
            .map(|(u, sw)| u / sw)
            .collect();
        eigenfunctions.push(Curve::new(Arc::clone(&grid), values)?);
        eigenvalues.push(eig.values[k].max(0.0));
    }
    Ok(PcaBasis {
        grid,
        eigenfunctions,
        eigenvalues,
    })
}

/// Distance between two score vectors using their first `r` coordinates.
#[inline]
pub(crate) fn score_distance(a: &[f64], b: &[f64], r: usize) -> f64 {
    a[..r]
        .iter()
        .zip(&b[..r])
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `d_r^PCA(a, b)` with `r` = the number of eigenfunctions in `basis`.
pub fn pca_semimetric(a: &Curve, b: &Curve, basis: &PcaBasis) -> Result<f64> {
    pca_semimetric_r(a, b, basis, basis.r())
}

/// `d_r^PCA(a, b)` using the first `r` eigenfunctions of `basis`.
pub fn pca_semimetric_r(a: &Curve, b: &Curve, basis: &PcaBasis, r: usize) -> Result<f64> {
    if r == 0 || r > basis.r() {
        return Err(invalid(format!(
            "semimetric dimension {r} outside 1..={}",
            basis.r()
        )));
    }
    let diff = a.sub(b)?;
    basis.check_curve(&diff)?;
    let sq: f64 = basis.eigenfunctions[..r]
        .iter()
        .map(|v| {
            let proj = basis.grid.integrate_product(diff.values(), v.values());
            proj * proj
        })
        .sum();
    Ok(sq.sqrt())
}

/// Which semimetric `d` drives the kernel weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SemimetricSpec {
    L2,
    Pca { r: usize },
}

impl SemimetricSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            SemimetricSpec::Pca { r: 0 } => Err(invalid("PCA semimetric needs r >= 1")),
            _ => Ok(()),
        }
    }

    pub fn pca_dimension(&self) -> Option<usize> {
        match self {
            SemimetricSpec::L2 => None,
            SemimetricSpec::Pca { r } => Some(*r),
        }
    }

    pub fn distance(&self, a: &Curve, b: &Curve, basis: &PcaBasis) -> Result<f64> {
        match *self {
            SemimetricSpec::L2 => l2_distance(a, b),
            SemimetricSpec::Pca { r } => pca_semimetric_r(a, b, basis, r),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocatorKind {
    /// `β(a, b) = d_r^PCA(a, b)`, nonnegative.
    #[default]
    PcaDistance,
    /// `β(a, b) = ⟨a − b, v₁⟩`, signed.
    SignedFirstScore,
}

/// The locating function `β` of the local linear fit; `β(x, x) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocatorSpec {
    pub kind: LocatorKind,
    pub r: usize,
}

impl LocatorSpec {
    pub fn pca_distance(r: usize) -> Self {
        Self {
            kind: LocatorKind::PcaDistance,
            r,
        }
    }

    pub fn signed_first_score() -> Self {
        Self {
            kind: LocatorKind::SignedFirstScore,
            r: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 {
            return Err(invalid("locator dimension r must be >= 1"));
        }
        Ok(())
    }

    /// Number of leading scores the locator reads.
    pub(crate) fn dimension(&self) -> usize {
        match self.kind {
            LocatorKind::PcaDistance => self.r,
            LocatorKind::SignedFirstScore => 1,
        }
    }

    /// `β` evaluated on score vectors of `a` and `b`.
    #[inline]
    pub(crate) fn locate_scores(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.kind {
            LocatorKind::PcaDistance => score_distance(a, b, self.r),
            LocatorKind::SignedFirstScore => a[0] - b[0],
        }
    }
}

/// Evaluates the locating function `β(a, b)`.
pub fn beta_locate(a: &Curve, b: &Curve, spec: &LocatorSpec, basis: &PcaBasis) -> Result<f64> {
    spec.validate()?;
    match spec.kind {
        LocatorKind::PcaDistance => pca_semimetric_r(a, b, basis, spec.r),
        LocatorKind::SignedFirstScore => {
            let diff = a.sub(b)?;
            basis.check_curve(&diff)?;
            let v1 = basis
                .eigenfunctions
                .first()
                .ok_or_else(|| invalid("empty basis"))?;
            Ok(basis.grid.integrate_product(diff.values(), v1.values()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::make_uniform_grid;
    use crate::rng::CounterRng;
    use crate::simulate::{sample_wiener, WienerConfig};

    fn wiener_sample(n: usize, p: usize, seed: u64) -> FunctionalSample {
        let grid = Arc::new(make_uniform_grid(p).unwrap());
        let cfg = WienerConfig::new(grid, 100).unwrap();
        let mut rng = CounterRng::new(seed);
        let curves: Vec<Curve> = (0..n).map(|_| sample_wiener(&cfg, &mut rng).0).collect();
        FunctionalSample::new(curves, vec![0.0; n]).unwrap()
    }

    #[test]
    fn basis_is_orthonormal_and_sorted() {
        let sample = wiener_sample(200, 40, 1);
        let basis = fit_pca_basis(&sample, 6).unwrap();
        for (j, a) in basis.eigenfunctions().iter().enumerate() {
            for (k, b) in basis.eigenfunctions().iter().enumerate() {
                let ip = crate::curve::inner_product(a, b).unwrap();
                let target = if j == k { 1.0 } else { 0.0 };
                assert!((ip - target).abs() < 1e-8, "({j},{k}) -> {ip}");
            }
        }
        assert!(basis.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
        assert!(basis.eigenvalues().iter().all(|l| *l >= 0.0));
    }

    #[test]
    fn repeated_curve_is_rank_one() {
        let grid = Arc::new(make_uniform_grid(30).unwrap());
        let c = Curve::from_fn(Arc::clone(&grid), |t| (3.0 * t).cos() + t).unwrap();
        let sample = FunctionalSample::new(vec![c.clone(); 5], vec![0.0; 5]).unwrap();
        let basis = fit_pca_basis(&sample, 3).unwrap();
        let v1 = &basis.eigenfunctions()[0];
        let norm_c = crate::curve::inner_product(&c, &c).unwrap().sqrt();
        let cos = crate::curve::inner_product(v1, &c).unwrap().abs() / norm_c;
        assert!((cos - 1.0).abs() < 1e-10);
        assert!((basis.eigenvalues()[0] - norm_c * norm_c).abs() < 1e-10);
        assert!(basis.eigenvalues()[1].abs() < 1e-10);
        assert!(basis.eigenvalues()[2].abs() < 1e-10);
    }

    #[test]
    fn wiener_spectrum_matches_kl() {
        let sample = wiener_sample(5000, 100, 2);
        let basis = fit_pca_basis(&sample, 2).unwrap();
        let lambda1 = 4.0 / std::f64::consts::PI.powi(2);
        assert!((basis.eigenvalues()[0] - lambda1).abs() < 0.1 * lambda1);
        let kl1 = Curve::from_fn(Arc::clone(sample.grid()), |t| {
            2f64.sqrt() * (std::f64::consts::FRAC_PI_2 * t).sin()
        })
        .unwrap();
        let ip = crate::curve::inner_product(&basis.eigenfunctions()[0], &kl1).unwrap();
        assert!(ip.abs() >= 0.95, "inner product {ip}");
    }

    #[test]
    fn rejects_bad_dimension() {
        let sample = wiener_sample(10, 5, 3);
        assert!(fit_pca_basis(&sample, 0).is_err());
        assert!(fit_pca_basis(&sample, 6).is_err());
        assert!(fit_pca_basis(&sample.select(&[0]).unwrap(), 1).is_err());
    }

    #[test]
    fn semimetric_on_eigen_directions() {
        let sample = wiener_sample(300, 50, 4);
        let basis = fit_pca_basis(&sample, 3).unwrap();
        let b = sample.curves()[0].clone();
        let shift = |v: &Curve, s: f64| {
            let vals = b
                .values()
                .iter()
                .zip(v.values())
                .map(|(x, y)| x + s * y)
                .collect();
            Curve::new(Arc::clone(b.grid()), vals).unwrap()
        };
        let v1 = &basis.eigenfunctions()[0];
        let v2 = &basis.eigenfunctions()[1];
        let a1 = shift(v1, 1.0);
        let a2 = shift(v2, 1.0);
        assert_eq!(pca_semimetric(&b, &b, &basis).unwrap(), 0.0);
        assert!((pca_semimetric_r(&a1, &b, &basis, 1).unwrap() - 1.0).abs() < 1e-8);
        assert!(pca_semimetric_r(&a2, &b, &basis, 1).unwrap() < 1e-8);

        let signed = LocatorSpec::signed_first_score();
        let am = shift(v1, -1.0);
        assert!((beta_locate(&am, &b, &signed, &basis).unwrap() + 1.0).abs() < 1e-8);
        assert_eq!(beta_locate(&b, &b, &signed, &basis).unwrap(), 0.0);
        assert_eq!(
            beta_locate(&b, &b, &LocatorSpec::pca_distance(2), &basis).unwrap(),
            0.0
        );
    }

    #[test]
    fn grid_mismatch() {
        let sample = wiener_sample(20, 10, 5);
        let basis = fit_pca_basis(&sample, 2).unwrap();
        let other = wiener_sample(2, 11, 6);
        let a = &other.curves()[0];
        let b = &other.curves()[1];
        assert!(matches!(
            pca_semimetric(a, b, &basis),
            Err(Error::GridMismatch)
        ));
        assert!(matches!(
            beta_locate(a, b, &LocatorSpec::signed_first_score(), &basis),
            Err(Error::GridMismatch)
        ));
        assert!(basis.scores(a).is_err());
    }

    #[test]
    fn semimetric_properties_on_random_pairs() {
        let sample = wiener_sample(100, 30, 7);
        let basis = fit_pca_basis(&sample, 6).unwrap();
        let curves = sample.curves();
        for i in 0..50 {
            let a = &curves[i];
            let b = &curves[99 - i];
            let l2 = l2_distance(a, b).unwrap();
            let mut prev = 0.0;
            for r in 1..=6 {
                let d = pca_semimetric_r(a, b, &basis, r).unwrap();
                assert!(d >= prev - 1e-14, "monotone in r");
                assert!(d <= l2 + 1e-8, "Bessel bound");
                prev = d;
            }
            let d1 = pca_semimetric_r(a, b, &basis, 1).unwrap();
            let signed = beta_locate(a, b, &LocatorSpec::signed_first_score(), &basis).unwrap();
            assert!(signed.abs() <= d1 + 1e-10);
            let spec = LocatorSpec::pca_distance(4);
            assert_eq!(
                beta_locate(a, b, &spec, &basis).unwrap(),
                pca_semimetric_r(a, b, &basis, 4).unwrap()
            );
            // score route agrees with the projection-of-difference route
            let sa = basis.scores(a).unwrap();
            let sb = basis.scores(b).unwrap();
            let d3 = pca_semimetric_r(a, b, &basis, 3).unwrap();
            assert!((score_distance(&sa, &sb, 3) - d3).abs() < 1e-12 * d3.max(1.0));
        }
    }

    #[test]
    fn csv_export_shape() {
        let sample = wiener_sample(20, 8, 8);
        let basis = fit_pca_basis(&sample, 3).unwrap();
        let mut buf = Vec::new();
        basis.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 9);
        assert!(lines[0].starts_with("t,v1[lambda="));
        assert_eq!(lines[1].split(',').count(), 4);
    }
}
