//! Grids, discretized curves and the functional sample container.
//!
//! Every curve lives on a [`Grid`] of points in `[0, 1]`. Integrals are
//! approximated with cell-width quadrature: the cells are the Voronoi cells of the
//! points, clipped to `[0, 1]`, so each point carries the width of the interval
//! of `[0, 1]` closer to it than to any other point. On an equally spaced open
//! grid this is the trapezoid rule with the end cells stretched to the boundary,
//! and the weights always sum to one.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};

/// Discretization points in `[0, 1]` with their quadrature weights.
#[derive(Debug, Clone)]
pub struct Grid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points
    }
}

impl Grid {
    /// Builds a grid from strictly increasing points in `[0, 1]`.
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(invalid(format!(
                "a grid needs at least 2 points, got {}",
                points.len()
            )));
        }
        if points
            .iter()
            .any(|t| !t.is_finite() || *t < 0.0 || *t > 1.0)
        {
            return Err(invalid("grid points must lie in [0, 1]"));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("grid points must be strictly increasing"));
        }
        let weights = cell_weights(&points);
        if weights.iter().any(|w| *w <= 0.0) {
            return Err(invalid("grid produced a non-positive quadrature weight"));
        }
        Ok(Self { points, weights })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Quadrature of pointwise products `∫ a·b` over raw value slices.
    pub(crate) fn integrate_product(&self, a: &[f64], b: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(a.iter().zip(b))
            .map(|(w, (x, y))| w * x * y)
            .sum()
    }
}

fn cell_weights(points: &[f64]) -> Vec<f64> {
    let p = points.len();
    (0..p)
        .map(|k| {
            let left = if k == 0 {
                0.0
            } else {
                0.5 * (points[k - 1] + points[k])
            };
            let right = if k + 1 == p {
                1.0
            } else {
                0.5 * (points[k] + points[k + 1])
            };
            right - left
        })
        .collect()
}

/// `p` equally spaced points `k / (p + 1)`, `k = 1..=p`, in the open interval `(0, 1)`.
pub fn make_uniform_grid(p: usize) -> Result<Grid> {
    if p < 2 {
        return Err(invalid(format!("grid size must be at least 2, got {p}")));
    }
    let denom = (p + 1) as f64;
    Grid::new((1..=p).map(|k| k as f64 / denom).collect())
}

/// A real-valued function sampled on a shared grid.
#[derive(Debug, Clone)]
pub struct Curve {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Curve {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: grid.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("curve values must be finite"));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().iter().map(|&t| f(t)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn same_grid(&self, other: &Curve) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub(crate) fn check_grid(&self, other: &Curve) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Pointwise difference `self − other`.
    pub fn sub(&self, other: &Curve) -> Result<Curve> {
        self.check_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Curve {
            grid: Arc::clone(&self.grid),
            values,
        })
    }
}

/// Quadrature approximation of `∫₀¹ a(t) b(t) dt`.
pub fn inner_product(a: &Curve, b: &Curve) -> Result<f64> {
    a.check_grid(b)?;
    Ok(a.grid.integrate_product(&a.values, &b.values))
}

/// L² distance `sqrt(∫ (a − b)²)`.
pub fn l2_distance(a: &Curve, b: &Curve) -> Result<f64> {
    a.check_grid(b)?;
    let sq: f64 = a
        .grid
        .weights()
        .iter()
        .zip(a.values.iter().zip(&b.values))
        .map(|(w, (x, y))| w * (x - y) * (x - y))
        .sum();
    Ok(sq.max(0.0).sqrt())
}

/// `n` pairs of (curve, scalar response) sharing one grid.
#[derive(Debug, Clone)]
pub struct FunctionalSample {
    curves: Vec<Curve>,
    responses: Vec<f64>,
}

impl FunctionalSample {
    pub fn new(curves: Vec<Curve>, responses: Vec<f64>) -> Result<Self> {
        if curves.len() != responses.len() {
            return Err(Error::LengthMismatch {
                left: curves.len(),
                right: responses.len(),
            });
        }
        if curves.is_empty() {
            return Err(invalid(
                "a functional sample needs at least one observation",
            ));
        }
        let first = &curves[0];
        if curves.iter().any(|c| !c.same_grid(first)) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { curves, responses })
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn curves(&self) -> &[Curve] {
        &self.curves
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.curves[0].grid()
    }

    /// Same sample with responses replaced.
    pub fn with_responses(&self, responses: Vec<f64>) -> Result<Self> {
        Self::new(self.curves.clone(), responses)
    }

    /// Sub-sample keeping the listed indices, in order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let curves = indices.iter().map(|&i| self.curves[i].clone()).collect();
        let responses = indices.iter().map(|&i| self.responses[i]).collect();
        Self::new(curves, responses)
    }

    /// Writes the sample as CSV: header `response,t_1,...,t_p`, then one row per
    /// observation. Values use the shortest representation that round-trips.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let mut header = vec!["response".to_string()];
        header.extend(self.grid().points().iter().map(|t| t.to_string()));
        out.write_record(&header)?;
        for (curve, y) in self.curves.iter().zip(&self.responses) {
            let mut row = vec![y.to_string()];
            row.extend(curve.values().iter().map(|v| v.to_string()));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.len() < 3 {
            return Err(invalid(
                "sample header needs a response column and at least 2 grid points",
            ));
        }
        let points = header
            .iter()
            .skip(1)
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| invalid(format!("grid point in header: {e}")))?;
        let grid = Arc::new(Grid::new(points)?);
        let mut curves = Vec::new();
        let mut responses = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            let parsed = record
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| invalid(format!("row {}: {e}", line + 1)))?;
            if parsed.len() != grid.len() + 1 {
                return Err(invalid(format!(
                    "row {}: expected {} fields, got {}",
                    line + 1,
                    grid.len() + 1,
                    parsed.len()
                )));
            }
            responses.push(parsed[0]);
            curves.push(Curve::new(Arc::clone(&grid), parsed[1..].to_vec())?);
        }
        Self::new(curves, responses)
    }

    pub fn read_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(file).map_err(|e| match e {
            Error::InvalidArgument(reason) => Error::MalformedSample {
                path: path.to_path_buf(),
                reason,
            },
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(p: usize) -> Arc<Grid> {
        Arc::new(make_uniform_grid(p).unwrap())
    }

    #[test]
    fn uniform_grid_layout() {
        let g = make_uniform_grid(100).unwrap();
        assert_eq!(g.len(), 100);
        assert_eq!(g.points()[0], 1.0 / 101.0);
        assert_eq!(g.points()[99], 100.0 / 101.0);

        let g2 = make_uniform_grid(2).unwrap();
        assert_eq!(g2.points(), &[1.0 / 3.0, 2.0 / 3.0]);

        let g3 = make_uniform_grid(3).unwrap();
        assert_eq!(g3.points()[1], 0.5);
    }

    #[test]
    fn uniform_grid_rejects_small() {
        assert!(matches!(
            make_uniform_grid(1),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            make_uniform_grid(0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(vec![0.2, 0.1]).is_err());
        assert!(Grid::new(vec![0.2, 0.2]).is_err());
        assert!(Grid::new(vec![-0.1, 0.5]).is_err());
        assert!(Grid::new(vec![0.5]).is_err());
        assert!(Grid::new(vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn weights_positive_and_sum_to_span() {
        for p in [2, 3, 24, 100, 1000] {
            let g = make_uniform_grid(p).unwrap();
            assert!(g.weights().iter().all(|w| *w > 0.0));
            let s: f64 = g.weights().iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "p={p} sum={s}");
        }
    }

    #[test]
    fn constant_one_integrates_to_weight_sum() {
        let g = grid(37);
        let one = Curve::from_fn(Arc::clone(&g), |_| 1.0).unwrap();
        let ip = inner_product(&one, &one).unwrap();
        let wsum: f64 = g.weights().iter().sum();
        assert_eq!(ip, wsum);
        assert!((ip - 1.0).abs() < 1e-12);
    }

    #[test]
    fn integral_of_t() {
        let g = grid(1000);
        let t = Curve::from_fn(Arc::clone(&g), |t| t).unwrap();
        let one = Curve::from_fn(g, |_| 1.0).unwrap();
        assert!((inner_product(&t, &one).unwrap() - 0.5).abs() < 1e-3);
    }

    #[test]
    fn kl_eigenfunctions_orthogonal() {
        let g = grid(2000);
        let v = |j: f64| move |t: f64| 2f64.sqrt() * ((j - 0.5) * std::f64::consts::PI * t).sin();
        let v1 = Curve::from_fn(Arc::clone(&g), v(1.0)).unwrap();
        let v2 = Curve::from_fn(g, v(2.0)).unwrap();
        assert!(inner_product(&v1, &v2).unwrap().abs() < 1e-3);
        assert!((inner_product(&v1, &v1).unwrap() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn l2_basic() {
        let g = grid(50);
        let one = Curve::from_fn(Arc::clone(&g), |_| 1.0).unwrap();
        let zero = Curve::from_fn(g, |_| 0.0).unwrap();
        assert_eq!(l2_distance(&one, &one).unwrap(), 0.0);
        assert!((l2_distance(&one, &zero).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_mismatch_detected() {
        let a = Curve::from_fn(grid(10), |t| t).unwrap();
        let b = Curve::from_fn(grid(11), |t| t).unwrap();
        assert!(matches!(inner_product(&a, &b), Err(Error::GridMismatch)));
        assert!(matches!(l2_distance(&a, &b), Err(Error::GridMismatch)));
        // Content equality, not pointer identity.
        let c = Curve::from_fn(grid(10), |t| t * t).unwrap();
        assert!(inner_product(&a, &c).is_ok());
    }

    #[test]
    fn curve_rejects_bad_values() {
        let g = grid(3);
        assert!(Curve::new(Arc::clone(&g), vec![1.0, 2.0]).is_err());
        assert!(Curve::new(g, vec![1.0, f64::NAN, 2.0]).is_err());
    }

    #[test]
    fn sample_validation() {
        let g = grid(4);
        let c = Curve::from_fn(Arc::clone(&g), |t| t).unwrap();
        assert!(FunctionalSample::new(vec![c.clone()], vec![]).is_err());
        assert!(FunctionalSample::new(vec![], vec![]).is_err());
        let other = Curve::from_fn(grid(5), |t| t).unwrap();
        assert!(matches!(
            FunctionalSample::new(vec![c, other], vec![1.0, 2.0]),
            Err(Error::GridMismatch)
        ));
    }

    fn curve_strategy(g: Arc<Grid>) -> impl Strategy<Value = Curve> {
        prop::collection::vec(-10.0f64..10.0, g.len())
            .prop_map(move |v| Curve::new(Arc::clone(&g), v).unwrap())
    }

    proptest! {
        #[test]
        fn inner_product_symmetric_bilinear(
            (a, b, c) in {
                let g = grid(17);
                (curve_strategy(Arc::clone(&g)), curve_strategy(Arc::clone(&g)), curve_strategy(g))
            },
            s in -5.0f64..5.0,
        ) {
            let ab = inner_product(&a, &b).unwrap();
            let ba = inner_product(&b, &a).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-12 * ab.abs().max(1.0));
            let scaled: Vec<f64> = a.values().iter().zip(c.values()).map(|(x, y)| s * x + y).collect();
            let sac = Curve::new(Arc::clone(a.grid()), scaled).unwrap();
            let lhs = inner_product(&sac, &b).unwrap();
            let rhs = s * ab + inner_product(&c, &b).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (lhs.abs() + rhs.abs()).max(1.0));
        }

        #[test]
        fn l2_symmetric_and_triangle(
            (a, b, c) in {
                let g = grid(13);
                (curve_strategy(Arc::clone(&g)), curve_strategy(Arc::clone(&g)), curve_strategy(g))
            }
        ) {
            let ab = l2_distance(&a, &b).unwrap();
            prop_assert_eq!(ab, l2_distance(&b, &a).unwrap());
            let ac = l2_distance(&a, &c).unwrap();
            let cb = l2_distance(&c, &b).unwrap();
            prop_assert!(ab <= ac + cb + 1e-10);
        }

        #[test]
        fn csv_round_trip_is_bit_exact(
            rows in prop::collection::vec(
                (prop::num::f64::NORMAL, prop::collection::vec(prop::num::f64::NORMAL, 6)),
                1..8,
            )
        ) {
            let g = grid(6);
            let curves = rows.iter().map(|(_, v)| Curve::new(Arc::clone(&g), v.clone()).unwrap()).collect();
            let ys = rows.iter().map(|(y, _)| *y).collect();
            let sample = FunctionalSample::new(curves, ys).unwrap();
            let mut buf = Vec::new();
            sample.write_csv(&mut buf).unwrap();
            let back = FunctionalSample::read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back.grid().points(), g.points());
            prop_assert_eq!(back.grid().weights(), g.weights());
            for (x, y) in back.responses().iter().zip(sample.responses()) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
            for (cx, cy) in back.curves().iter().zip(sample.curves()) {
                for (x, y) in cx.values().iter().zip(cy.values()) {
                    prop_assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
    }

    #[test]
    fn read_csv_rejects_ragged_rows() {
        let text = "response,0.25,0.75\n1.0,2.0\n";
        assert!(FunctionalSample::read_csv(text.as_bytes()).is_err());
    }
}
