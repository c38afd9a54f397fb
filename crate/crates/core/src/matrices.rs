//! Gauge and distance matrices of n-point spaces, and the permutation action.
//!
//! A *gauge matrix* is a symmetric real n x n matrix with zero diagonal: the
//! matrix of a symmetric pairwise function on n points, with no positivity or
//! triangle requirements. A *distance matrix* additionally has nonnegative
//! entries satisfying all n^3 triangle inequalities (pseudo-metrics, with zero
//! off-diagonal entries, are allowed). Both carry the scaled l2 norm
//! `|f|^2 = (1/n^2) sum f_ij^2`, under which the symmetric group acts
//! isometrically by relabeling points.
//!
//! Indices are 0-based internally and 1-based in user-facing reports.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kahan;

/// Relative tolerance under which construction symmetrizes an input matrix
/// ((f + f^T)/2); larger asymmetry is a construction error.
pub const SYMMETRY_REL_TOL: f64 = 1e-12;

/// Default absolute tolerance for triangle-inequality validation.
pub const DEFAULT_METRIC_TOL: f64 = 1e-9;

/// Symmetric n x n matrix with zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeMatrix {
    entries: DMatrix<f64>,
}

impl GaugeMatrix {
    /// Build from a square matrix. Asymmetry up to [`SYMMETRY_REL_TOL`]
    /// (relative to the largest entry) is symmetrized; the same rule applies
    /// to the diagonal, which is forced to zero when already negligible.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = entries.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        let n = rows;
        for j in 0..n {
            for i in 0..n {
                if !entries[(i, j)].is_finite() {
                    return Err(Error::NonFinite { i: i + 1, j: j + 1 });
                }
            }
        }
        let scale = entries.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
        for i in 0..n {
            for j in (i + 1)..n {
                let gap = (entries[(i, j)] - entries[(j, i)]).abs();
                if gap > SYMMETRY_REL_TOL * scale {
                    return Err(Error::NotSymmetric {
                        i: i + 1,
                        j: j + 1,
                        gap,
                    });
                }
            }
            let d = entries[(i, i)];
            if d.abs() > SYMMETRY_REL_TOL * scale {
                return Err(Error::NonzeroDiagonal { i: i + 1, value: d });
            }
        }
        let mut sym = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    sym[(i, j)] = 0.5 * (entries[(i, j)] + entries[(j, i)]);
                }
            }
        }
        Ok(Self { entries: sym })
    }

    /// Build from row vectors.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        for r in rows {
            if r.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    cols: r.len(),
                });
            }
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Build a valid gauge by querying `f(i, j)` only for i < j.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = f(i, j);
                if !v.is_finite() {
                    return Err(Error::NonFinite { i: i + 1, j: j + 1 });
                }
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(Self { entries: m })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            entries: DMatrix::zeros(n, n),
        }
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n())
            .map(|i| (0..self.n()).map(|j| self.entries[(i, j)]).collect())
            .collect()
    }

    /// Scaled squared l2 norm: `(1/n^2) sum_{i,j} f_ij^2`.
    pub fn l2_norm_sq(&self) -> f64 {
        let n = self.n() as f64;
        kahan::sum(self.entries.iter().map(|x| x * x)) / (n * n)
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// Relabel points: `result[i][j] = self[sigma(i)][sigma(j)]`.
    ///
    /// With this orientation, `permute(permute(g, sigma), tau)` equals
    /// `permute(g, sigma.compose(&tau))` where `compose` is ordinary function
    /// composition `(sigma . tau)(i) = sigma(tau(i))`.
    pub fn permute(&self, sigma: &Permutation) -> Result<GaugeMatrix> {
        if sigma.n() != self.n() {
            return Err(Error::DimensionMismatch(self.n(), sigma.n()));
        }
        let m = DMatrix::from_fn(self.n(), self.n(), |i, j| {
            self.entries[(sigma.apply(i), sigma.apply(j))]
        });
        Ok(GaugeMatrix { entries: m })
    }

    /// Entrywise difference (gauges are closed under subtraction).
    pub fn sub(&self, other: &GaugeMatrix) -> Result<GaugeMatrix> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch(self.n(), other.n()));
        }
        Ok(GaugeMatrix {
            entries: &self.entries - &other.entries,
        })
    }

    /// Entrywise square. The result is a gauge, not a metric, even when
    /// `self` is one: squaring does not preserve the triangle inequality.
    pub fn entrywise_sq(&self) -> GaugeMatrix {
        GaugeMatrix {
            entries: self.entries.map(|x| x * x),
        }
    }

    pub fn scale(&self, c: f64) -> GaugeMatrix {
        GaugeMatrix {
            entries: self.entries.map(|x| c * x),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

/// A bijection of {0, .., n-1}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            map: (0..n).collect(),
        }
    }

    pub fn from_zero_based(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &v in &map {
            if v >= n || seen[v] {
                return Err(Error::InvalidPermutation(format!(
                    "{map:?} is not a bijection of 0..{n}"
                )));
            }
            seen[v] = true;
        }
        Ok(Self { map })
    }

    pub fn from_one_based(map: &[usize]) -> Result<Self> {
        let shifted: Vec<usize> = map
            .iter()
            .map(|&v| {
                v.checked_sub(1).ok_or_else(|| {
                    Error::InvalidPermutation(format!("index 0 in 1-based permutation {map:?}"))
                })
            })
            .collect::<Result<_>>()?;
        Self::from_zero_based(shifted)
    }

    pub fn n(&self) -> usize {
        self.map.len()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.map.iter().map(|&v| v + 1).collect()
    }

    /// Function composition: `(self . other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch(self.n(), other.n()));
        }
        Ok(Permutation {
            map: (0..self.n()).map(|i| self.apply(other.apply(i))).collect(),
        })
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.n()];
        for (i, &v) in self.map.iter().enumerate() {
            inv[v] = i;
        }
        Permutation { map: inv }
    }

    /// Permutation matrix with `m[i][sigma(i)] = 1`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n(), self.n());
        for i in 0..self.n() {
            m[(i, self.map[i])] = 1.0;
        }
        m
    }
}

/// Why a gauge matrix failed metric validation. Indices are 1-based.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MetricViolation {
    NegativeEntry {
        i: usize,
        j: usize,
        value: f64,
    },
    Triangle {
        i: usize,
        j: usize,
        k: usize,
        lhs: f64,
        rhs: f64,
    },
}

impl fmt::Display for MetricViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricViolation::NegativeEntry { i, j, value } => {
                write!(f, "negative entry d[{i}][{j}] = {value}")
            }
            MetricViolation::Triangle { i, j, k, lhs, rhs } => {
                write!(
                    f,
                    "triangle violation at ({i}, {j}, {k}): d[{i}][{j}] = {lhs} > d[{i}][{k}] + d[{k}][{j}] = {rhs}"
                )
            }
        }
    }
}

/// Outcome of [`validate_metric`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MetricCheck {
    Metric,
    Violation(MetricViolation),
}

impl MetricCheck {
    pub fn is_metric(&self) -> bool {
        matches!(self, MetricCheck::Metric)
    }

    pub fn violation(&self) -> Option<MetricViolation> {
        match self {
            MetricCheck::Metric => None,
            MetricCheck::Violation(v) => Some(*v),
        }
    }
}

/// Check nonnegativity and all n^3 triangle inequalities up to the additive
/// tolerance `tol`. Failure is reported with the first violating pair or
/// triple in lexicographic order (1-based indices), not as an error.
pub fn validate_metric(f: &GaugeMatrix, tol: f64) -> MetricCheck {
    let n = f.n();
    for i in 0..n {
        for j in 0..n {
            let v = f.entry(i, j);
            if v < -tol {
                return MetricCheck::Violation(MetricViolation::NegativeEntry {
                    i: i + 1,
                    j: j + 1,
                    value: v,
                });
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            let d_ij = f.entry(i, j);
            for k in 0..n {
                let rhs = f.entry(i, k) + f.entry(k, j);
                if d_ij > rhs + tol {
                    return MetricCheck::Violation(MetricViolation::Triangle {
                        i: i + 1,
                        j: j + 1,
                        k: k + 1,
                        lhs: d_ij,
                        rhs,
                    });
                }
            }
        }
    }
    MetricCheck::Metric
}

/// Gauge matrix that passed metric validation: nonnegative entries and the
/// triangle inequality. Zero off-diagonal entries are allowed (pseudo-metric).
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    gauge: GaugeMatrix,
}

impl DistanceMatrix {
    /// Validate with [`DEFAULT_METRIC_TOL`].
    pub fn new(gauge: GaugeMatrix) -> Result<Self> {
        Self::with_tol(gauge, DEFAULT_METRIC_TOL)
    }

    pub fn with_tol(gauge: GaugeMatrix, tol: f64) -> Result<Self> {
        match validate_metric(&gauge, tol) {
            MetricCheck::Metric => Ok(Self { gauge }),
            MetricCheck::Violation(v) => Err(Error::NotMetric(v)),
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(GaugeMatrix::from_rows(rows)?)
    }

    pub fn n(&self) -> usize {
        self.gauge.n()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.gauge.entry(i, j)
    }

    pub fn as_gauge(&self) -> &GaugeMatrix {
        &self.gauge
    }

    pub fn into_gauge(self) -> GaugeMatrix {
        self.gauge
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        self.gauge.as_matrix()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.gauge.l2_norm_sq()
    }

    pub fn permute(&self, sigma: &Permutation) -> Result<DistanceMatrix> {
        Ok(DistanceMatrix {
            gauge: self.gauge.permute(sigma)?,
        })
    }

    /// Entrywise `d^c` for an exponent `0 < c <= 1`. Concavity of `x^c` keeps
    /// the triangle inequality, so the result is again a distance matrix.
    pub fn power_transform(&self, c: f64) -> Result<DistanceMatrix> {
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::PowerOutOfRange(c));
        }
        let n = self.n();
        let g = GaugeMatrix::from_fn(n, |i, j| self.entry(i, j).powf(c))?;
        DistanceMatrix::new(g)
    }
}

impl From<DistanceMatrix> for GaugeMatrix {
    fn from(d: DistanceMatrix) -> Self {
        d.gauge
    }
}
